#pragma once

#include <iosfwd>
#include <string>

#include "hst/dataset.hpp"

namespace hst {

// Reads one point per row. Columns may be separated by commas or
// whitespace. If the first row contains a non-numeric token it is treated
// as a header and skipped. Throws DataError on ragged rows, non-finite or
// unparseable values, or an empty file.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const Dataset& data);
void write_csv_file(const std::string& path, const Dataset& data);

}  // namespace hst
