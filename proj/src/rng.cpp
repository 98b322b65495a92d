#include "hst/rng.hpp"

#include <cmath>

namespace hst {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr uint64_t kKeySalt = 0xD1B54A32D192ED03ULL;

// Converts 53 high bits to a double strictly inside (0, 1). The +0.5
// offset keeps both endpoints unreachable, so log(u) and log(1-u) are
// always finite.
double open_unit(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}
}  // namespace

uint64_t mix64(uint64_t x) {
  x += kGolden;
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

uint64_t hash_label(std::string_view label) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

RngStream::RngStream(uint64_t seed, std::string_view label)
    : identity_(mix64(seed ^ mix64(hash_label(label)))), counter_(0) {}

RngStream::RngStream(uint64_t derived_identity)
    : identity_(derived_identity), counter_(0) {}

uint64_t RngStream::next_u64() {
  counter_ += kGolden;
  return mix64(identity_ ^ counter_);
}

double RngStream::uniform01() { return open_unit(next_u64()); }

double RngStream::uniform(double a, double b) {
  return a + (b - a) * uniform01();
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

RngStream RngStream::keyed(uint64_t key) const {
  return RngStream(mix64(identity_ ^ mix64(key ^ kKeySalt)));
}

}  // namespace hst
