#pragma once

#include <cstdint>
#include <string_view>

namespace hst {

// SplitMix64 finalizer. Stateless; used for seed derivation and for keying
// draws to structural ids (e.g. one noise value per tree cell).
uint64_t mix64(uint64_t x);

// FNV-1a over the label bytes. Stable across platforms.
uint64_t hash_label(std::string_view label);

// Deterministic pseudo-random stream identified by (seed, label).
// The same pair always yields the same sequence, no matter what other
// streams were consumed in between. keyed() derives an independent stream
// from the identity seed and a structural key; the derived stream does not
// depend on how far this stream has advanced, which is what lets a
// distributed run and a sequential run draw identical per-cell noise.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view label);

  uint64_t next_u64();
  double uniform01();                  // strictly inside (0, 1)
  double uniform(double a, double b);  // in (a, b)
  double gaussian();                   // standard normal (Box-Muller)

  RngStream keyed(uint64_t key) const;

  uint64_t identity() const { return identity_; }

 private:
  explicit RngStream(uint64_t derived_identity);

  uint64_t identity_;  // fixed at construction
  uint64_t counter_;   // advances per draw
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hst
