#pragma once

#include <cstdint>

#include "aggshock/normal.hpp"

namespace aggshock {

// Counter-based stream: output i of stream s is a pure function of
// (seed, s, i), so replications can run on any thread layout and still
// produce identical draws. One uniform per normal via the inverse CDF.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(derive_key(seed, stream_id)), counter_(0) {}

  std::uint64_t next_u64() {
    // splitmix64 step with the stream key as the base state
    std::uint64_t z = key_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // strictly inside (0,1) so the normal quantile is always defined
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return std_normal_quantile(uniform()); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
    return z ^ (z >> 33);
  }
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
    return mix(mix(seed + 0x632be59bd9b4e019ULL) ^ (stream_id * 0xa24baed4963ee407ULL + 1));
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace aggshock
