// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ppctrl {

// SplitMix64 finalizer; bijective on uint64.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a hash of a short tag string.
std::uint64_t hash_tag(std::string_view tag);

// Every random stream in the project is derived from one master seed as
//   seed = mix64(mix64(mix64(master ^ mix64(hash_tag(tag))) ^ index1) ^ index2),
// so any (tag, index) pair names an independent stream and results do not
// depend on scheduling or thread count.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index1 = 0, std::uint64_t index2 = 0);

namespace detail {

// Ziggurat tables for the standard normal (128 layers, 2^31 grid).
struct ZigguratTables {
  std::uint32_t k[128];
  double w[128];
  double f[128];
  double r;
  ZigguratTables();
};
extern const ZigguratTables g_ziggurat;

}  // namespace detail

/// Counter-seeded random stream: xoshiro256++ underneath, with uniform,
/// exponential and ziggurat normal variates. Hot paths are inline; the
/// rare ziggurat wedge/tail fixup stays out of line.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  // (0, 1]
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }
  // uniform on [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // mean-1 exponential
  double exponential() { return -std::log(uniform_pos()); }

  // standard normal
  double normal() {
    // One 64-bit draw per attempt: low 7 bits pick the layer, an
    // independent signed 32-bit word supplies the abscissa.
    const std::uint64_t u = next_u64();
    const int iz = static_cast<int>(u & 127u);
    const std::int32_t hz =
        static_cast<std::int32_t>(static_cast<std::uint32_t>(u >> 32));
    const std::uint32_t az =
        hz < 0 ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(hz))
               : static_cast<std::uint32_t>(hz);
    if (az < detail::g_ziggurat.k[iz]) return hz * detail::g_ziggurat.w[iz];
    return normal_fixup(iz, hz);
  }

  // integer uniform on [0, n)
  std::uint64_t below(std::uint64_t n);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  double normal_fixup(int iz, std::int32_t hz);

  std::uint64_t s_[4];
};

}  // namespace ppctrl
