// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/rng.hpp"

namespace ppctrl {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index1, std::uint64_t index2) {
  std::uint64_t x = mix64(master ^ mix64(hash_tag(tag)));
  x = mix64(x ^ index1);
  return mix64(x ^ index2);
}

namespace detail {

ZigguratTables::ZigguratTables() {
  const double m1 = 2147483648.0;
  double dn = 3.442619855899;
  const double vn = 9.91256303526217e-3;
  r = dn;
  double tn = dn;
  const double q = vn / std::exp(-0.5 * dn * dn);
  k[0] = static_cast<std::uint32_t>((dn / q) * m1);
  k[1] = 0;
  w[0] = q / m1;
  w[127] = dn / m1;
  f[0] = 1.0;
  f[127] = std::exp(-0.5 * dn * dn);
  for (int i = 126; i >= 1; --i) {
    dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
    k[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
    tn = dn;
    f[i] = std::exp(-0.5 * dn * dn);
    w[i] = dn / m1;
  }
}

const ZigguratTables g_ziggurat;

}  // namespace detail

RngStream::RngStream(std::uint64_t seed) {
  // SplitMix64 chain, as recommended for seeding xoshiro state.
  std::uint64_t x = seed;
  for (auto& word : s_) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    word = z ^ (z >> 31);
  }
}

double RngStream::normal_fixup(int iz, std::int32_t hz) {
  const auto& zig = detail::g_ziggurat;
  for (;;) {
    if (iz == 0) {
      // Tail beyond r, by exponential rejection.
      double x, y;
      do {
        x = -std::log(uniform_pos()) / zig.r;
        y = -std::log(uniform_pos());
      } while (y + y < x * x);
      return hz > 0 ? zig.r + x : -(zig.r + x);
    }
    const double x = hz * zig.w[iz];
    if (zig.f[iz] + uniform() * (zig.f[iz - 1] - zig.f[iz]) <
        std::exp(-0.5 * x * x)) {
      return x;
    }
    const std::uint64_t u = next_u64();
    iz = static_cast<int>(u & 127u);
    hz = static_cast<std::int32_t>(static_cast<std::uint32_t>(u >> 32));
    const std::uint32_t az =
        hz < 0 ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(hz))
               : static_cast<std::uint32_t>(hz);
    if (az < zig.k[iz]) return hz * zig.w[iz];
  }
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Widening multiply with rejection; no modulo bias.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(r) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

}  // namespace ppctrl
