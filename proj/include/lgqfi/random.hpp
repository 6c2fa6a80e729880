#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace lgqfi {

/// Philox4x32-10 counter-based generator, as in Random123. Each
/// (key, counter) pair maps to four independent 32-bit words, so a stream can
/// be addressed by shot index without any sequential state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

/// Four uniforms in [0, 1) drawn at (seed, stream, index): two 53-bit
/// doubles per call are formed from the four words.
struct UniformPair {
  double u0, u1;
};

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

inline UniformPair uniforms(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const auto out = Philox4x32::block({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
                                     Philox4x32::key_from_seed(seed));
  return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
}

/// Two independent standard normals by Box-Muller.
inline std::array<double, 2> normals(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const auto u = uniforms(seed, stream, index);
  const double r = std::sqrt(-2.0 * std::log1p(-u.u0));  // 1 - u0 lies in (0, 1]
  const double phi = 2.0 * std::numbers::pi * u.u1;
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace lgqfi
