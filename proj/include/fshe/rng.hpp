#ifndef FSHE_RNG_HPP
#define FSHE_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fshe {

/// Philox-4x64-10 block function (counter-based; no state beyond the counter).
inline std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr, std::array<std::uint64_t, 2> key) {
  constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t m1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t w1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 p0 = static_cast<unsigned __int128>(m0) * ctr[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
    const auto hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

/// Named random stream: (seed, purpose, replica, stream) fixes every draw.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t replica = 0;
  std::uint64_t purpose = 0;
};

/// Purposes used by the library; coefficient noise uses the coefficient index as the stream.
namespace purpose {
inline constexpr std::uint64_t coefficient_noise = 0;
inline constexpr std::uint64_t invariant_sample = 1;
inline constexpr std::uint64_t pair_sampling = 2;
inline constexpr std::uint64_t user = 3;
}  // namespace purpose

/// Sequential standard normals from one named stream, via Box-Muller on 53-bit uniforms.
class NormalStream {
 public:
  explicit NormalStream(const RngSpec& spec) : spec_(spec) {}

  double operator()() {
    if (pos_ == 4) refill();
    return cache_[pos_++];
  }

  /// Uniform in (0,1), drawn from the same counter space as the normals (separate block index range).
  double uniform() {
    const auto block = philox4x64({uniform_block_++ | (std::uint64_t{1} << 63), spec_.replica, spec_.stream, spec_.purpose},
                                  {spec_.seed, 0x5EEDC0DEULL});
    return to_unit(block[0]);
  }

 private:
  static double to_unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53; }

  void refill() {
    const auto block = philox4x64({block_++, spec_.replica, spec_.stream, spec_.purpose}, {spec_.seed, 0x5EEDC0DEULL});
    for (int pair = 0; pair < 2; ++pair) {
      const double u1 = to_unit(block[2 * pair]);
      const double u2 = to_unit(block[2 * pair + 1]);
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      cache_[2 * pair] = radius * std::cos(angle);
      cache_[2 * pair + 1] = radius * std::sin(angle);
    }
    pos_ = 0;
  }

  RngSpec spec_;
  std::uint64_t block_ = 0;
  std::uint64_t uniform_block_ = 0;
  std::array<double, 4> cache_{};
  int pos_ = 4;
};

}  // namespace fshe

#endif  // FSHE_RNG_HPP
