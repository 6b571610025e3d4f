#pragma once

#include <array>
#include <cstdint>

namespace stoca {

// Counter-based generator (Philox 4x32-10). Every draw is a pure function of
// (seed, stream, trial, t, i), so simulations are reproducible cell-by-cell
// regardless of evaluation order and no generator state is ever shared.

namespace detail {

inline constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
  const std::uint64_t lo0 = std::uint64_t{kPhiloxM4x32A} * ctr[0];
  const std::uint64_t lo1 = std::uint64_t{kPhiloxM4x32B} * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(lo0 >> 32);
  const auto hi1 = static_cast<std::uint32_t>(lo1 >> 32);
  ctr = {hi1 ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(lo1),
         hi0 ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(lo0)};
  key[0] += kPhiloxW32A;
  key[1] += kPhiloxW32B;
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                               std::array<std::uint32_t, 4> ctr) {
  for (int round = 0; round < 10; ++round) detail::philox_round(ctr, key);
  return ctr;
}

// Purpose tags keep draws for different roles out of each other's streams.
enum class Stream : std::uint32_t {
  kErrorField = 0x45525246u,   // per-cell perturbation outcomes
  kInitial = 0x494e4954u,      // random initial configurations
  kPercolation = 0x50455243u,  // spread-graph edge states
  kGeneric = 0x47454e52u,      // ad hoc test draws
};

struct CounterRng {
  std::uint64_t seed = 0;
  Stream stream = Stream::kGeneric;

  std::array<std::uint32_t, 4> raw(std::uint32_t trial, std::uint32_t t,
                                   std::uint32_t i) const {
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed & 0xffffffffu),
        static_cast<std::uint32_t>(seed >> 32)};
    return philox4x32(key, {i, t, trial, static_cast<std::uint32_t>(stream)});
  }

  std::uint64_t bits64(std::uint32_t trial, std::uint32_t t, std::uint32_t i) const {
    const auto out = raw(trial, t, i);
    return (std::uint64_t{out[0]} << 32) | out[1];
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform(std::uint32_t trial, std::uint32_t t, std::uint32_t i) const {
    return static_cast<double>(bits64(trial, t, i) >> 11) * 0x1.0p-53;
  }
};

}  // namespace stoca
