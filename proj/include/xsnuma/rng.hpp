#pragma once

#include <cstdint>

// Counter-based random draws built on splitmix64. Every value is a pure
// function of (seed, counter), so results do not depend on thread count or
// iteration order -- a worker can jump straight to any lookup index.

namespace xsnuma {

inline constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ull;

// Output/finalizer stage of splitmix64 (Vigna, public domain). Also used
// standalone as a 64-bit avalanche mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Splitmix64 {
 public:
  explicit constexpr Splitmix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kSplitmixGamma;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

// Map a 64-bit word to a double strictly inside (0,1). 52 bits keep the
// +0.5 exactly representable, so the endpoints stay out: smallest value is
// 2^-53, largest is 1 - 2^-53.
constexpr double u64_to_open_unit(std::uint64_t x) noexcept {
  return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

// The two per-lookup draws: an energy in (0,1) and a uniform used to pick
// the material by inverse CDF.
struct LookupDraw {
  double p_energy;
  double material_u;
};

constexpr LookupDraw rng_lookup(std::uint64_t seed, std::uint64_t lookup_index) noexcept {
  Splitmix64 s(seed ^ lookup_index);
  const std::uint64_t a = s.next();
  const std::uint64_t b = s.next();
  return {u64_to_open_unit(a), u64_to_open_unit(b)};
}

// Independent named streams for dataset generation, derived from the dataset
// seed. Tags keep e.g. material draws from perturbing grid energies.
constexpr Splitmix64 seeded_stream(std::uint64_t seed, std::uint64_t tag,
                                   std::uint64_t index = 0) noexcept {
  return Splitmix64(mix64(seed ^ mix64(tag)) ^ mix64(index + 1));
}

}  // namespace xsnuma
