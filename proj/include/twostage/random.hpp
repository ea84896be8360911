#pragma once

#include <cstdint>
#include <random>

namespace twostage {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a stream index. The mapping is
/// a fixed hash, so child seeds do not depend on the order of derivation.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// A private random stream. Never shared between threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::mt19937_64& engine() noexcept { return engine_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  /// Number of observations drawn through sample_obs so far.
  std::uint64_t observations_drawn() const noexcept { return observations_; }
  void count_observation() noexcept { ++observations_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t observations_ = 0;
};

}  // namespace twostage
