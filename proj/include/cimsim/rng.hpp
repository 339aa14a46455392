#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cimsim {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Folds an ordered list of keys (image, layer, column, purpose...) into one stream id.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// A reproducible Gaussian/uniform source identified by (seed, stream id).
///
/// Two streams with the same pair yield identical sequences; distinct stream ids are
/// decorrelated through a splitmix-mixed engine seed. Streams are owned by callers,
/// there is no global generator.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(stream ^ 0x5851f42d4c957f2dULL);
    engine_.seed(splitmix64(a ^ splitmix64(b)));
    normal_.reset();
  }

  double gaussian(double sigma) {
    if (sigma == 0.0) return 0.0;
    return sigma * normal_(engine_);
  }

  double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cimsim
