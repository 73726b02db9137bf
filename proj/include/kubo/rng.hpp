#pragma once

#include <cmath>
#include <cstdint>

namespace kubo {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Stateless generator: every draw is a hash of (seed, stream, index).
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t bits(std::uint64_t index) const {
    std::uint64_t h = detail::splitmix64(seed_);
    h = detail::splitmix64(h ^ stream_);
    return detail::splitmix64(h ^ index);
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t index) const {
    return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential with the given rate, by inversion.
  double exponential(std::uint64_t index, double rate) const { return -std::log(uniform(index)) / rate; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace kubo
