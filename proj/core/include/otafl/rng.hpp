#pragma once

#include <cstdint>
#include <vector>

namespace otafl {

/// SplitMix64 finalizer. Good avalanche, cheap, and fully portable.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

/// Counter-based deterministic random stream.
///
/// Each draw is a pure function of (seed, stream, counter), so a stream can be
/// replayed from any position and substreams keyed by (round, receiver, ...)
/// are independent. This is what makes simulated noise reproducible per
/// (seed, stream position) and safe to evaluate in parallel.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(hash_combine(mix64(seed), stream)) {}

  std::uint64_t next_u64() { return mix64(base_ + counter_++ * 0x9e3779b97f4a7c15ULL); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  /// Standard normal via Box-Muller. Consumes exactly two counter positions,
  /// which keeps replay positions well defined.
  double gaussian();

  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates; spelled out so results do not depend on the standard
    // library's unspecified std::shuffle algorithm.
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t position() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  /// Independent stream derived from this one's identity.
  Rng substream(std::uint64_t key) const {
    Rng r(0);
    r.base_ = hash_combine(base_, key);
    r.counter_ = 0;
    return r;
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace otafl
