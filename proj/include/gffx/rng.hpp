#pragma once

#include <cstdint>
#include <vector>

namespace gffx {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Full-avalanche 64-bit hash;
/// also the stream-derivation hash used throughout.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derives the seed of an independent stream from a master seed.
/// sub_seed = mix64(master + (index+1) * odd constant), so streams are O(1)
/// to derive and replica i of a run never depends on replica j.
constexpr std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
  return mix64(master + (index + 1) * 0x9e3779b97f4a7c15ull);
}

/// Counter-based generator: state walks by the golden-ratio gamma, each output
/// is mix64 of the state (SplitMix64). Deterministic and portable; Gaussians
/// come from plain Box-Muller so a stream's output is a pure function of
/// (seed, draw index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : state_(seed), stream_id_(stream_id) {}

  /// Stream `index` under `master`; remembers the index for provenance.
  static Rng for_stream(std::uint64_t master, std::uint64_t index) {
    return Rng(derive_stream(master, index), index);
  }

  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1], never zero (safe under log).
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_below(std::uint64_t n);

  double gaussian();

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  std::uint64_t stream_id_;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace gffx
