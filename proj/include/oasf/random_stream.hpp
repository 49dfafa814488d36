#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace oasf {

// Counter-free splittable generator built on the SplitMix64 finalizer.
//
// Every value is a pure function of (seed, stream id, substream path,
// draw index) using only 64-bit integer arithmetic, so sequences are
// identical on every platform.  Substreams are derived by hashing a label
// (plus optional integer arguments) into a fresh state; the parent stream
// is not advanced.  This is what makes the ingredient families of a
// design (row shuffle, level permutations, jitter, sub-stratum shifts)
// independent and individually replayable.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    state_ = mix(mix(seed + kGamma) ^ mix(stream_id + kStreamSalt));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform on [0,1) with 53 random mantissa bits; never returns 1.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in {0,...,bound-1} by rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("RandomStream::next_below: bound must be positive");
    const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v >= threshold) return v % bound;
    }
  }

  RandomStream substream(std::string_view label) const {
    RandomStream child(*this);
    child.state_ = mix(state_ ^ hash_label(label));
    return child;
  }

  RandomStream substream(std::string_view label, std::uint64_t a) const {
    RandomStream child = substream(label);
    child.state_ = mix(child.state_ ^ (a + kGamma));
    return child;
  }

  RandomStream substream(std::string_view label, std::uint64_t a, std::uint64_t b) const {
    RandomStream child = substream(label, a);
    child.state_ = mix(child.state_ ^ (b + kStreamSalt));
    return child;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kStreamSalt = 0xd1b54a32d192ed03ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return mix(h);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
};

// Fisher-Yates shuffle of {0,...,size-1}; every permutation equally
// probable under an ideal generator.
inline std::vector<std::uint32_t> uniform_permutation(std::uint32_t size, RandomStream& stream) {
  if (size == 0) throw std::invalid_argument("uniform_permutation: size must be positive");
  std::vector<std::uint32_t> perm(size);
  for (std::uint32_t i = 0; i < size; ++i) perm[i] = i;
  for (std::uint32_t i = size - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(stream.next_below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

}  // namespace oasf
