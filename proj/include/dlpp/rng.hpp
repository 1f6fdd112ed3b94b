#pragma once

// Counter-based random streams.
//
// Every stream is a Philox4x32-10 keystream. The 64-bit master seed is the
// cipher key; the 128-bit counter is split as
//
//   word 0..1  block position inside the stream (64 bits)
//   word 2     replicate index j (32 bits)
//   word 3     purpose tag (8 bits) << 24 | grid-size index i (24 bits)
//
// so the map (seed, purpose, i, j) -> stream is injective for i < 2^24 and any
// 32-bit j, and streams never overlap before 2^64 blocks have been consumed.

#include <array>
#include <cstdint>
#include <limits>

namespace dlpp {

/// Philox4x32 with 10 rounds, as published with Random123.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint8_t purpose = 0;
  std::uint32_t i = 0;  // must fit in 24 bits
  std::uint32_t j = 0;
};

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(const StreamKey& key);
  /// Shorthand for a purpose-0 stream.
  explicit RandomStream(std::uint64_t seed) : RandomStream(StreamKey{seed, 0, 0, 0}) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound); bound > 0. Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }

  const StreamKey& key() const { return key_; }
  std::uint64_t block_position() const { return block_; }

 private:
  void refill();

  StreamKey key_;
  std::array<std::uint32_t, 2> cipher_key_{};
  std::uint32_t tag_word_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;  // index of next unused 32-bit word pair in buffer_
};

/// Purpose tags. Experiment kinds use their own tag so that two different
/// experiments with the same seed never share a stream.
namespace purpose {
inline constexpr std::uint8_t kGeneric = 0;
inline constexpr std::uint8_t kMomentScaling = 1;
inline constexpr std::uint8_t kCouplingCheck = 2;
inline constexpr std::uint8_t kMnGrowth = 3;
inline constexpr std::uint8_t kLipschitzFrequency = 4;
inline constexpr std::uint8_t kCylinderVariance = 5;
inline constexpr std::uint8_t kShapeCurve = 6;
inline constexpr std::uint8_t kBootstrap = 64;
inline constexpr std::uint8_t kFitResample = 65;
inline constexpr std::uint8_t kCli = 128;
}  // namespace purpose

}  // namespace dlpp
