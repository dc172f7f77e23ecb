#ifndef WARDROP_RNG_HPP
#define WARDROP_RNG_HPP

#include <array>
#include <cstdint>
#include <string>

namespace wardrop {

// Counter-based PRNG: Philox-4x32 with 10 rounds (Salmon et al., SC'11).
//
// The 64-bit key is the master seed. Counter words 2..3 hold a 64-bit stream
// id, words 0..1 a running block counter, so replicate k of a Monte Carlo
// batch draws from stream (seed, k) and streams never overlap. Every draw is
// a pure function of (seed, stream, counter), which is what makes runs
// bitwise reproducible.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(seed), stream_(stream) {}

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // uniform in [0,1) with 53 random bits
  double uniform();

  // standard normal via Box-Muller on uniform pairs (second value cached)
  double gaussian();

  std::uint64_t seed() const { return key_; }
  std::uint64_t stream() const { return stream_; }

  // raw 4x32 block at an explicit counter; used by the known-answer tests
  static std::array<std::uint32_t, 4> block(
      const std::array<std::uint32_t, 4>& counter,
      const std::array<std::uint32_t, 2>& key);

  static constexpr const char* kAlgorithm = "philox4x32-10/box-muller";

 private:
  void refill_();

  std::uint64_t key_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double gauss_cache_ = 0.0;
  bool gauss_cached_ = false;
};

}  // namespace wardrop

#endif
