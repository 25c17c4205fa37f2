#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is keyed by the 64-bit seed; its counter carries
// (iteration, level, block, replicate), so any (replicate, level, iteration)
// draw can be reproduced without replaying earlier draws, independent of
// thread scheduling.

#include <array>
#include <cstdint>

namespace imcmc {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32-10 block.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

class RngStream {
 public:
  /// level must be below 65536.
  RngStream(std::uint64_t seed, std::uint32_t replicate, std::uint32_t level);

  /// Positions the stream at the start of `iteration`; draws within an
  /// iteration walk the 16-bit block index.
  void seek(std::uint64_t iteration);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on {0, ..., n-1}, unbiased (multiply-high with rejection).
  std::uint64_t bounded(std::uint64_t n);

  std::uint64_t iteration() const noexcept { return iteration_; }

 private:
  void refill();

  PhiloxKey key_;
  std::uint32_t replicate_;
  std::uint32_t level_;
  std::uint64_t iteration_ = 0;
  std::uint32_t block_ = 0;
  PhiloxCounter buffer_{};
  unsigned used_ = 4;
};

}  // namespace imcmc
