#pragma once

#include <array>
#include <cstdint>

namespace loos {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit key is the user seed and the upper 64 bits of the 128-bit
/// counter name the stream, so stream (seed, id) is a pure function of both
/// and independent of the order in which streams are consumed.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  /// Raw bijection: ten rounds of Philox4x32 on one counter block.
  static Block encrypt(Block counter, Key key);

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double next_uniform();
  /// Standard normal via the Box-Muller transform.
  double next_normal();

 private:
  void refill();

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives a child seed from (seed, a, b) through one Philox block, used to
/// give every repetition and purpose its own independent root seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace loos
