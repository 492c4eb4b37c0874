#include "loos/rng.hpp"

#include <cmath>
#include <numbers>

namespace loos {

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

Philox4x32::Block Philox4x32::encrypt(Block ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMulA, ctr[0], lo0, hi0);
    mulhilo(kMulB, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void Philox4x32::refill() {
  const Block ctr{static_cast<std::uint32_t>(block_index_),
                  static_cast<std::uint32_t>(block_index_ >> 32),
                  static_cast<std::uint32_t>(stream_),
                  static_cast<std::uint32_t>(stream_ >> 32)};
  buffer_ = encrypt(ctr, key_);
  ++block_index_;
  used_ = 0;
}

std::uint32_t Philox4x32::next_u32() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double Philox4x32::next_uniform() {
  const std::uint64_t hi = next_u32() >> 5;  // 27 bits
  const std::uint64_t lo = next_u32() >> 6;  // 26 bits
  const std::uint64_t bits = (hi << 26) | lo;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Philox4x32::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const Philox4x32::Block ctr{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                              static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  const auto out = Philox4x32::encrypt(
      ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace loos
