#pragma once

#include <array>
#include <cstdint>

namespace blqr {

// Philox4x64-10 block function (counter-based, matches the widely used
// reference implementation bit for bit).
std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const std::array<std::uint64_t, 2>& key);

// Counter-based generator. The key is (seed, salt); the counter is laid out
// as {position, unit, sweep, step}. Substreams for distinct (step, sweep,
// unit) triples never overlap, which is what makes per-item draws identical
// for any thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t salt = 0)
      : key_{seed, salt}, ctr_{0, 0, 0, 0}, idx_(4) {}

  Rng substream(std::uint64_t step, std::uint64_t sweep, std::uint64_t unit) const {
    Rng r(key_[0], key_[1]);
    r.ctr_ = {0, unit, sweep, step};
    return r;
  }

  // Same (step, sweep) family, different unit; lets one step split its
  // stream across individuals or cells.
  Rng with_unit(std::uint64_t unit) const {
    Rng r(key_[0], key_[1]);
    r.ctr_ = {0, unit, ctr_[2], ctr_[3]};
    return r;
  }

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t salt() const { return key_[1]; }

  std::uint64_t next_u64() {
    if (idx_ >= 4) refill();
    return buf_[static_cast<std::size_t>(idx_++)];
  }

  // Uniform on [0,1), 53-bit resolution.
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0,1); safe to pass to log().
  double open01() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Standard normal via the polar rejection method (second variate of the
  // accepted pair is discarded so state stays a pure function of the draws).
  double normal();

  // Exponential with unit rate.
  double exponential();

 private:
  void refill() {
    buf_ = philox4x64(ctr_, key_);
    ++ctr_[0];  // position word only; unit/sweep/step words identify the stream
    idx_ = 0;
  }

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> ctr_;
  std::array<std::uint64_t, 4> buf_{};
  int idx_;
};

}  // namespace blqr
