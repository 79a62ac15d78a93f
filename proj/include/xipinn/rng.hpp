#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). Every stream is a pure function of
// (seed, stream id, counter), so samplers in any language can reproduce the
// exact same point sets given the seed recorded in a run manifest.

#include <array>
#include <cstdint>

namespace xipinn {

class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream);

  /// Next raw 32-bit word.
  std::uint32_t next_u32();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (both outputs are consumed in order).
  double normal();

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace xipinn
