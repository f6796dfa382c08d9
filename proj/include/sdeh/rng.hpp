#pragma once

#include <array>
#include <cstdint>

namespace sdeh {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Stream layout: the 128-bit counter is split into a 64-bit running counter
// (low words) and a 64-bit stream id (high words); the 64-bit key is the
// user seed. Distinct (seed, stream) pairs yield independent sequences, so
// replication r of a batch can simply use stream r without coordination.
// Gaussian variates come from Box-Muller on 53-bit uniforms, which keeps
// every draw a pure function of (seed, stream, draw index) across platforms.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on (0, 1], 53-bit resolution.
  double next_double();

  // Standard normal via Box-Muller; second variate of each pair is cached.
  double next_gaussian();

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double next_gamma(double shape);

  std::uint64_t seed() const {
    return static_cast<std::uint64_t>(key_[0]) |
           (static_cast<std::uint64_t>(key_[1]) << 32);
  }
  std::uint64_t stream() const { return stream_; }

  // One keyed 10-round block; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

}  // namespace sdeh
