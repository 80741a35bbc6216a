#pragma once

// Reproducible random streams.
//
// Every simulated path owns one stream. A stream is a xoshiro256++ generator
// whose 256-bit state is the output of the Philox4x32-10 counter-based
// generator keyed by the master seed, with the stream index and a purpose tag
// in the counter. Any stream can therefore be built directly from
// (master_seed, index) without touching the others, which is what makes
// ensemble results independent of how paths are scheduled on workers.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace erw {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;
  using State = std::array<std::uint64_t, 4>;

  explicit constexpr Xoshiro256pp(const State& state) noexcept : s_(state) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  const State& state() const noexcept { return s_; }

 private:
  State s_;
};

enum class StreamPurpose : std::uint32_t {
  Walk = 1,
  Brownian = 2,
  Statistics = 3,
};

/// Independent stream `index` of the family identified by `master_seed`.
Xoshiro256pp make_stream(std::uint64_t master_seed, std::uint64_t index,
                         StreamPurpose purpose = StreamPurpose::Walk);

/// A second master seed derived from `master_seed`, for ensembles that must be
/// independent of the ones run on `master_seed` itself.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt);

/// Uniform double in [0,1) with 53 random bits.
template <class Rng>
inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased uniform integer in [0, bound), bound >= 1 (Lemire's method).
template <class Rng>
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) noexcept {
  __extension__ using u128 = unsigned __int128;
  u128 m = static_cast<u128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Standard normal variates by the Marsaglia polar method. Written out here
/// rather than using std::normal_distribution so the sequence is identical
/// across standard library implementations.
class NormalSampler {
 public:
  template <class Rng>
  double operator()(Rng& rng) noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01(rng) - 1.0;
      v = 2.0 * uniform01(rng) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace erw
