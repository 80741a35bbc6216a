#pragma once

// Trajectory generation and seeded Monte Carlo ensembles.
//
// Two samplers produce the same law of (X_1, ..., X_n):
//   faithful  - draws a uniformly chosen past step and copies it with
//               probability p, flips it otherwise; keeps the whole history.
//   collapsed - steps +1 with probability 1/2 + (2p-1) X_k / (2k); keeps
//               only the current position.

#include <cassert>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "erw/params.hpp"
#include "erw/rng.hpp"

namespace erw {

/// Sequence of +-1 steps stored one bit per step (1 = +1).
class StepBits {
 public:
  void reserve(std::size_t n) { words_.reserve((n + 63) / 64); }
  void clear() noexcept {
    words_.clear();
    size_ = 0;
  }

  void push_back(int sign) {
    if ((size_ & 63) == 0) words_.push_back(0);
    if (sign > 0) words_.back() |= std::uint64_t{1} << (size_ & 63);
    ++size_;
  }

  /// Zero-based access, returns +1 or -1.
  int operator[](std::size_t i) const noexcept {
    return ((words_[i >> 6] >> (i & 63)) & 1u) ? 1 : -1;
  }

  std::size_t size() const noexcept { return size_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const StepBits&, const StepBits&) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

struct WalkPath {
  ErwParams params;
  StepBits steps;
  std::vector<std::int64_t> positions;  // positions[k-1] = X_k
  std::uint64_t seed = 0;

  std::int64_t length() const noexcept { return static_cast<std::int64_t>(positions.size()); }
  /// X_k for 1 <= k <= length().
  std::int64_t x(std::int64_t k) const { return positions.at(static_cast<std::size_t>(k - 1)); }
  /// eta_k for 1 <= k <= length().
  int step(std::int64_t k) const { return steps[static_cast<std::size_t>(k - 1)]; }
};

/// Builds a path from explicit steps (each +1 or -1).
WalkPath walk_from_steps(const ErwParams& params, std::span<const int> steps, std::uint64_t seed = 0);

/// Throws DomainError unless steps are +-1, positions are their partial sums,
/// |X_k| <= k and X_k = k (mod 2).
void check_walk_invariants(const WalkPath& path);

struct ResourceLimits {
  /// Longest single faithful path (one bit of memory per step).
  std::int64_t faithful_max_steps = 1'000'000'000;
  /// Largest paths * max(checkpoint) accepted for a faithful ensemble.
  double faithful_ensemble_budget = 2e10;
};

namespace detail {

// The kernels take raw (p, q) so that tests can drive the degenerate p = 1
// walk; public entry points validate through ErwParams.

template <class Rng, class Observer>
void collapsed_kernel(double p, double q, std::int64_t n, Rng& rng, Observer&& observe) {
  std::int64_t x = uniform01(rng) < q ? 1 : -1;
  observe(std::int64_t{1}, x);
  // u < 1/2 + c x / (2k) is rearranged to compare x against a threshold that
  // does not depend on x, which keeps the division off the x -> x dependency.
  const double feedback = 2.0 * p - 1.0;
  const double inv_feedback = feedback != 0.0 ? 1.0 / feedback : 0.0;
  for (std::int64_t k = 1; k < n; ++k) {
    const double centred = (uniform01(rng) - 0.5) * (2.0 * static_cast<double>(k));
    bool up;
    if (feedback > 0.0) {
      up = centred * inv_feedback < static_cast<double>(x);
    } else if (feedback < 0.0) {
      up = centred * inv_feedback > static_cast<double>(x);
    } else {
      up = centred < 0.0;
    }
    x += up ? 1 : -1;
    assert(x <= k + 1 && -x <= k + 1 && ((x + k + 1) & 1) == 0);
    observe(k + 1, x);
  }
}

template <class Rng, class Observer>
void faithful_kernel(double p, double q, std::int64_t n, Rng& rng, StepBits& memory,
                     Observer&& observe) {
  memory.clear();
  memory.reserve(static_cast<std::size_t>(n));
  const int first = uniform01(rng) < q ? 1 : -1;
  memory.push_back(first);
  std::int64_t x = first;
  observe(std::int64_t{1}, x);
  for (std::int64_t k = 1; k < n; ++k) {
    const auto remembered = memory[uniform_below(rng, static_cast<std::uint64_t>(k))];
    const int eta = uniform01(rng) < p ? remembered : -remembered;
    memory.push_back(eta);
    x += eta;
    assert(x <= k + 1 && -x <= k + 1 && ((x + k + 1) & 1) == 0);
    observe(k + 1, x);
  }
}

}  // namespace detail

/// Literal memory mechanism. Stream 0 of `seed`.
WalkPath simulate_faithful(const ErwParams& params, std::int64_t n, std::uint64_t seed,
                           const ResourceLimits& limits = {});

/// O(1)-state sampler driven by the one-step conditional law. Stream 0 of `seed`.
WalkPath simulate_collapsed(const ErwParams& params, std::int64_t n, std::uint64_t seed);

enum class SimMode { Faithful, Collapsed };

std::string_view to_string(SimMode mode);
/// Accepts "faithful" or "collapsed"; throws DomainError otherwise.
SimMode parse_sim_mode(std::string_view text);

/// Runs `observe(k, X_k)` over one path of the given mode using the stream
/// (master_seed, path_index). Shared by ensembles and the statistics battery.
template <class Observer>
void simulate_path(const ErwParams& params, std::int64_t n, SimMode mode, std::uint64_t master_seed,
                   std::uint64_t path_index, StepBits& scratch, Observer&& observe) {
  auto rng = make_stream(master_seed, path_index, StreamPurpose::Walk);
  if (mode == SimMode::Collapsed) {
    detail::collapsed_kernel(params.p(), params.q(), n, rng, observe);
  } else {
    detail::faithful_kernel(params.p(), params.q(), n, rng, scratch, observe);
  }
}

struct CheckpointSummary {
  std::int64_t n = 0;
  std::int64_t count = 0;
  double mean = 0.0;
  /// Unbiased sample variance (0 for a single path).
  double variance = 0.0;
  /// X_n of every path, indexed by path.
  std::vector<std::int64_t> values;

  double standard_error_of_mean() const;
  /// sqrt((m4 - s^4 (N-3)/(N-1)) / N), with m4 the sample fourth central moment.
  double standard_error_of_variance() const;
};

struct EnsembleStats {
  ErwParams params;
  SimMode mode = SimMode::Collapsed;
  std::uint64_t master_seed = 0;
  std::int64_t paths = 0;
  std::vector<CheckpointSummary> checkpoints;

  /// Summary at checkpoint n; throws DomainError if n is not a checkpoint.
  const CheckpointSummary& at(std::int64_t n) const;
};

struct EnsembleOptions {
  unsigned workers = 0;
  ResourceLimits limits{};
};

/// N independent paths, path i on stream (master_seed, i). Checkpoints must be
/// strictly ascending and positive. Output is bit-identical for any worker count.
EnsembleStats run_ensemble(const ErwParams& params, std::span<const std::int64_t> checkpoints,
                           std::int64_t paths, std::uint64_t master_seed, SimMode mode,
                           const EnsembleOptions& options = {});

/// Validates a checkpoint grid (non-empty, strictly ascending, >= 1).
void require_checkpoint_grid(std::span<const std::int64_t> checkpoints);

}  // namespace erw
