#include "erw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "erw/parallel.hpp"

namespace erw {
namespace {

void require_steps(std::int64_t n) {
  if (n < 1) throw DomainError("path length n must be >= 1, got " + std::to_string(n));
}

struct PathRecorder {
  WalkPath& path;
  std::int64_t previous = 0;

  void operator()(std::int64_t, std::int64_t x) {
    path.steps.push_back(x > previous ? 1 : -1);
    path.positions.push_back(x);
    previous = x;
  }
};

}  // namespace

WalkPath walk_from_steps(const ErwParams& params, std::span<const int> steps, std::uint64_t seed) {
  WalkPath path{params, {}, {}, seed};
  path.steps.reserve(steps.size());
  path.positions.reserve(steps.size());
  std::int64_t x = 0;
  for (int s : steps) {
    if (s != 1 && s != -1) throw DomainError("walk steps must be +1 or -1");
    x += s;
    path.steps.push_back(s);
    path.positions.push_back(x);
  }
  return path;
}

void check_walk_invariants(const WalkPath& path) {
  if (path.steps.size() != path.positions.size()) {
    throw DomainError("walk has mismatched step and position counts");
  }
  std::int64_t x = 0;
  for (std::int64_t k = 1; k <= path.length(); ++k) {
    x += path.step(k);
    const std::int64_t xk = path.x(k);
    if (xk != x) throw DomainError("walk position is not the partial sum of its steps");
    if (xk > k || -xk > k || ((xk + k) & 1) != 0) {
      throw DomainError("walk violates |X_k| <= k or parity at k=" + std::to_string(k));
    }
  }
}

WalkPath simulate_faithful(const ErwParams& params, std::int64_t n, std::uint64_t seed,
                           const ResourceLimits& limits) {
  require_steps(n);
  if (n > limits.faithful_max_steps) {
    throw ResourceError("faithful path of " + std::to_string(n) + " steps exceeds the memory budget of " +
                        std::to_string(limits.faithful_max_steps));
  }
  WalkPath path{params, {}, {}, seed};
  path.positions.reserve(static_cast<std::size_t>(n));
  StepBits memory;
  auto rng = make_stream(seed, 0, StreamPurpose::Walk);
  detail::faithful_kernel(params.p(), params.q(), n, rng, memory,
                          [&](std::int64_t, std::int64_t x) { path.positions.push_back(x); });
  path.steps = std::move(memory);
  return path;
}

WalkPath simulate_collapsed(const ErwParams& params, std::int64_t n, std::uint64_t seed) {
  require_steps(n);
  WalkPath path{params, {}, {}, seed};
  path.positions.reserve(static_cast<std::size_t>(n));
  path.steps.reserve(static_cast<std::size_t>(n));
  auto rng = make_stream(seed, 0, StreamPurpose::Walk);
  detail::collapsed_kernel(params.p(), params.q(), n, rng, PathRecorder{path});
  return path;
}

std::string_view to_string(SimMode mode) {
  return mode == SimMode::Faithful ? "faithful" : "collapsed";
}

SimMode parse_sim_mode(std::string_view text) {
  if (text == "faithful") return SimMode::Faithful;
  if (text == "collapsed") return SimMode::Collapsed;
  throw DomainError("mode must be 'faithful' or 'collapsed', got '" + std::string(text) + "'");
}

double CheckpointSummary::standard_error_of_mean() const {
  return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

double CheckpointSummary::standard_error_of_variance() const {
  if (count < 4) return 0.0;
  double m4 = 0.0;
  for (auto v : values) {
    const double d = static_cast<double>(v) - mean;
    m4 += d * d * d * d;
  }
  const double nd = static_cast<double>(count);
  m4 /= nd;
  const double s4 = variance * variance;
  return std::sqrt(std::max(0.0, (m4 - s4 * (nd - 3.0) / (nd - 1.0)) / nd));
}

const CheckpointSummary& EnsembleStats::at(std::int64_t n) const {
  for (const auto& c : checkpoints) {
    if (c.n == n) return c;
  }
  throw DomainError("n=" + std::to_string(n) + " is not an ensemble checkpoint");
}

void require_checkpoint_grid(std::span<const std::int64_t> checkpoints) {
  if (checkpoints.empty()) throw DomainError("checkpoint grid is empty");
  std::int64_t previous = 0;
  for (auto n : checkpoints) {
    if (n <= previous) throw DomainError("checkpoints must be strictly ascending positive integers");
    previous = n;
  }
}

EnsembleStats run_ensemble(const ErwParams& params, std::span<const std::int64_t> checkpoints,
                           std::int64_t paths, std::uint64_t master_seed, SimMode mode,
                           const EnsembleOptions& options) {
  require_checkpoint_grid(checkpoints);
  if (paths < 1) throw DomainError("ensemble needs at least one path");
  const std::int64_t n_max = checkpoints.back();
  if (mode == SimMode::Faithful) {
    if (n_max > options.limits.faithful_max_steps ||
        static_cast<double>(paths) * static_cast<double>(n_max) > options.limits.faithful_ensemble_budget) {
      throw ResourceError("faithful ensemble of " + std::to_string(paths) + " x " + std::to_string(n_max) +
                          " steps exceeds the configured budget");
    }
  }

  EnsembleStats out{params, mode, master_seed, paths, {}};
  out.checkpoints.resize(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    out.checkpoints[c].n = checkpoints[c];
    out.checkpoints[c].count = paths;
    out.checkpoints[c].values.assign(static_cast<std::size_t>(paths), 0);
  }

  parallel_for(paths, options.workers, [&](std::int64_t i) {
    thread_local StepBits scratch;
    std::size_t next = 0;
    simulate_path(params, n_max, mode, master_seed, static_cast<std::uint64_t>(i), scratch,
                  [&](std::int64_t k, std::int64_t x) {
                    if (k == checkpoints[next]) {
                      out.checkpoints[next].values[static_cast<std::size_t>(i)] = x;
                      ++next;
                    }
                  });
  });

  // Ordered two-pass reduction; the sum of integers is exact, so the mean is too.
  for (auto& c : out.checkpoints) {
    std::int64_t sum = 0;
    for (auto v : c.values) sum += v;
    c.mean = static_cast<double>(sum) / static_cast<double>(paths);
    if (paths > 1) {
      double ss = 0.0;
      for (auto v : c.values) {
        const double d = static_cast<double>(v) - c.mean;
        ss += d * d;
      }
      c.variance = ss / static_cast<double>(paths - 1);
    }
  }
  return out;
}

}  // namespace erw
