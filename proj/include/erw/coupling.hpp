#pragma once

// Skorokhod embedding of the ERW martingale in a simulated Brownian path.
//
// Given M_k, the next increment of M takes the two values
// d- = (-1 - mu)/a_{k+1} and d+ = (1 - mu)/a_{k+1} with mu = (2p-1) X_k / k.
// A Brownian motion started at M_k leaves (M_k + d-, M_k + d+) through the
// upper end with probability |d-| / (d+ + |d-|) = P(eta_{k+1} = +1), so
// running W until that exit produces the next ERW step, and the exit time is
// the next stopping time T_{k+1}.
//
// Exits are searched on a grid with dt = kappa * min(|d-|, d+)^2. Crossings
// between grid points are caught with the Brownian-bridge crossing
// probability exp(-2 (b - w0)(b - w1) / dt) when bridge_correction is on.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "erw/engine.hpp"
#include "erw/params.hpp"
#include "json.hpp"

namespace erw {

struct IncrementSupport {
  double d_minus = 0.0;
  double d_plus = 0.0;
  double prob_plus = 0.0;
  std::int64_t x = 0;
  std::int64_t k = 0;
  double p = 0.0;
  double mu = 0.0;
};

/// Two-point law of M_{k+1} - M_k given X_k = x. `a_next` is a_{k+1}.
/// Requires k >= 1, |x| <= k and matching parity.
IncrementSupport increment_support(std::int64_t x, std::int64_t k, const ErwParams& params, double a_next);
/// Same, computing a_{k+1} by recursion.
IncrementSupport increment_support(std::int64_t x, std::int64_t k, const ErwParams& params);

struct GridPolicy {
  double kappa = 0.01;
  bool bridge_correction = true;
  /// Grid steps allowed in one exit search before giving up with ResourceError.
  std::int64_t max_grid_steps = 10'000'000;
};

struct ProbeValue {
  std::int64_t k = 0;
  double time = 0.0;  // s_k^2
  double w = 0.0;     // W(s_k^2)
};

struct CouplingTrace {
  ErwParams params;
  std::uint64_t seed = 0;
  std::uint64_t trace_index = 0;
  GridPolicy grid;
  // Entry k-1 describes step k.
  std::vector<double> T;
  std::vector<double> w_at_T;
  std::vector<double> m;
  std::vector<double> grid_dt;
  std::vector<double> overshoot;
  std::vector<double> max_move;
  std::vector<std::int64_t> grid_steps;
  WalkPath walk;
  std::vector<ProbeValue> probes;

  std::int64_t length() const noexcept { return static_cast<std::int64_t>(T.size()); }
};

/// Embeds n ERW steps on Brownian stream (seed, trace_index). W is also
/// recorded at the deterministic times s_k^2 for every k in `probe_steps`
/// (ascending, within [1, n]); probes later than T_n extend W with fresh
/// independent increments. Throws RegimeError for p > 3/4.
CouplingTrace embed_walk(const ErwParams& params, std::int64_t n, const GridPolicy& grid, std::uint64_t seed,
                         std::span<const std::int64_t> probe_steps = {}, std::uint64_t trace_index = 0);

struct EmbeddingCheckpoint {
  std::int64_t k = 0;
  double s2 = 0.0;
  double T = 0.0;
  double T_over_s2 = 0.0;
  double m = 0.0;
  double w_at_s2 = 0.0;
  /// |M_k - W(s_k^2)|
  double residual = 0.0;
  /// residual / sqrt(s_k^2 log log s_k) for p < 3/4 (needs s_k > e), or
  /// residual / sqrt(s_k^2 log log log k) for p = 3/4 (needs k >= 16).
  std::optional<double> strong_normalized;
  /// residual / s_k
  std::optional<double> prob_normalized;
};

struct EmbeddingReport {
  explicit EmbeddingReport(const ErwParams& params_) : params(params_) {}

  ErwParams params;
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  /// T_k / s_k^2 per step; NaN where s_k^2 = 0.
  std::vector<double> T_over_s2;
  std::vector<EmbeddingCheckpoint> checkpoints;
  double max_overshoot = 0.0;
  /// Over steps whose exit was found past an endpoint (overshoot > 0).
  double median_overshoot = 0.0;
  bool overshoots_within_grid_move = true;
  bool T_strictly_increasing = true;
};

/// Requires n >= 16. Checkpoints are the trace's probes.
EmbeddingReport check_embedding(const CouplingTrace& trace);

nlohmann::json to_json(const EmbeddingReport& report);

/// CSV columns k,T_k,W_at_T_k,M_k,overshoot_k.
void write_trace_csv(std::ostream& os, const CouplingTrace& trace);

/// What is kept of one trace when many are run.
struct TraceSummary {
  std::uint64_t trace_index = 0;
  std::int64_t x_n = 0;
  double T_n = 0.0;
  double s2_n = 0.0;
  double T_n_over_s2_n = 0.0;
  double max_overshoot = 0.0;
  double median_overshoot = 0.0;
  bool T_strictly_increasing = true;
  bool overshoots_within_grid_move = true;
  std::vector<EmbeddingCheckpoint> checkpoints;
};

struct CouplingEnsemble {
  ErwParams params;
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  GridPolicy grid;
  std::vector<std::int64_t> probe_steps;
  std::vector<TraceSummary> traces;  // indexed by trace
};

/// Runs `traces` embeddings, trace i on Brownian stream (seed, i). Output does
/// not depend on the worker count.
CouplingEnsemble run_couplings(const ErwParams& params, std::int64_t n, const GridPolicy& grid, std::uint64_t seed,
                               std::span<const std::int64_t> probe_steps, std::int64_t traces, unsigned workers = 0);

double mean_terminal_ratio(const CouplingEnsemble& ensemble);

/// Fraction of traces with |T_to/s2_to - 1| < |T_from/s2_from - 1|; both must be probes.
double shrink_fraction(const CouplingEnsemble& ensemble, std::int64_t k_from, std::int64_t k_to);

struct CheckpointMedians {
  std::int64_t k = 0;
  double mean_T_over_s2 = 0.0;
  double median_prob_normalized = 0.0;
  /// Over traces where the strong normalization is defined.
  std::optional<double> median_strong_normalized;
};

std::vector<CheckpointMedians> checkpoint_medians(const CouplingEnsemble& ensemble);

nlohmann::json to_json(const CouplingEnsemble& ensemble);

/// CSV columns trace,X_n,T_n,s2_n,T_n_over_s2_n,max_overshoot,median_overshoot.
void write_coupling_summary_csv(std::ostream& os, const CouplingEnsemble& ensemble);

}  // namespace erw
