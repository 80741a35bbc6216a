#include "erw/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "erw/exact_moments.hpp"
#include "erw/io.hpp"
#include "erw/parallel.hpp"
#include "erw/rng.hpp"
#include "erw/scaling.hpp"

namespace erw {
namespace {

// exp(-40) is below 5e-18; bridge crossings less likely than that are ignored.
constexpr double kBridgeExponentCutoff = 40.0;

struct ExitResult {
  int side = 0;
  double time = 0.0;
  double overshoot = 0.0;
  double max_move = 0.0;
  std::int64_t grid_steps = 0;
};

// Walks W from (t, w) until it leaves (lo, hi). Probe times met along the
// way are recorded as long as they come before the exit.
class ExitSearch {
 public:
  ExitSearch(const GridPolicy& grid, Xoshiro256pp& rng, std::vector<ProbeValue>& probes)
      : grid_(grid), rng_(rng), probes_(probes) {}

  ExitResult run(double t, double w, double lo, double hi, double dt) {
    ExitResult out;
    record_due_probes(t, w);
    if (lo >= w) return {-1, t, 0.0, 0.0, 0};
    if (hi <= w) return {+1, t, 0.0, 0.0, 0};
    const double sqrt_dt = std::sqrt(dt);
    for (;;) {
      double h = dt;
      double sqrt_h = sqrt_dt;
      bool lands_on_probe = false;
      if (next_probe_ < probes_.size() && probes_[next_probe_].time - t <= dt) {
        h = probes_[next_probe_].time - t;
        sqrt_h = std::sqrt(h);
        lands_on_probe = true;
      }
      const double w_next = w + sqrt_h * normal_(rng_);
      out.max_move = std::max(out.max_move, std::abs(w_next - w));
      if (++out.grid_steps > grid_.max_grid_steps) {
        throw ResourceError("exit search exceeded " + std::to_string(grid_.max_grid_steps) +
                            " grid steps; the grid is too fine for the step cap");
      }
      if (w_next >= hi) {
        out.side = +1;
        out.time = t + h * (hi - w) / (w_next - w);
        out.overshoot = w_next - hi;
        return out;
      }
      if (w_next <= lo) {
        out.side = -1;
        out.time = t + h * (w - lo) / (w - w_next);
        out.overshoot = lo - w_next;
        return out;
      }
      if (grid_.bridge_correction) {
        const double e_up = 2.0 * (hi - w) * (hi - w_next) / h;
        const double e_down = 2.0 * (w - lo) * (w_next - lo) / h;
        if (e_up < kBridgeExponentCutoff || e_down < kBridgeExponentCutoff) {
          const double p_up = e_up < kBridgeExponentCutoff ? std::exp(-e_up) : 0.0;
          const double p_down = e_down < kBridgeExponentCutoff ? std::exp(-e_down) : 0.0;
          const double u = uniform01(rng_);
          if (u < p_up + p_down) {
            out.side = u < p_up ? +1 : -1;
            out.time = t + 0.5 * h;
            out.overshoot = 0.0;
            return out;
          }
        }
      }
      w = w_next;
      if (lands_on_probe) {
        t = probes_[next_probe_].time;
        record_due_probes(t, w);
      } else {
        t += h;
      }
    }
  }

  // Extends W past the last exit to the remaining probe times.
  void finish(double t, double w) {
    for (; next_probe_ < probes_.size(); ++next_probe_) {
      auto& probe = probes_[next_probe_];
      if (probe.time > t) {
        w += std::sqrt(probe.time - t) * normal_(rng_);
        t = probe.time;
      }
      probe.w = w;
    }
  }

 private:
  void record_due_probes(double t, double w) {
    while (next_probe_ < probes_.size() && probes_[next_probe_].time <= t) {
      probes_[next_probe_].w = w;
      ++next_probe_;
    }
  }

  const GridPolicy& grid_;
  Xoshiro256pp& rng_;
  std::vector<ProbeValue>& probes_;
  NormalSampler normal_;
  std::size_t next_probe_ = 0;
};

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

IncrementSupport increment_support(std::int64_t x, std::int64_t k, const ErwParams& params, double a_next) {
  const double prob_plus = conditional_step_prob(params.p(), x, k);
  if (!(a_next > 0.0)) throw DomainError("increment_support needs a_{k+1} > 0");
  const auto pair = martingale_increments(params.p(), x, k, a_next);
  const double mu = params.feedback() * static_cast<double>(x) / static_cast<double>(k);
  return {pair.minus, pair.plus, prob_plus, x, k, params.p(), mu};
}

IncrementSupport increment_support(std::int64_t x, std::int64_t k, const ErwParams& params) {
  if (k < 1) throw DomainError("increment_support needs k >= 1");
  return increment_support(x, k, params, a_seq(params.p(), k + 1).back());
}

CouplingTrace embed_walk(const ErwParams& params, std::int64_t n, const GridPolicy& grid, std::uint64_t seed,
                         std::span<const std::int64_t> probe_steps, std::uint64_t trace_index) {
  require_not_superdiffusive(params, "embed_walk");
  if (n < 2) throw DomainError("embed_walk needs n >= 2");
  if (!(grid.kappa > 0.0)) throw DomainError("grid kappa must be positive");
  if (grid.max_grid_steps < 1) throw DomainError("grid step cap must be positive");
  std::int64_t previous = 0;
  for (auto k : probe_steps) {
    if (k <= previous || k > n) throw DomainError("probe steps must be ascending within [1, n]");
    previous = k;
  }

  const auto tables = ScalingTables::build(params, n);
  CouplingTrace trace{params, seed, trace_index, grid, {}, {}, {}, {}, {}, {}, {}, WalkPath{params, {}, {}, seed}, {}};
  for (auto k : probe_steps) trace.probes.push_back({k, tables.s2_at(k), 0.0});
  for (auto* v : {&trace.T, &trace.w_at_T, &trace.m, &trace.grid_dt, &trace.overshoot, &trace.max_move}) {
    v->reserve(static_cast<std::size_t>(n));
  }
  trace.grid_steps.reserve(static_cast<std::size_t>(n));
  trace.walk.positions.reserve(static_cast<std::size_t>(n));
  trace.walk.steps.reserve(static_cast<std::size_t>(n));

  auto rng = make_stream(seed, trace_index, StreamPurpose::Brownian);
  ExitSearch search(grid, rng, trace.probes);

  const double feedback = params.feedback();
  double t = 0.0;
  double w = 0.0;                             // W(T_k) = M_k, with M_0 = 0
  std::int64_t x = 0;
  double mean = 2.0 * params.q() - 1.0;       // E[X_{k+1}], advanced as mean_exact does
  for (std::int64_t k = 0; k < n; ++k) {
    // The first step is the centred two-point law {-2q, 2-2q} with a_1 = 1.
    const double mu = k == 0 ? 2.0 * params.q() - 1.0 : feedback * static_cast<double>(x) / static_cast<double>(k);
    const double a_next = tables.a_at(k + 1);
    const double d_minus = (-1.0 - mu) / a_next;
    const double d_plus = (1.0 - mu) / a_next;
    const double width = std::min(-d_minus, d_plus);
    const double dt = grid.kappa * width * width;

    const auto exit = search.run(t, w, w + d_minus, w + d_plus, dt);
    if (k > 0) mean *= 1.0 + feedback / static_cast<double>(k);
    x += exit.side;
    t = exit.time;
    w = (static_cast<double>(x) - mean) / a_next;

    trace.walk.steps.push_back(exit.side);
    trace.walk.positions.push_back(x);
    trace.T.push_back(t);
    trace.w_at_T.push_back(w);
    trace.m.push_back(w);
    trace.grid_dt.push_back(dt);
    trace.overshoot.push_back(exit.overshoot);
    trace.max_move.push_back(exit.max_move);
    trace.grid_steps.push_back(exit.grid_steps);
  }
  search.finish(t, w);
  return trace;
}

EmbeddingReport check_embedding(const CouplingTrace& trace) {
  const std::int64_t n = trace.length();
  if (n < 16) throw DomainError("check_embedding needs a trace of at least 16 steps");
  require_not_superdiffusive(trace.params, "check_embedding");
  const auto s2 = s_squared_seq(trace.params, n);

  EmbeddingReport report{trace.params};
  report.seed = trace.seed;
  report.n = n;
  report.T_over_s2.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 1; k <= n; ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    report.T_over_s2.push_back(s2[i] > 0.0 ? trace.T[i] / s2[i] : std::numeric_limits<double>::quiet_NaN());
    if (i > 0 && !(trace.T[i] > trace.T[i - 1])) report.T_strictly_increasing = false;
    if (trace.overshoot[i] > trace.max_move[i]) report.overshoots_within_grid_move = false;
    report.max_overshoot = std::max(report.max_overshoot, trace.overshoot[i]);
  }
  // Bridge-detected exits carry no overshoot by construction; the median is
  // over exits found past an endpoint.
  std::vector<double> endpoint_overshoots;
  for (double o : trace.overshoot) {
    if (o > 0.0) endpoint_overshoots.push_back(o);
  }
  report.median_overshoot = median_of(std::move(endpoint_overshoots));

  const bool critical = trace.params.regime() == Regime::Critical;
  for (const auto& probe : trace.probes) {
    const auto i = static_cast<std::size_t>(probe.k - 1);
    EmbeddingCheckpoint c;
    c.k = probe.k;
    c.s2 = s2[i];
    c.T = trace.T[i];
    c.T_over_s2 = report.T_over_s2[i];
    c.m = trace.m[i];
    c.w_at_s2 = probe.w;
    c.residual = std::abs(c.m - c.w_at_s2);
    const double s = std::sqrt(c.s2);
    if (s > 0.0) c.prob_normalized = c.residual / s;
    if (critical) {
      if (probe.k >= 16) {
        c.strong_normalized = c.residual / std::sqrt(c.s2 * std::log(std::log(std::log(static_cast<double>(probe.k)))));
      }
    } else if (s > std::exp(1.0)) {
      c.strong_normalized = c.residual / std::sqrt(c.s2 * std::log(std::log(s)));
    }
    report.checkpoints.push_back(c);
  }
  return report;
}

nlohmann::json to_json(const EmbeddingReport& report) {
  nlohmann::json j;
  j["p"] = report.params.p();
  j["q"] = report.params.q();
  j["regime"] = std::string(to_string(report.params.regime()));
  j["seed"] = report.seed;
  j["n"] = report.n;
  j["T_n_over_s2_n"] = report.T_over_s2.back();
  j["max_overshoot"] = report.max_overshoot;
  j["median_overshoot"] = report.median_overshoot;
  j["overshoots_within_grid_move"] = report.overshoots_within_grid_move;
  j["T_strictly_increasing"] = report.T_strictly_increasing;
  auto& cps = j["checkpoints"] = nlohmann::json::array();
  for (const auto& c : report.checkpoints) {
    nlohmann::json row{{"k", c.k},        {"s2", c.s2},           {"T", c.T},
                       {"T_over_s2", c.T_over_s2}, {"M", c.m},    {"W_at_s2", c.w_at_s2},
                       {"residual", c.residual}};
    row["strong_normalized"] = c.strong_normalized ? nlohmann::json(*c.strong_normalized) : nlohmann::json();
    row["prob_normalized"] = c.prob_normalized ? nlohmann::json(*c.prob_normalized) : nlohmann::json();
    cps.push_back(std::move(row));
  }
  return j;
}

void write_trace_csv(std::ostream& os, const CouplingTrace& trace) {
  os << "k,T_k,W_at_T_k,M_k,overshoot_k\n";
  for (std::int64_t k = 1; k <= trace.length(); ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    os << k << ',' << format_double(trace.T[i]) << ',' << format_double(trace.w_at_T[i]) << ','
       << format_double(trace.m[i]) << ',' << format_double(trace.overshoot[i]) << '\n';
  }
}

CouplingEnsemble run_couplings(const ErwParams& params, std::int64_t n, const GridPolicy& grid, std::uint64_t seed,
                               std::span<const std::int64_t> probe_steps, std::int64_t traces, unsigned workers) {
  require_not_superdiffusive(params, "run_couplings");
  if (traces < 1) throw DomainError("run_couplings needs at least one trace");
  if (n < 16) throw DomainError("run_couplings needs n >= 16");
  CouplingEnsemble out{params, seed, n, grid, {probe_steps.begin(), probe_steps.end()}, {}};
  out.traces.resize(static_cast<std::size_t>(traces));
  const double s2_n = s_squared_seq(params, n).back();
  parallel_for(traces, workers, [&](std::int64_t i) {
    const auto trace = embed_walk(params, n, grid, seed, probe_steps, static_cast<std::uint64_t>(i));
    const auto report = check_embedding(trace);
    auto& s = out.traces[static_cast<std::size_t>(i)];
    s.trace_index = static_cast<std::uint64_t>(i);
    s.x_n = trace.walk.positions.back();
    s.T_n = trace.T.back();
    s.s2_n = s2_n;
    s.T_n_over_s2_n = report.T_over_s2.back();
    s.max_overshoot = report.max_overshoot;
    s.median_overshoot = report.median_overshoot;
    s.T_strictly_increasing = report.T_strictly_increasing;
    s.overshoots_within_grid_move = report.overshoots_within_grid_move;
    s.checkpoints = report.checkpoints;
  });
  return out;
}

double mean_terminal_ratio(const CouplingEnsemble& ensemble) {
  double sum = 0.0;
  for (const auto& t : ensemble.traces) sum += t.T_n_over_s2_n;
  return sum / static_cast<double>(ensemble.traces.size());
}

namespace {

const EmbeddingCheckpoint& checkpoint_at(const TraceSummary& trace, std::int64_t k) {
  for (const auto& c : trace.checkpoints) {
    if (c.k == k) return c;
  }
  throw DomainError("step " + std::to_string(k) + " is not a probe of this coupling run");
}

}  // namespace

double shrink_fraction(const CouplingEnsemble& ensemble, std::int64_t k_from, std::int64_t k_to) {
  std::int64_t shrunk = 0;
  for (const auto& t : ensemble.traces) {
    const double before = std::abs(checkpoint_at(t, k_from).T_over_s2 - 1.0);
    const double after = std::abs(checkpoint_at(t, k_to).T_over_s2 - 1.0);
    if (after < before) ++shrunk;
  }
  return static_cast<double>(shrunk) / static_cast<double>(ensemble.traces.size());
}

std::vector<CheckpointMedians> checkpoint_medians(const CouplingEnsemble& ensemble) {
  std::vector<CheckpointMedians> out;
  for (auto k : ensemble.probe_steps) {
    CheckpointMedians row;
    row.k = k;
    std::vector<double> prob;
    std::vector<double> strong;
    double ratio_sum = 0.0;
    for (const auto& t : ensemble.traces) {
      const auto& c = checkpoint_at(t, k);
      ratio_sum += c.T_over_s2;
      if (c.prob_normalized) prob.push_back(*c.prob_normalized);
      if (c.strong_normalized) strong.push_back(*c.strong_normalized);
    }
    row.mean_T_over_s2 = ratio_sum / static_cast<double>(ensemble.traces.size());
    row.median_prob_normalized = median_of(std::move(prob));
    if (!strong.empty()) row.median_strong_normalized = median_of(std::move(strong));
    out.push_back(row);
  }
  return out;
}

nlohmann::json to_json(const CouplingEnsemble& ensemble) {
  nlohmann::json j;
  j["p"] = ensemble.params.p();
  j["q"] = ensemble.params.q();
  j["regime"] = std::string(to_string(ensemble.params.regime()));
  j["seed"] = ensemble.seed;
  j["n"] = ensemble.n;
  j["traces"] = ensemble.traces.size();
  j["kappa"] = ensemble.grid.kappa;
  j["bridge_correction"] = ensemble.grid.bridge_correction;
  j["mean_T_n_over_s2_n"] = mean_terminal_ratio(ensemble);
  bool increasing = true;
  bool within = true;
  double max_overshoot = 0.0;
  for (const auto& t : ensemble.traces) {
    increasing = increasing && t.T_strictly_increasing;
    within = within && t.overshoots_within_grid_move;
    max_overshoot = std::max(max_overshoot, t.max_overshoot);
  }
  j["T_strictly_increasing"] = increasing;
  j["overshoots_within_grid_move"] = within;
  j["max_overshoot"] = max_overshoot;
  auto& rows = j["checkpoints"] = nlohmann::json::array();
  for (const auto& m : checkpoint_medians(ensemble)) {
    nlohmann::json row{{"k", m.k},
                       {"mean_T_over_s2", m.mean_T_over_s2},
                       {"median_prob_normalized", m.median_prob_normalized}};
    row["median_strong_normalized"] =
        m.median_strong_normalized ? nlohmann::json(*m.median_strong_normalized) : nlohmann::json();
    rows.push_back(std::move(row));
  }
  return j;
}

void write_coupling_summary_csv(std::ostream& os, const CouplingEnsemble& ensemble) {
  os << "trace,X_n,T_n,s2_n,T_n_over_s2_n,max_overshoot,median_overshoot\n";
  for (const auto& t : ensemble.traces) {
    os << t.trace_index << ',' << t.x_n << ',' << format_double(t.T_n) << ',' << format_double(t.s2_n) << ','
       << format_double(t.T_n_over_s2_n) << ',' << format_double(t.max_overshoot) << ','
       << format_double(t.median_overshoot) << '\n';
  }
}

}  // namespace erw
