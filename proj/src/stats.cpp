#include "erw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "erw/exact_moments.hpp"
#include "erw/io.hpp"
#include "erw/parallel.hpp"

namespace erw {
namespace {

void require_finite(std::span<const double> samples, const char* what) {
  if (samples.empty()) throw DomainError(std::string(what) + ": empty sample");
  for (double v : samples) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite sample value");
  }
}

std::vector<double> sorted_copy(std::span<const double> samples) {
  std::vector<double> out(samples.begin(), samples.end());
  std::sort(out.begin(), out.end());
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double sample_mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

const char* to_string(Comparison c) { return c == Comparison::AtMost ? "<=" : ">="; }

void require_n_grid_decades(std::span<const std::int64_t> n_grid) {
  require_checkpoint_grid(n_grid);
  if (static_cast<double>(n_grid.back()) < 100.0 * static_cast<double>(n_grid.front())) {
    throw DomainError("variance sweep needs an n grid spanning at least two decades");
  }
}

}  // namespace

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require_finite(samples, "ks_distance");
  const auto sorted = sorted_copy(samples);
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance_normal(std::span<const double> samples) { return ks_distance(samples, standard_normal_cdf); }

double ks_distance_lattice(std::span<const double> samples, std::span<const double> support,
                           const std::function<double(double)>& cdf) {
  require_finite(samples, "ks_distance_lattice");
  if (support.empty()) throw DomainError("ks_distance_lattice: empty support");
  if (!std::is_sorted(support.begin(), support.end())) throw DomainError("ks_distance_lattice: unsorted support");
  const auto sorted = sorted_copy(samples);
  const auto n = static_cast<double>(sorted.size());
  std::size_t below = 0;
  double d = 0.0;
  for (double s : support) {
    while (below < sorted.size() && sorted[below] <= s) {
      if (!std::binary_search(support.begin(), support.end(), sorted[below])) {
        throw DomainError("ks_distance_lattice: sample off the support");
      }
      ++below;
    }
    d = std::max(d, std::abs(static_cast<double>(below) / n - cdf(s)));
  }
  if (below != sorted.size()) throw DomainError("ks_distance_lattice: sample off the support");
  return d;
}

double ks_critical_coefficient(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("KS level must lie in (0,1)");
  return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b, double alpha) {
  require_finite(a, "two_sample_ks");
  require_finite(b, "two_sample_ks");
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  const auto na = static_cast<double>(sa.size());
  const auto nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  TwoSampleKs out;
  out.distance = d;
  out.alpha = alpha;
  out.n_a = sa.size();
  out.n_b = sb.size();
  out.critical = ks_critical_coefficient(alpha) * std::sqrt((na + nb) / (na * nb));
  return out;
}

bool TestReport::pass() const noexcept {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

nlohmann::json to_json(const TestReport& report) {
  nlohmann::json j;
  j["test"] = report.name;
  j["p"] = report.params.p();
  j["q"] = report.params.q();
  j["regime"] = std::string(to_string(report.params.regime()));
  j["n"] = report.n;
  j["paths"] = report.paths;
  j["seed"] = report.seed;
  j["calibration_version"] = std::string(calibration::kVersion);
  auto& checks = j["checks"] = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"statistic", c.statistic},
                      {"comparison", to_string(c.comparison)},
                      {"threshold", c.threshold},
                      {"pass", c.pass()}});
  }
  j["verdict"] = report.pass() ? "pass" : "fail";
  j["details"] = report.details;
  return j;
}

std::vector<double> to_doubles(std::span<const std::int64_t> values) {
  return {values.begin(), values.end()};
}

// ---------------------------------------------------------------- CLT

double clt_normalizer(const ErwParams& params, std::int64_t n) {
  require_not_superdiffusive(params, "CLT normalization");
  if (n < 3) throw DomainError("CLT normalization needs n >= 3");
  const auto nd = static_cast<double>(n);
  if (params.regime() == Regime::Critical) return std::sqrt(nd * std::log(nd));
  return std::sqrt(nd / (3.0 - 4.0 * params.p()));
}

std::vector<double> clt_statistics(const EnsembleStats& ensemble, std::int64_t n, bool centered) {
  const double scale = clt_normalizer(ensemble.params, n);
  const auto& summary = ensemble.at(n);
  const double shift = centered ? mean_exact(ensemble.params, n) : 0.0;
  std::vector<double> out;
  out.reserve(summary.values.size());
  for (auto x : summary.values) out.push_back((static_cast<double>(x) - shift) / scale);
  return out;
}

TestReport verify_clt(const EnsembleStats& ensemble, std::int64_t n, bool centered) {
  const auto stats = clt_statistics(ensemble, n, centered);
  const bool critical = ensemble.params.regime() == Regime::Critical;
  TestReport report{"clt", ensemble.params, n, ensemble.paths, ensemble.master_seed};
  report.checks.push_back({"ks_distance_to_standard_normal", ks_distance_normal(stats),
                           critical ? calibration::kCltKsCritical : calibration::kCltKsDiffusive,
                           Comparison::AtMost});
  report.details["mode"] = std::string(to_string(ensemble.mode));
  report.details["centered"] = centered;
  report.details["normalizer"] = clt_normalizer(ensemble.params, n);
  report.details["sample_mean"] = sample_mean(stats);
  report.details["sample_variance"] = sample_variance(stats);
  report.details["exact_variance_normalized"] =
      variance_exact(ensemble.params, n) / std::pow(clt_normalizer(ensemble.params, n), 2);
  return report;
}

TestReport verify_clt(const ErwParams& params, std::int64_t n, std::int64_t paths, std::uint64_t seed,
                      const CltOptions& options) {
  require_not_superdiffusive(params, "verify_clt");
  if (n < 3) throw DomainError("verify_clt needs n >= 3");
  const std::int64_t grid[] = {n};
  const auto ensemble = run_ensemble(params, grid, paths, seed, options.mode, {options.workers, {}});
  return verify_clt(ensemble, n, options.centered);
}

// ---------------------------------------------------------------- moments

TestReport verify_moments(const EnsembleStats& ensemble) {
  TestReport report{"moments", ensemble.params, ensemble.checkpoints.back().n, ensemble.paths,
                    ensemble.master_seed};
  auto& rows = report.details["checkpoints"] = nlohmann::json::array();
  for (const auto& c : ensemble.checkpoints) {
    const auto [mean, second] = MomentCache::global().moments(ensemble.params, c.n);
    const double variance = second - mean * mean;
    const double se_mean = c.standard_error_of_mean();
    const double se_var = c.standard_error_of_variance();
    const double z_mean = se_mean > 0.0 ? std::abs(c.mean - mean) / se_mean : std::abs(c.mean - mean);
    const double z_var = se_var > 0.0 ? std::abs(c.variance - variance) / se_var : std::abs(c.variance - variance);
    const std::string tag = "n=" + std::to_string(c.n);
    report.checks.push_back({"mean_z " + tag, z_mean, calibration::kMomentStandardErrors, Comparison::AtMost});
    report.checks.push_back({"variance_z " + tag, z_var, calibration::kMomentStandardErrors, Comparison::AtMost});
    rows.push_back({{"n", c.n},
                    {"sample_mean", c.mean},
                    {"exact_mean", mean},
                    {"se_mean", se_mean},
                    {"sample_variance", c.variance},
                    {"exact_variance", variance},
                    {"se_variance", se_var}});
  }
  return report;
}

// ---------------------------------------------------------------- LIL

LilEnvelope::LilEnvelope(const ErwParams& params) : critical_(params.regime() == Regime::Critical) {
  require_not_superdiffusive(params, "LIL envelope");
  constant_ = critical_ ? std::sqrt(2.0) : std::sqrt(2.0 / (3.0 - 4.0 * params.p()));
}

double LilEnvelope::normalizer(std::int64_t k) const {
  if (k < 16) throw DomainError("LIL normalizer needs k >= 16");
  const auto kd = static_cast<double>(k);
  if (critical_) return std::sqrt(kd * std::log(kd) * std::log(std::log(std::log(kd))));
  return std::sqrt(kd * std::log(std::log(kd)));
}

double lil_running_max(std::span<const std::int64_t> positions, const LilEnvelope& envelope, std::int64_t k_start) {
  if (k_start < 16) throw DomainError("LIL window must start at k >= 16");
  const auto len = static_cast<std::int64_t>(positions.size());
  if (len < k_start) throw DomainError("path shorter than the LIL window start");
  double best = 0.0;
  for (std::int64_t k = k_start; k <= len; ++k) {
    const auto x = std::abs(positions[static_cast<std::size_t>(k - 1)]);
    best = std::max(best, static_cast<double>(x) / envelope(k));
  }
  return best;
}

TestReport lil_verdict(const ErwParams& params, std::span<const double> maxima, std::int64_t n_max,
                       std::uint64_t seed) {
  require_finite(maxima, "lil_verdict");
  const auto count = static_cast<std::int64_t>(maxima.size());
  const auto exceed = std::count_if(maxima.begin(), maxima.end(),
                                    [](double m) { return m > calibration::kLilExceedanceLevel; });
  const auto sorted = sorted_copy(maxima);
  TestReport report{"lil", params, n_max, count, seed};
  report.checks.push_back({"exceedance_fraction_above_" + format_double(calibration::kLilExceedanceLevel),
                           static_cast<double>(exceed) / static_cast<double>(count),
                           calibration::kLilMaxExceedanceFraction, Comparison::AtMost});
  report.checks.push_back(
      {"pooled_running_max", sorted.back(), calibration::kLilAttainmentLevel, Comparison::AtLeast});
  report.details["envelope_constant"] = LilEnvelope(params).constant();
  report.details["running_max_quantiles"] = {{"min", sorted.front()},
                                             {"q05", quantile_sorted(sorted, 0.05)},
                                             {"median", quantile_sorted(sorted, 0.5)},
                                             {"q95", quantile_sorted(sorted, 0.95)},
                                             {"max", sorted.back()}};
  report.details["running_max"] = std::vector<double>(maxima.begin(), maxima.end());
  return report;
}

TestReport verify_lil_envelope(const ErwParams& params, std::int64_t n_max, std::int64_t paths, std::uint64_t seed,
                               const LilOptions& options) {
  const LilEnvelope envelope(params);
  if (options.window_start < 16) throw DomainError("LIL window must start at k >= 16");
  if (n_max < std::max<std::int64_t>(options.window_start, 1000)) {
    throw DomainError("verify_lil_envelope needs n_max >= 1000 and >= the window start");
  }
  if (paths < 1) throw DomainError("verify_lil_envelope needs at least one path");
  const std::int64_t k0 = options.window_start;
  std::vector<double> inverse_envelope(static_cast<std::size_t>(n_max - k0 + 1));
  for (std::int64_t k = k0; k <= n_max; ++k) {
    inverse_envelope[static_cast<std::size_t>(k - k0)] = 1.0 / envelope(k);
  }

  std::vector<double> maxima(static_cast<std::size_t>(paths), 0.0);
  parallel_for(paths, options.workers, [&](std::int64_t i) {
    thread_local StepBits scratch;
    double best = 0.0;
    simulate_path(params, n_max, options.mode, seed, static_cast<std::uint64_t>(i), scratch,
                  [&](std::int64_t k, std::int64_t x) {
                    if (k >= k0) {
                      best = std::max(best, static_cast<double>(x < 0 ? -x : x) *
                                                inverse_envelope[static_cast<std::size_t>(k - k0)]);
                    }
                  });
    maxima[static_cast<std::size_t>(i)] = best;
  });
  auto report = lil_verdict(params, maxima, n_max, seed);
  report.details["window_start"] = k0;
  report.details["mode"] = std::string(to_string(options.mode));
  return report;
}

// ---------------------------------------------------------------- sweep

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("least squares needs two or more paired points");
  const double mx = sample_mean(x);
  const double my = sample_mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("least squares needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    fit.rss += r * r;
  }
  return fit;
}

SweepRow fit_variance_exponent(const ErwParams& params, std::span<const std::int64_t> n_grid,
                               std::span<const double> variances) {
  require_n_grid_decades(n_grid);
  if (variances.size() != n_grid.size()) throw DomainError("one variance per grid point is required");
  std::vector<double> log_n;
  std::vector<double> log_var;
  std::vector<double> log_var_per_log;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (!(variances[i] > 0.0) || !std::isfinite(variances[i])) {
      throw DomainError("variance sweep needs positive finite variances");
    }
    const double ln = std::log(static_cast<double>(n_grid[i]));
    log_n.push_back(ln);
    log_var.push_back(std::log(variances[i]));
    log_var_per_log.push_back(std::log(variances[i]) - std::log(ln));
  }

  SweepRow row;
  row.p = params.p();
  row.expected = std::max(1.0, 4.0 * params.p() - 2.0);
  row.variances.assign(variances.begin(), variances.end());
  row.power_law = least_squares(log_n, log_var);
  row.model = "power";
  row.exponent = row.power_law.slope;

  const auto exact = moment_table(params, n_grid);
  std::vector<double> log_exact;
  std::vector<double> log_exact_per_log;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    log_exact.push_back(std::log(exact.variance[i]));
    log_exact_per_log.push_back(std::log(exact.variance[i]) - std::log(log_n[i]));
    const double r = log_var[i] - log_exact[i];
    sum_sq += r * r;
  }
  row.log_rms_vs_exact = std::sqrt(sum_sq / static_cast<double>(n_grid.size()));
  row.exact_power_law = least_squares(log_n, log_exact);

  if (params.regime() == Regime::Critical) {
    row.log_corrected = least_squares(log_n, log_var_per_log);
    row.exact_log_corrected = least_squares(log_n, log_exact_per_log);
    if (row.log_corrected->rss < row.power_law.rss) {
      row.model = "n^a log n";
      row.exponent = row.log_corrected->slope;
    }
  }
  return row;
}

SweepResult variance_exponent_sweep(std::span<const double> p_grid, std::span<const std::int64_t> n_grid,
                                    std::int64_t paths, std::uint64_t seed, const SweepOptions& options) {
  require_n_grid_decades(n_grid);
  if (p_grid.empty()) throw DomainError("variance sweep needs at least one p");
  if (paths < 2) throw DomainError("variance sweep needs at least two paths");
  SweepResult out;
  out.n_grid.assign(n_grid.begin(), n_grid.end());
  out.paths = paths;
  out.seed = seed;
  out.q = options.q;
  for (double p : p_grid) {
    const ErwParams params(p, options.q);
    const auto ensemble = run_ensemble(params, n_grid, paths, seed, options.mode, {options.workers, {}});
    std::vector<double> variances;
    for (const auto& c : ensemble.checkpoints) variances.push_back(c.variance);
    out.rows.push_back(fit_variance_exponent(params, n_grid, variances));
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.p < b.p; });
  return out;
}

TestReport sweep_verdict(const SweepResult& sweep) {
  if (sweep.rows.empty()) throw DomainError("sweep has no rows");
  TestReport report{"sweep", ErwParams(sweep.rows.front().p, sweep.q), sweep.n_grid.back(), sweep.paths,
                    sweep.seed};
  double worst_drop = -std::numeric_limits<double>::infinity();
  auto& rows = report.details["rows"] = nlohmann::json::array();
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    report.checks.push_back({"exponent_error p=" + format_double(r.p), std::abs(r.exponent - r.expected),
                             calibration::kSweepExponentTolerance, Comparison::AtMost});
    if (i > 0) worst_drop = std::max(worst_drop, sweep.rows[i - 1].power_law.slope - r.power_law.slope);
    nlohmann::json row{{"p", r.p},
                       {"exponent", r.exponent},
                       {"expected", r.expected},
                       {"model", r.model},
                       {"power_slope", r.power_law.slope},
                       {"power_rss", r.power_law.rss},
                       {"exact_power_slope", r.exact_power_law.slope},
                       {"log_rms_vs_exact", r.log_rms_vs_exact}};
    if (r.log_corrected) {
      row["log_corrected_slope"] = r.log_corrected->slope;
      row["log_corrected_rss"] = r.log_corrected->rss;
      row["exact_log_corrected_slope"] = r.exact_log_corrected->slope;
      row["exact_log_corrected_rss"] = r.exact_log_corrected->rss;
      row["exact_power_rss"] = r.exact_power_law.rss;
    }
    rows.push_back(std::move(row));
  }
  if (sweep.rows.size() > 1) {
    report.checks.push_back({"power_slope_largest_decrease_in_p", worst_drop, 0.0, Comparison::AtMost});
  }
  report.details["n_grid"] = sweep.n_grid;
  report.details["q"] = sweep.q;
  return report;
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "p,exponent,model,power_slope,expected\n";
  for (const auto& r : sweep.rows) {
    os << format_double(r.p) << ',' << format_double(r.exponent) << ',' << r.model << ','
       << format_double(r.power_law.slope) << ',' << format_double(r.expected) << '\n';
  }
}

// ---------------------------------------------------------------- equivalence

TestReport verify_equivalence(const ErwParams& params, std::int64_t n, std::int64_t paths, std::uint64_t seed,
                              const EquivalenceOptions& options) {
  if (n < 1) throw DomainError("verify_equivalence needs n >= 1");
  const std::int64_t grid[] = {n};
  const EnsembleOptions ensemble_options{options.workers, options.limits};
  const auto collapsed = run_ensemble(params, grid, paths, seed, SimMode::Collapsed, ensemble_options);
  const auto faithful_seed = derive_seed(seed, 1);
  const auto faithful = run_ensemble(params, grid, paths, faithful_seed, SimMode::Faithful, ensemble_options);
  const auto a = to_doubles(faithful.at(n).values);
  const auto b = to_doubles(collapsed.at(n).values);
  const auto ks = two_sample_ks(a, b, options.alpha);
  TestReport report{"equivalence", params, n, paths, seed};
  report.checks.push_back({"two_sample_ks_distance", ks.distance, ks.critical, Comparison::AtMost});
  report.details["alpha"] = ks.alpha;
  report.details["faithful_seed"] = faithful_seed;
  report.details["faithful_mean"] = faithful.at(n).mean;
  report.details["faithful_variance"] = faithful.at(n).variance;
  report.details["collapsed_mean"] = collapsed.at(n).mean;
  report.details["collapsed_variance"] = collapsed.at(n).variance;
  report.details["exact_variance"] = variance_exact(params, n);
  return report;
}

}  // namespace erw
