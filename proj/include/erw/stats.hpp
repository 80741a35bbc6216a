#pragma once

// Statistical battery: KS machinery plus desk-scale checks of the CLT, the
// LIL envelope and the variance growth exponent.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "erw/calibration.hpp"
#include "erw/engine.hpp"
#include "erw/params.hpp"
#include "json.hpp"

namespace erw {

double standard_normal_cdf(double x);

/// sup_x |F_N(x) - cdf(x)| for the empirical CDF of `samples`. Exact for
/// continuous and lattice samples alike. Throws DomainError on an empty
/// sample or a non-finite value.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);
double ks_distance_normal(std::span<const double> samples);

/// Same distance against a CDF that only jumps on `support` (ascending).
/// Every sample must lie on the support.
double ks_distance_lattice(std::span<const double> samples, std::span<const double> support,
                           const std::function<double(double)>& cdf);

/// c(alpha) = sqrt(-log(alpha/2) / 2), the large-sample KS critical coefficient.
double ks_critical_coefficient(double alpha);

struct TwoSampleKs {
  double distance = 0.0;
  double critical = 0.0;
  double alpha = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;

  bool rejects() const noexcept { return distance > critical; }
};

/// Two-sample KS distance with critical value c(alpha) sqrt((n+m)/(n m)).
TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b,
                          double alpha = calibration::kKsAlpha);

enum class Comparison { AtMost, AtLeast };

struct Check {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  Comparison comparison = Comparison::AtMost;

  bool pass() const noexcept {
    return comparison == Comparison::AtMost ? statistic <= threshold : statistic >= threshold;
  }
};

struct TestReport {
  TestReport(std::string name_, const ErwParams& params_, std::int64_t n_, std::int64_t paths_,
             std::uint64_t seed_)
      : name(std::move(name_)), params(params_), n(n_), paths(paths_), seed(seed_) {}

  std::string name;
  ErwParams params;
  std::int64_t n = 0;
  std::int64_t paths = 0;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();

  /// True iff every check passes (and there is at least one).
  bool pass() const noexcept;
};

nlohmann::json to_json(const TestReport& report);

// ---------------------------------------------------------------- CLT

/// sqrt(n/(3-4p)) for p < 3/4, sqrt(n log n) for p = 3/4.
double clt_normalizer(const ErwParams& params, std::int64_t n);

/// X_n / clt_normalizer for every path at checkpoint n. With `centered`,
/// E[X_n] is subtracted first.
std::vector<double> clt_statistics(const EnsembleStats& ensemble, std::int64_t n, bool centered = false);

struct CltOptions {
  bool centered = false;
  SimMode mode = SimMode::Collapsed;
  unsigned workers = 0;
};

/// KS distance of the normalized X_n to N(0,1). Requires p <= 3/4 and n >= 3.
TestReport verify_clt(const ErwParams& params, std::int64_t n, std::int64_t paths, std::uint64_t seed,
                      const CltOptions& options = {});
/// Same check on an ensemble that already has checkpoint n.
TestReport verify_clt(const EnsembleStats& ensemble, std::int64_t n, bool centered = false);

// ---------------------------------------------------------------- moments

/// Monte Carlo mean and variance at every checkpoint against the exact
/// recursion, each within kMomentStandardErrors standard errors.
TestReport verify_moments(const EnsembleStats& ensemble);

// ---------------------------------------------------------------- LIL

/// L b_k with b_k = sqrt(k log log k), L = sqrt(2/(3-4p)) for p < 3/4, and
/// b_k = sqrt(k log k log log log k), L = sqrt(2) at p = 3/4.
class LilEnvelope {
 public:
  explicit LilEnvelope(const ErwParams& params);

  double constant() const noexcept { return constant_; }
  /// b_k; requires k >= 16.
  double normalizer(std::int64_t k) const;
  double operator()(std::int64_t k) const { return constant_ * normalizer(k); }

 private:
  bool critical_;
  double constant_;
};

/// max over k in [k_start, len] of |X_k| / envelope(k); positions[k-1] = X_k.
double lil_running_max(std::span<const std::int64_t> positions, const LilEnvelope& envelope,
                       std::int64_t k_start = calibration::kLilWindowStart);

/// Exceedance and attainment checks over per-path running maxima.
TestReport lil_verdict(const ErwParams& params, std::span<const double> maxima, std::int64_t n_max,
                       std::uint64_t seed);

struct LilOptions {
  std::int64_t window_start = calibration::kLilWindowStart;
  SimMode mode = SimMode::Collapsed;
  unsigned workers = 0;
};

TestReport verify_lil_envelope(const ErwParams& params, std::int64_t n_max, std::int64_t paths, std::uint64_t seed,
                               const LilOptions& options = {});

// ---------------------------------------------------------------- sweep

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y);

struct SweepRow {
  double p = 0.0;
  /// Slope of log Var vs log n.
  LineFit power_law;
  /// Slope of log(Var / log n) vs log n; fitted at the critical point only.
  std::optional<LineFit> log_corrected;
  /// "power" or "n^a log n", whichever has the smaller residual sum of squares.
  std::string model;
  double exponent = 0.0;
  /// max(1, 4p - 2)
  double expected = 0.0;
  std::vector<double> variances;
  /// Same fits applied to the exact variance curve.
  LineFit exact_power_law;
  std::optional<LineFit> exact_log_corrected;
  /// RMS over the grid of log(sample variance / exact variance).
  double log_rms_vs_exact = 0.0;
};

struct SweepResult {
  std::vector<std::int64_t> n_grid;
  std::int64_t paths = 0;
  std::uint64_t seed = 0;
  double q = 0.5;
  std::vector<SweepRow> rows;
};

/// Fits one row from sample variances on n_grid.
SweepRow fit_variance_exponent(const ErwParams& params, std::span<const std::int64_t> n_grid,
                               std::span<const double> variances);

struct SweepOptions {
  double q = 0.5;
  SimMode mode = SimMode::Collapsed;
  unsigned workers = 0;
};

/// One ensemble per p, all on the same master seed. n_grid must span at least two decades.
SweepResult variance_exponent_sweep(std::span<const double> p_grid, std::span<const std::int64_t> n_grid,
                                    std::int64_t paths, std::uint64_t seed, const SweepOptions& options = {});

/// Exponent within tolerance of max(1, 4p-2) for every p, and power-law
/// slope non-decreasing in p.
TestReport sweep_verdict(const SweepResult& sweep);

/// CSV columns p,exponent,model,power_slope,expected.
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

// ---------------------------------------------------------------- equivalence

struct EquivalenceOptions {
  unsigned workers = 0;
  double alpha = calibration::kKsAlpha;
  ResourceLimits limits{};
};

/// Two-sample KS between terminal X_n of faithful and collapsed ensembles
/// (independent seeds derived from `seed`); passes when not rejected.
TestReport verify_equivalence(const ErwParams& params, std::int64_t n, std::int64_t paths, std::uint64_t seed,
                              const EquivalenceOptions& options = {});

std::vector<double> to_doubles(std::span<const std::int64_t> values);

}  // namespace erw
