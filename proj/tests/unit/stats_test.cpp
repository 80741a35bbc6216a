#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "erw/exact_moments.hpp"
#include "erw/rng.hpp"
#include "erw/stats.hpp"
#include "oracles.hpp"

using namespace erw;

namespace {

double inverse_normal_cdf(double u) {
  // Bisection on the library-independent erfc form.
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(KsDistance, QuantileConstruction) {
  const int n = 1000;
  std::vector<double> samples;
  for (int i = 1; i <= n; ++i) samples.push_back(inverse_normal_cdf((i - 0.5) / n));
  EXPECT_LE(ks_distance_normal(samples), 0.5 / n + 1e-12);
}

TEST(KsDistance, PointMassAtMedian) {
  const std::vector<double> zeros(50, 0.0);
  EXPECT_DOUBLE_EQ(ks_distance_normal(zeros), 0.5);
}

TEST(KsDistance, RejectsBadInput) {
  EXPECT_THROW(ks_distance_normal(std::vector<double>{}), DomainError);
  EXPECT_THROW(ks_distance_normal(std::vector<double>{0.1, std::nan("")}), DomainError);
  EXPECT_THROW(ks_distance_normal(std::vector<double>{std::numeric_limits<double>::infinity()}), DomainError);
}

TEST(KsDistance, CriticalValueCoverage) {
  // Under the null, D < 1.36/sqrt(N) in 95% of runs; require at least 90 of 100 seeds.
  const int n = 100000;
  int below = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = make_stream(seed, 0, StreamPurpose::Statistics);
    NormalSampler normal;
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    if (ks_distance_normal(v) < 1.36 / std::sqrt(n)) ++below;
  }
  EXPECT_GE(below, 90);
}

TEST(KsDistance, LatticeAgainstBinomial) {
  const std::int64_t n = 20;
  const auto cdf = oracle::ssrw_cdf(n);
  std::vector<double> support;
  for (std::int64_t x = -n; x <= n; x += 2) support.push_back(static_cast<double>(x));
  auto F = [&](double x) { return cdf[static_cast<std::size_t>((static_cast<std::int64_t>(x) + n) / 2)]; };
  const std::int64_t grid[] = {n};
  const auto e = run_ensemble(ErwParams(0.5, 0.5), grid, 50000, 3, SimMode::Collapsed);
  EXPECT_LT(ks_distance_lattice(to_doubles(e.at(n).values), support, F), 0.01);
  // A continuous-formula KS on lattice data is not the same thing.
  const std::vector<double> off = {1.0};
  EXPECT_THROW(ks_distance_lattice(off, support, F), DomainError);
}

TEST(TwoSampleKs, Basics) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 3, 2};
  const auto same = two_sample_ks(a, a);
  EXPECT_EQ(same.distance, 0.0);
  EXPECT_FALSE(same.rejects());
  const std::vector<double> b = {10, 11, 12};
  EXPECT_EQ(two_sample_ks(a, b).distance, 1.0);
  EXPECT_NEAR(two_sample_ks(a, b, 0.05).critical, 1.3581 * std::sqrt(10.0 / 21.0), 1e-4);
  EXPECT_THROW(two_sample_ks(a, std::vector<double>{}), DomainError);
  EXPECT_THROW(two_sample_ks(a, std::vector<double>{std::nan("")}), DomainError);
}

TEST(TwoSampleKs, HandlesTies) {
  const std::vector<double> a = {0, 0, 0, 1};
  const std::vector<double> b = {0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(two_sample_ks(a, b).distance, 0.5);
}

TEST(TwoSampleKs, DistinctLawsRejected) {
  const std::int64_t grid[] = {10000};
  const auto a = run_ensemble(ErwParams(0.5, 0.5), grid, 20000, 1, SimMode::Collapsed);
  const auto b = run_ensemble(ErwParams(0.74, 0.5), grid, 20000, 2, SimMode::Collapsed);
  EXPECT_TRUE(two_sample_ks(to_doubles(a.at(10000).values), to_doubles(b.at(10000).values), 0.01).rejects());
}

TEST(TestReport, VerdictIsAllChecks) {
  TestReport r("x", ErwParams(0.5, 0.5), 10, 2, 3);
  EXPECT_FALSE(r.pass());
  r.checks.push_back({"a", 0.1, 0.2, Comparison::AtMost});
  EXPECT_TRUE(r.pass());
  r.checks.push_back({"b", 0.1, 0.2, Comparison::AtLeast});
  EXPECT_FALSE(r.pass());
  const auto j = to_json(r);
  EXPECT_EQ(j["verdict"], "fail");
  EXPECT_EQ(j["checks"][1]["pass"], false);
  EXPECT_EQ(j["seed"], 3);
}

TEST(VerifyClt, SymmetricWalkPasses) {
  const auto r = verify_clt(ErwParams(0.5, 0.5), 2000, 20000, 5);
  EXPECT_LT(r.checks.at(0).statistic, 0.03);
  EXPECT_EQ(r.checks.at(0).threshold, calibration::kCltKsDiffusive);
}

TEST(VerifyClt, GuardsAndReproducibility) {
  EXPECT_THROW(verify_clt(ErwParams(0.9, 0.5), 1000, 10, 1), RegimeError);
  EXPECT_THROW(verify_clt(ErwParams(0.5, 0.5), 2, 10, 1), DomainError);
  const auto a = verify_clt(ErwParams(0.6, 0.5), 500, 3000, 9, {false, SimMode::Collapsed, 1});
  const auto b = verify_clt(ErwParams(0.6, 0.5), 500, 3000, 9, {false, SimMode::Collapsed, 4});
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(verify_clt(ErwParams(0.75, 0.5), 500, 100, 9).checks[0].threshold, calibration::kCltKsCritical);
}

TEST(VerifyClt, CenteredModeSubtractsExactMean) {
  const ErwParams params(0.6, 1.0);
  const std::int64_t grid[] = {400};
  const auto e = run_ensemble(params, grid, 100, 4, SimMode::Collapsed);
  const auto raw = clt_statistics(e, 400, false);
  const auto centered = clt_statistics(e, 400, true);
  const double shift = mean_exact(params, 400) / clt_normalizer(params, 400);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(raw[i] - centered[i], shift, 1e-12);
}

TEST(Lil, EnvelopeConstants) {
  EXPECT_DOUBLE_EQ(LilEnvelope(ErwParams(0.5, 0.5)).constant(), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(LilEnvelope(ErwParams(0.6, 0.5)).constant(), std::sqrt(2.0 / 0.6));
  EXPECT_DOUBLE_EQ(LilEnvelope(ErwParams(0.75, 0.5)).constant(), std::sqrt(2.0));
  const LilEnvelope crit(ErwParams(0.75, 0.5));
  EXPECT_NEAR(crit.normalizer(1000), std::sqrt(1000 * std::log(1000.0) * std::log(std::log(std::log(1000.0)))),
              1e-9);
  EXPECT_THROW(crit.normalizer(15), DomainError);
  EXPECT_THROW(LilEnvelope(ErwParams(0.8, 0.5)), RegimeError);
}

TEST(Lil, SyntheticBallisticPathFails) {
  const ErwParams params(0.5, 0.5);
  const LilEnvelope envelope(params);
  std::vector<std::int64_t> positions;
  for (std::int64_t k = 1; k <= 100000; ++k) positions.push_back(k);
  const double max = lil_running_max(positions, envelope);
  EXPECT_GT(max, 50.0);
  std::vector<std::int64_t> shorter(positions.begin(), positions.begin() + 10000);
  EXPECT_GT(max, lil_running_max(shorter, envelope));
  const std::vector<double> maxima(20, max);
  EXPECT_FALSE(lil_verdict(params, maxima, 100000, 0).pass());
}

TEST(Lil, VerifyMatchesRunningMaxOfSimulatedPaths) {
  const ErwParams params(0.6, 0.5);
  const auto report = verify_lil_envelope(params, 5000, 6, 21);
  const LilEnvelope envelope(params);
  const auto maxima = report.details["running_max"].get<std::vector<double>>();
  ASSERT_EQ(maxima.size(), 6u);
  for (std::uint64_t i = 0; i < 6; ++i) {
    StepBits scratch;
    std::vector<std::int64_t> xs;
    simulate_path(params, 5000, SimMode::Collapsed, 21, i, scratch,
                  [&](std::int64_t, std::int64_t x) { xs.push_back(x); });
    EXPECT_NEAR(maxima[i], lil_running_max(xs, envelope), 1e-12);
  }
  EXPECT_THROW(verify_lil_envelope(params, 999, 5, 1), DomainError);
  EXPECT_THROW(verify_lil_envelope(ErwParams(0.9, 0.5), 5000, 5, 1), RegimeError);
}

TEST(Sweep, LeastSquares) {
  const std::vector<double> x = {0, 1, 2, 3};
  const std::vector<double> y = {1, 3, 5, 7};
  const auto fit = least_squares(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.rss, 0.0, 1e-24);
}

TEST(Sweep, ExactVariancesRecoverExponents) {
  const std::vector<std::int64_t> grid = {1000, 3000, 10000, 30000, 100000};
  for (double p : {0.5, 0.6, 0.75, 0.9}) {
    const ErwParams params(p, 0.5);
    std::vector<double> v;
    for (auto n : grid) v.push_back(variance_exact(params, n));
    const auto row = fit_variance_exponent(params, grid, v);
    EXPECT_NEAR(row.exponent, std::max(1.0, 4 * p - 2), p == 0.9 ? 0.1 : 0.05) << p;
    EXPECT_NEAR(row.log_rms_vs_exact, 0.0, 1e-12);
    if (p == 0.75) {
      ASSERT_TRUE(row.log_corrected.has_value());
      EXPECT_LT(row.log_corrected->rss, row.power_law.rss);
      EXPECT_EQ(row.model, "n^a log n");
      EXPECT_GT(row.power_law.slope, 1.0);
      EXPECT_LT(row.power_law.slope, 1.2);
    } else {
      EXPECT_FALSE(row.log_corrected.has_value());
    }
  }
  const std::vector<std::int64_t> narrow = {1000, 50000};
  EXPECT_THROW(fit_variance_exponent(ErwParams(0.5, 0.5), narrow, std::vector<double>{1000, 50000}), DomainError);
}

TEST(Sweep, SmallRunIsMonotoneAndReproducible) {
  const std::vector<double> ps = {0.5, 0.9};
  const std::vector<std::int64_t> grid = {100, 1000, 10000};
  const auto a = variance_exponent_sweep(ps, grid, 2000, 8, {0.5, SimMode::Collapsed, 1});
  const auto b = variance_exponent_sweep(ps, grid, 2000, 8, {0.5, SimMode::Collapsed, 3});
  std::ostringstream ca, cb;
  write_sweep_csv(ca, a);
  write_sweep_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  const auto report = sweep_verdict(a);
  EXPECT_EQ(report.checks.size(), 3u);
  EXPECT_LT(a.rows[0].power_law.slope, a.rows[1].power_law.slope);
}

TEST(Equivalence, FaithfulAndCollapsedAgree) {
  const auto r = verify_equivalence(ErwParams(0.7, 0.5), 500, 5000, 13);
  EXPECT_TRUE(r.pass()) << r.checks[0].statistic << " vs " << r.checks[0].threshold;
}

TEST(VerifyMoments, ChecksEveryCheckpoint) {
  const std::int64_t grid[] = {10, 1000};
  const auto e = run_ensemble(ErwParams(0.6, 0.5), grid, 20000, 6, SimMode::Collapsed);
  const auto r = verify_moments(e);
  EXPECT_EQ(r.checks.size(), 4u);
  EXPECT_TRUE(r.pass());
}
