#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "erw/coupling.hpp"
#include "erw/exact_moments.hpp"
#include "erw/scaling.hpp"
#include "erw/stats.hpp"

using namespace erw;

TEST(IncrementSupport, Examples) {
  for (double p : {0.3, 0.6}) {
    const auto s = increment_support(0, 2, ErwParams(p, 0.5));
    const double a3 = a_seq(p, 3)[2];
    EXPECT_NEAR(s.d_plus, 1 / a3, 1e-15);
    EXPECT_NEAR(s.d_minus, -1 / a3, 1e-15);
    EXPECT_DOUBLE_EQ(s.prob_plus, 0.5);
  }
  const auto s = increment_support(1, 1, ErwParams(0.6, 0.5));
  const double a2 = a_seq(0.6, 2)[1];
  EXPECT_NEAR(s.mu, 0.2, 1e-15);
  EXPECT_NEAR(s.d_plus, 0.8 / a2, 1e-15);
  EXPECT_NEAR(s.d_minus, -1.2 / a2, 1e-15);
  EXPECT_NEAR(s.prob_plus, 0.6, 1e-15);
  EXPECT_THROW(increment_support(2, 1, ErwParams(0.6, 0.5)), DomainError);
}

TEST(IncrementSupport, IdentitiesHoldOnEveryReachableState) {
  for (double p : {0.1, 0.5, 0.6, 0.75}) {
    const ErwParams params(p, 0.5);
    const auto a = a_seq(p, 1001);
    for (std::int64_t k = 1; k <= 1000; ++k) {
      const double a_next = a[static_cast<std::size_t>(k)];
      for (std::int64_t x = -k; x <= k; x += 2) {
        const auto s = increment_support(x, k, params, a_next);
        ASSERT_LT(s.d_minus, 0.0);
        ASSERT_GT(s.d_plus, 0.0);
        const double scale = s.d_plus - s.d_minus;
        ASSERT_NEAR(s.prob_plus * s.d_plus + (1 - s.prob_plus) * s.d_minus, 0.0, 1e-14 * scale);
        ASSERT_NEAR(-s.d_minus / scale, s.prob_plus, 1e-14);
        ASSERT_LE(std::max(s.d_plus, -s.d_minus), 2 / a_next + 1e-15);
      }
    }
  }
}

TEST(EmbedWalk, TraceInvariants) {
  for (double p : {0.5, 0.6, 0.75}) {
    const ErwParams params(p, 0.5);
    const std::int64_t probes[] = {100, 500};
    const auto trace = embed_walk(params, 500, GridPolicy{}, 17, probes);
    ASSERT_EQ(trace.length(), 500);
    EXPECT_NO_THROW(check_walk_invariants(trace.walk));
    const auto tables = ScalingTables::build(params, 500);
    const auto m = martingale_transform(trace.walk, tables);
    for (std::int64_t k = 1; k <= 500; ++k) {
      const auto i = static_cast<std::size_t>(k - 1);
      if (i > 0) EXPECT_GT(trace.T[i], trace.T[i - 1]);
      EXPECT_LE(trace.overshoot[i], trace.max_move[i]);
      EXPECT_NEAR(trace.m[i], m.at(k), 1e-9);
      EXPECT_EQ(trace.w_at_T[i], trace.m[i]);
    }
    const auto report = check_embedding(trace);
    EXPECT_TRUE(report.T_strictly_increasing);
    EXPECT_TRUE(report.overshoots_within_grid_move);
    ASSERT_EQ(report.checkpoints.size(), 2u);
    EXPECT_EQ(report.checkpoints[1].k, 500);
  }
}

TEST(EmbedWalk, DeterministicAndSeedSensitive) {
  const ErwParams params(0.6, 0.5);
  const auto a = embed_walk(params, 300, GridPolicy{}, 3);
  const auto b = embed_walk(params, 300, GridPolicy{}, 3);
  EXPECT_EQ(a.T, b.T);
  EXPECT_EQ(a.walk.positions, b.walk.positions);
  EXPECT_NE(embed_walk(params, 300, GridPolicy{}, 4).T, a.T);
}

TEST(EmbedWalk, Guards) {
  EXPECT_THROW(embed_walk(ErwParams(0.8, 0.5), 100, GridPolicy{}, 1), RegimeError);
  EXPECT_THROW(embed_walk(ErwParams(0.5, 0.5), 1, GridPolicy{}, 1), DomainError);
  const std::int64_t bad[] = {50, 20};
  EXPECT_THROW(embed_walk(ErwParams(0.5, 0.5), 100, GridPolicy{}, 1, bad), DomainError);
  GridPolicy capped;
  capped.max_grid_steps = 3;
  EXPECT_THROW(embed_walk(ErwParams(0.5, 0.5), 100, capped, 1), ResourceError);
}

TEST(EmbedWalk, DeterministicFirstStepWhenQIsOne) {
  const auto trace = embed_walk(ErwParams(0.6, 1.0), 50, GridPolicy{}, 2);
  EXPECT_EQ(trace.walk.x(1), 1);
  EXPECT_EQ(trace.T[0], 0.0);
}

TEST(CheckEmbedding, SyntheticExactProbesGiveZeroResidual) {
  const ErwParams params(0.6, 0.5);
  const std::int64_t probes[] = {20, 40};
  auto trace = embed_walk(params, 40, GridPolicy{}, 5, probes);
  for (auto& probe : trace.probes) probe.w = trace.m[static_cast<std::size_t>(probe.k - 1)];
  const auto report = check_embedding(trace);
  for (const auto& c : report.checkpoints) {
    EXPECT_EQ(c.residual, 0.0);
    ASSERT_TRUE(c.prob_normalized.has_value());
    EXPECT_EQ(*c.prob_normalized, 0.0);
  }
  EXPECT_THROW(check_embedding(embed_walk(params, 10, GridPolicy{}, 5)), DomainError);
}

TEST(CheckEmbedding, StrongNormalizationUndefinedForSmallScale) {
  // At p = 0.6 the s_k stay below e for small k, so the log log normalization is undefined there.
  const ErwParams params(0.6, 0.5);
  const std::int64_t probes[] = {16};
  const auto report = check_embedding(embed_walk(params, 16, GridPolicy{}, 1, probes));
  const double s = std::sqrt(report.checkpoints[0].s2);
  EXPECT_EQ(report.checkpoints[0].strong_normalized.has_value(), s > std::exp(1.0));
}

TEST(CheckEmbedding, MedianOvershootOverEndpointExits) {
  const auto trace = embed_walk(ErwParams(0.5, 0.5), 400, GridPolicy{}, 8);
  const auto report = check_embedding(trace);
  EXPECT_GT(report.median_overshoot, 0.0);
  EXPECT_LE(report.median_overshoot, report.max_overshoot);
}

TEST(CheckEmbedding, RefiningGridShrinksOvershoot) {
  // Median overshoot scales like sqrt(dt): a 4x finer grid roughly halves it.
  const ErwParams params(0.5, 0.5);
  GridPolicy coarse;
  coarse.kappa = 0.04;
  GridPolicy fine;
  fine.kappa = 0.01;
  const double a = check_embedding(embed_walk(params, 3000, coarse, 12)).median_overshoot;
  const double b = check_embedding(embed_walk(params, 3000, fine, 12)).median_overshoot;
  EXPECT_GT(a / b, 1.6);
  EXPECT_LT(a / b, 2.5);
}

TEST(Couplings, InducedWalkMatchesCollapsedLaw) {
  const ErwParams params(0.5, 0.5);
  const std::int64_t probes[] = {1000};
  const auto ensemble = run_couplings(params, 1000, GridPolicy{}, 41, probes, 1000);
  std::vector<double> induced;
  for (const auto& t : ensemble.traces) induced.push_back(static_cast<double>(t.x_n));
  const std::int64_t grid[] = {1000};
  const auto direct = run_ensemble(params, grid, 20000, 42, SimMode::Collapsed);
  const auto ks = two_sample_ks(induced, to_doubles(direct.at(1000).values), 0.01);
  EXPECT_FALSE(ks.rejects()) << ks.distance << " vs " << ks.critical;
  EXPECT_NEAR(mean_terminal_ratio(ensemble), 1.0, 0.1);
}

TEST(Couplings, WorkerIndependentAndSummaries) {
  const ErwParams params(0.6, 0.5);
  const std::int64_t probes[] = {100, 300};
  const auto one = run_couplings(params, 300, GridPolicy{}, 9, probes, 12, 1);
  const auto many = run_couplings(params, 300, GridPolicy{}, 9, probes, 12, 5);
  EXPECT_EQ(to_json(one).dump(), to_json(many).dump());
  std::ostringstream a, b;
  write_coupling_summary_csv(a, one);
  write_coupling_summary_csv(b, many);
  EXPECT_EQ(a.str(), b.str());
  const double f = shrink_fraction(one, 100, 300);
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0);
  EXPECT_THROW(shrink_fraction(one, 100, 200), DomainError);
  EXPECT_EQ(checkpoint_medians(one).size(), 2u);
}

TEST(TraceCsv, Columns) {
  std::ostringstream os;
  write_trace_csv(os, embed_walk(ErwParams(0.5, 0.5), 20, GridPolicy{}, 1));
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "k,T_k,W_at_T_k,M_k,overshoot_k");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 21);
}
