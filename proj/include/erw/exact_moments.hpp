#pragma once

// Exact first and second moments of the elephant random walk and its
// one-step conditional law. These are the deterministic oracles that every
// statistical check is compared against.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <utility>
#include <vector>

#include "erw/params.hpp"

namespace erw {

/// P(eta_{n+1} = +1 | history) = 1/2 + (2p-1) x / (2n), where x = X_n.
///
/// Requires p in [0,1], n >= 1, |x| <= n and x = n (mod 2); throws DomainError otherwise.
double conditional_step_prob(double p, std::int64_t x, std::int64_t n);

/// E[X_n] by the recursion E[X_{k+1}] = (1 + (2p-1)/k) E[X_k], E[X_1] = 2q-1.
double mean_exact(const ErwParams& params, std::int64_t n);

/// E[X_n^2] by E[X_{k+1}^2] = (1 + 2(2p-1)/k) E[X_k^2] + 1, E[X_1^2] = 1.
/// Valid for every p in (0,1), including p = 1/2 and p = 3/4.
double second_moment_exact(const ErwParams& params, std::int64_t n);

double variance_exact(const ErwParams& params, std::int64_t n);

/// Leading-order growth of E[X_n^2]:
///   n/(3-4p)                          for p < 3/4
///   n log n                           for p = 3/4
///   n^{4p-2} / ((4p-3) Gamma(4p-2))   for p > 3/4
/// Requires n >= 2.
double variance_asymptote(const ErwParams& params, std::int64_t n);

/// (2q-1) Gamma(n+2p-1) / (Gamma(2p) Gamma(n)), evaluated through log-Gamma.
double mean_closed_form(const ErwParams& params, std::int64_t n);

/// n/(4p-3) [Gamma(n+4p-2) / (Gamma(4p-2) Gamma(n+1)) - 1].
/// Throws DomainError at the removable singularities p = 1/4, 1/2, 3/4.
double second_moment_closed_form(const ErwParams& params, std::int64_t n);

struct MomentTable {
  std::vector<std::int64_t> n_grid;
  std::vector<double> mean;
  std::vector<double> second_moment;
  std::vector<double> variance;
};

/// Per-(p,q) cache of the moment recursions. Tables grow on demand up to the
/// largest n requested so far; lookups take a shared lock, growth an
/// exclusive one.
class MomentCache {
 public:
  MomentTable table(const ErwParams& params, std::span<const std::int64_t> n_grid);
  std::pair<double, double> moments(const ErwParams& params, std::int64_t n);

  static MomentCache& global();

 private:
  struct Series {
    std::vector<double> mean;    // index k-1 holds E[X_k]
    std::vector<double> second;  // index k-1 holds E[X_k^2]
  };

  const Series& series_at_least(const ErwParams& params, std::int64_t n,
                                std::shared_lock<std::shared_mutex>& lock);

  std::shared_mutex mutex_;
  std::map<std::pair<double, double>, std::unique_ptr<Series>> series_;
};

/// Convenience wrapper around MomentCache::global().
MomentTable moment_table(const ErwParams& params, std::span<const std::int64_t> n_grid);

}  // namespace erw
