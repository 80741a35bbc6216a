#include "erw/exact_moments.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "erw/special.hpp"

namespace erw {
namespace {

void require_positive_n(std::int64_t n) {
  if (n < 1) throw DomainError("step count n must be >= 1, got " + std::to_string(n));
}

// Advances (E[X_k], E[X_k^2]) to k+1.
inline void advance(double feedback, std::int64_t k, double& mean, double& second) {
  const double kd = static_cast<double>(k);
  mean *= 1.0 + feedback / kd;
  second = (1.0 + 2.0 * feedback / kd) * second + 1.0;
}

}  // namespace

double conditional_step_prob(double p, std::int64_t x, std::int64_t n) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("conditional_step_prob: p must lie in [0,1]");
  if (n < 1) throw DomainError("conditional_step_prob: n must be >= 1");
  if (std::llabs(x) > n) throw DomainError("conditional_step_prob: |x| > n");
  if (((x + n) & 1) != 0) throw DomainError("conditional_step_prob: x and n differ in parity");
  return 0.5 + (2.0 * p - 1.0) * static_cast<double>(x) / (2.0 * static_cast<double>(n));
}

double mean_exact(const ErwParams& params, std::int64_t n) {
  require_positive_n(n);
  double mean = 2.0 * params.q() - 1.0;
  double second = 1.0;
  for (std::int64_t k = 1; k < n; ++k) advance(params.feedback(), k, mean, second);
  return mean;
}

double second_moment_exact(const ErwParams& params, std::int64_t n) {
  require_positive_n(n);
  double mean = 0.0;
  double second = 1.0;
  for (std::int64_t k = 1; k < n; ++k) advance(params.feedback(), k, mean, second);
  return second;
}

double variance_exact(const ErwParams& params, std::int64_t n) {
  const auto [mean, second] = MomentCache::global().moments(params, n);
  return second - mean * mean;
}

double variance_asymptote(const ErwParams& params, std::int64_t n) {
  if (n < 2) throw DomainError("variance_asymptote needs n >= 2");
  const double p = params.p();
  const double nd = static_cast<double>(n);
  switch (params.regime()) {
    case Regime::Diffusive:
      return nd / (3.0 - 4.0 * p);
    case Regime::Critical:
      return nd * std::log(nd);
    case Regime::Superdiffusive: {
      const double c = 4.0 * p - 2.0;
      return std::exp(c * std::log(nd) - std::lgamma(c)) / (4.0 * p - 3.0);
    }
  }
  return 0.0;
}

double mean_closed_form(const ErwParams& params, std::int64_t n) {
  require_positive_n(n);
  const double two_p = 2.0 * params.p();
  const double ratio = gamma_ratio(static_cast<double>(n), two_p - 1.0, 0.0);
  return (2.0 * params.q() - 1.0) * ratio / std::tgamma(two_p);
}

double second_moment_closed_form(const ErwParams& params, std::int64_t n) {
  require_positive_n(n);
  const double p = params.p();
  if (p == 0.25 || p == 0.5 || p == kCriticalP) {
    throw DomainError("second-moment closed form is singular at p = 1/4, 1/2, 3/4");
  }
  const double c = 4.0 * p - 2.0;
  const double nd = static_cast<double>(n);
  double ratio;  // Gamma(n+c) / (Gamma(c) Gamma(n+1))
  if (nd + c > 0.0) {
    ratio = gamma_ratio(nd, c, 1.0) / std::tgamma(c);
  } else {
    ratio = std::tgamma(nd + c) / (std::tgamma(c) * std::tgamma(nd + 1.0));
  }
  return nd / (4.0 * p - 3.0) * (ratio - 1.0);
}

MomentCache& MomentCache::global() {
  static MomentCache cache;
  return cache;
}

const MomentCache::Series& MomentCache::series_at_least(const ErwParams& params, std::int64_t n,
                                                        std::shared_lock<std::shared_mutex>& lock) {
  const auto key = std::make_pair(params.p(), params.q());
  {
    auto it = series_.find(key);
    if (it != series_.end() && static_cast<std::int64_t>(it->second->mean.size()) >= n) {
      return *it->second;
    }
  }
  lock.unlock();
  {
    std::unique_lock<std::shared_mutex> writer(mutex_);
    auto& slot = series_[key];
    if (!slot) {
      slot = std::make_unique<Series>();
      slot->mean.push_back(2.0 * params.q() - 1.0);
      slot->second.push_back(1.0);
    }
    auto& s = *slot;
    s.mean.reserve(static_cast<std::size_t>(n));
    s.second.reserve(static_cast<std::size_t>(n));
    for (auto k = static_cast<std::int64_t>(s.mean.size()); k < n; ++k) {
      double mean = s.mean.back();
      double second = s.second.back();
      advance(params.feedback(), k, mean, second);
      s.mean.push_back(mean);
      s.second.push_back(second);
    }
  }
  lock.lock();
  return *series_.at(key);
}

std::pair<double, double> MomentCache::moments(const ErwParams& params, std::int64_t n) {
  require_positive_n(n);
  std::shared_lock<std::shared_mutex> lock(mutex_);
  const auto& s = series_at_least(params, n, lock);
  const auto i = static_cast<std::size_t>(n - 1);
  return {s.mean[i], s.second[i]};
}

MomentTable MomentCache::table(const ErwParams& params, std::span<const std::int64_t> n_grid) {
  MomentTable out;
  if (n_grid.empty()) return out;
  std::int64_t previous = 0;
  for (auto n : n_grid) {
    if (n <= previous) throw DomainError("moment grid must be ascending positive integers");
    previous = n;
  }
  std::shared_lock<std::shared_mutex> lock(mutex_);
  const auto& s = series_at_least(params, n_grid.back(), lock);
  out.n_grid.assign(n_grid.begin(), n_grid.end());
  for (auto n : n_grid) {
    const auto i = static_cast<std::size_t>(n - 1);
    out.mean.push_back(s.mean[i]);
    out.second_moment.push_back(s.second[i]);
    out.variance.push_back(s.second[i] - s.mean[i] * s.mean[i]);
  }
  return out;
}

MomentTable moment_table(const ErwParams& params, std::span<const std::int64_t> n_grid) {
  return MomentCache::global().table(params, n_grid);
}

}  // namespace erw
