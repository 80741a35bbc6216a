#pragma once

// Deterministic normalizations: a_n, s_n^2, the martingale M_n and the
// scaled walk compared against Brownian motion.

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "erw/engine.hpp"
#include "erw/params.hpp"

namespace erw {

/// a_1 = 1, a_{k+1} = a_k (k + 2p - 1) / k, i.e. a_n = Gamma(n+2p-1) / (Gamma(n) Gamma(2p)).
/// Element k-1 holds a_k.
std::vector<double> a_seq(double p, std::int64_t n);

/// s_1^2 = q(1-q), s_n^2 = q(1-q) + sum_{j=2}^n 1/a_j^2. Element k-1 holds s_k^2.
std::vector<double> s_squared_seq(const ErwParams& params, std::int64_t n);

struct ScalingTables {
  ErwParams params;
  std::vector<double> a;   // a[k-1] = a_k
  std::vector<double> s2;  // s2[k-1] = s_k^2

  static ScalingTables build(const ErwParams& params, std::int64_t n);

  std::int64_t size() const noexcept { return static_cast<std::int64_t>(a.size()); }
  double a_at(std::int64_t k) const { return a.at(static_cast<std::size_t>(k - 1)); }
  double s2_at(std::int64_t k) const { return s2.at(static_cast<std::size_t>(k - 1)); }
  /// a_k s_k for every k.
  std::vector<double> a_times_s() const;
};

/// CSV with columns n,a_n,s2_n.
void write_scaling_csv(std::ostream& os, const ScalingTables& tables);

struct MartingalePath {
  ErwParams params;
  std::uint64_t seed = 0;
  std::vector<double> m;  // m[k-1] = M_k

  double at(std::int64_t k) const { return m.at(static_cast<std::size_t>(k - 1)); }
};

/// M_k = (X_k - E[X_k]) / a_k with the exact mean. `tables` must cover the path.
MartingalePath martingale_transform(const WalkPath& path, const ScalingTables& tables);
MartingalePath martingale_transform(const WalkPath& path);

/// The two values M_{k+1} - M_k can take given X_k = x: (eta - mu) / a_{k+1}
/// with mu = (2p-1) x / k and eta = -1, +1.
struct IncrementPair {
  double minus;
  double plus;
};
IncrementPair martingale_increments(double p, std::int64_t x, std::int64_t k, double a_next);

/// First scaled index: log n and log log n are positive only from n = 3 on.
inline constexpr std::int64_t kFirstScaledStep = 3;

/// sqrt(3-4p) X_n / n^{2p-1} for p < 3/4 and X_n / sqrt(n) for p = 3/4.
/// std::nullopt for n < 3. Throws RegimeError for p > 3/4.
std::optional<double> scaled_value(const ErwParams& params, std::int64_t x, std::int64_t n);

/// scaled_value along the path; entry k-1 belongs to step k.
std::vector<std::optional<double>> scaled_process(const WalkPath& path);

}  // namespace erw
