#include "erw/scaling.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "erw/exact_moments.hpp"
#include "erw/io.hpp"

namespace erw {

std::vector<double> a_seq(double p, std::int64_t n) {
  regime_classify(p);
  if (n < 1) throw DomainError("a_seq needs n >= 1");
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(n));
  a.push_back(1.0);
  const double shift = 2.0 * p - 1.0;
  for (std::int64_t k = 1; k < n; ++k) {
    const double kd = static_cast<double>(k);
    a.push_back(a.back() * (kd + shift) / kd);
  }
  return a;
}

std::vector<double> s_squared_seq(const ErwParams& params, std::int64_t n) {
  const auto a = a_seq(params.p(), n);
  std::vector<double> s2;
  s2.reserve(a.size());
  double acc = params.q() * (1.0 - params.q());
  s2.push_back(acc);
  for (std::size_t j = 1; j < a.size(); ++j) {
    acc += 1.0 / (a[j] * a[j]);
    s2.push_back(acc);
  }
  return s2;
}

ScalingTables ScalingTables::build(const ErwParams& params, std::int64_t n) {
  return ScalingTables{params, a_seq(params.p(), n), s_squared_seq(params, n)};
}

std::vector<double> ScalingTables::a_times_s() const {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * std::sqrt(s2[i]);
  return out;
}

void write_scaling_csv(std::ostream& os, const ScalingTables& tables) {
  os << "n,a_n,s2_n\n";
  for (std::int64_t k = 1; k <= tables.size(); ++k) {
    os << k << ',' << format_double(tables.a_at(k)) << ',' << format_double(tables.s2_at(k)) << '\n';
  }
}

IncrementPair martingale_increments(double p, std::int64_t x, std::int64_t k, double a_next) {
  const double mu = (2.0 * p - 1.0) * static_cast<double>(x) / static_cast<double>(k);
  return {(-1.0 - mu) / a_next, (1.0 - mu) / a_next};
}

MartingalePath martingale_transform(const WalkPath& path, const ScalingTables& tables) {
  if (tables.size() < path.length()) throw DomainError("scaling tables shorter than the path");
  if (!(tables.params == path.params)) throw DomainError("scaling tables built for other parameters");
  MartingalePath out{path.params, path.seed, {}};
  out.m.reserve(static_cast<std::size_t>(path.length()));
  double mean = 2.0 * path.params.q() - 1.0;
  const double feedback = path.params.feedback();
  for (std::int64_t k = 1; k <= path.length(); ++k) {
    if (k > 1) mean *= 1.0 + feedback / static_cast<double>(k - 1);
    out.m.push_back((static_cast<double>(path.x(k)) - mean) / tables.a_at(k));
#ifndef NDEBUG
    if (k > 1) {
      const auto inc = martingale_increments(path.params.p(), path.x(k - 1), k - 1, tables.a_at(k));
      const double d = out.m[static_cast<std::size_t>(k - 1)] - out.m[static_cast<std::size_t>(k - 2)];
      const double expected = path.step(k) > 0 ? inc.plus : inc.minus;
      assert(std::abs(d - expected) <= 1e-9 * (1.0 + std::abs(out.m.back())));
    }
#endif
  }
  return out;
}

MartingalePath martingale_transform(const WalkPath& path) {
  return martingale_transform(path, ScalingTables::build(path.params, path.length()));
}

std::optional<double> scaled_value(const ErwParams& params, std::int64_t x, std::int64_t n) {
  require_not_superdiffusive(params, "scaled_process");
  if (n < kFirstScaledStep) return std::nullopt;
  const double nd = static_cast<double>(n);
  const double xd = static_cast<double>(x);
  if (params.regime() == Regime::Critical) return xd / std::sqrt(nd);
  const double p = params.p();
  return std::sqrt(3.0 - 4.0 * p) * xd / std::pow(nd, 2.0 * p - 1.0);
}

std::vector<std::optional<double>> scaled_process(const WalkPath& path) {
  require_not_superdiffusive(path.params, "scaled_process");
  std::vector<std::optional<double>> out;
  out.reserve(static_cast<std::size_t>(path.length()));
  for (std::int64_t k = 1; k <= path.length(); ++k) out.push_back(scaled_value(path.params, path.x(k), k));
  return out;
}

}  // namespace erw
