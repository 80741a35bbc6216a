#include "erw/special.hpp"

#include <array>
#include <cmath>

#include "erw/params.hpp"

namespace erw {
namespace {

constexpr double kStirlingCutoff = 10.0;

// B_{2k} / (2k (2k-1)) for k = 1..7.
constexpr std::array<double, 7> kStirlingCoeffs = {
    1.0 / 12.0,     -1.0 / 360.0,  1.0 / 1260.0,         -1.0 / 1680.0,
    1.0 / 1188.0,   -691.0 / 360360.0, 1.0 / 156.0,
};

// Sum_k c_k / z^{2k-1}.
double stirling_tail(double z) {
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  double acc = 0.0;
  for (auto it = kStirlingCoeffs.rbegin(); it != kStirlingCoeffs.rend(); ++it) {
    acc = acc * inv2 + *it;
  }
  return acc * inv;
}

}  // namespace

double log_gamma_ratio(double x, double a, double b) {
  const double za = x + a;
  const double zb = x + b;
  if (!(za > 0.0 && zb > 0.0)) {
    throw DomainError("log_gamma_ratio needs positive arguments");
  }
  if (a == b) return 0.0;
  if (za < kStirlingCutoff || zb < kStirlingCutoff || x < kStirlingCutoff) {
    return std::lgamma(za) - std::lgamma(zb);
  }
  // (za - 1/2) log za - (zb - 1/2) log zb, with log z = log x + log1p(c/x)
  const double log_x = std::log(x);
  const double main = (a - b) * log_x + (za - 0.5) * std::log1p(a / x) -
                      (zb - 0.5) * std::log1p(b / x);
  return main - (a - b) + (stirling_tail(za) - stirling_tail(zb));
}

double gamma_ratio(double x, double a, double b) { return std::exp(log_gamma_ratio(x, a, b)); }

}  // namespace erw
