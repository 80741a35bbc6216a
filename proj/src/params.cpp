#include "erw/params.hpp"

#include <cmath>
#include <sstream>

namespace erw {

Regime regime_classify(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("memory parameter p must lie in (0,1), got " + std::to_string(p));
  }
  if (p < kCriticalP) return Regime::Diffusive;
  if (p == kCriticalP) return Regime::Critical;
  return Regime::Superdiffusive;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Diffusive:
      return "diffusive";
    case Regime::Critical:
      return "critical";
    case Regime::Superdiffusive:
      return "superdiffusive";
  }
  return "unknown";
}

ErwParams::ErwParams(double p, double q) : p_(p), q_(q), regime_(regime_classify(p)) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError("first-step bias q must lie in [0,1], got " + std::to_string(q));
  }
}

std::string describe(const ErwParams& params) {
  std::ostringstream os;
  os << "p=" << params.p() << " q=" << params.q() << " (" << to_string(params.regime()) << ")";
  return os.str();
}

void require_not_superdiffusive(const ErwParams& params, std::string_view what) {
  if (params.regime() == Regime::Superdiffusive) {
    throw RegimeError(std::string(what) + " requires p <= 3/4, got " + describe(params));
  }
}

}  // namespace erw
