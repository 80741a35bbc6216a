#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace erw {

/// Raised when an input violates an operation's preconditions.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is asked to work outside the regimes it covers
/// (for instance a p > 3/4 request to the CLT or the embedding).
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a configured memory or work budget would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Regime { Diffusive, Critical, Superdiffusive };

inline constexpr double kCriticalP = 0.75;

/// Thresholds at exactly p = 3/4. Throws DomainError unless 0 < p < 1.
Regime regime_classify(double p);

std::string_view to_string(Regime regime);

/// Memory parameter p in (0,1) and first-step bias q in [0,1].
class ErwParams {
 public:
  ErwParams(double p, double q);

  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  Regime regime() const noexcept { return regime_; }

  /// 2p - 1, the drift coefficient of the one-step conditional law.
  double feedback() const noexcept { return 2.0 * p_ - 1.0; }

  friend bool operator==(const ErwParams&, const ErwParams&) = default;

 private:
  double p_;
  double q_;
  Regime regime_;
};

std::string describe(const ErwParams& params);

/// Throws RegimeError if the parameters are superdiffusive.
void require_not_superdiffusive(const ErwParams& params, std::string_view what);

}  // namespace erw
