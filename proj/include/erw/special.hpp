#pragma once

namespace erw {

/// log Gamma(x + a) - log Gamma(x + b) for x + a > 0 and x + b > 0.
///
/// For large x the two log-Gamma values are of order x log x and their plain
/// difference loses roughly log10(x log x) digits. Above a small cutoff this
/// evaluates the difference of Stirling series term by term so the result
/// keeps close to full relative precision for x up to ~1e12.
double log_gamma_ratio(double x, double a, double b);

/// Gamma(x + a) / Gamma(x + b), via log_gamma_ratio.
double gamma_ratio(double x, double a, double b);

}  // namespace erw
