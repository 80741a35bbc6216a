#pragma once

// Every tolerance and threshold used by verdicts lives here. Values that are
// constants of the model (L = sqrt(2/(3-4p)), the exponent max(1, 4p-2)) are
// computed in code; everything below is a finite-sample engineering choice.
// Bump kVersion whenever a value changes.

#include <cstdint>
#include <string_view>

namespace erw::calibration {

inline constexpr std::string_view kVersion = "2026.10-1";

// Default master seed for reproducible runs.
inline constexpr std::uint64_t kDefaultSeed = 20180417;

// Simulator equivalence and distinct-law power checks.
inline constexpr double kKsAlpha = 0.01;

// CLT: KS distance to N(0,1).
inline constexpr double kCltKsDiffusive = 0.02;
inline constexpr double kCltKsCritical = 0.05;

// Agreement of Monte Carlo moments with the exact recursion, in standard errors.
inline constexpr double kMomentStandardErrors = 3.0;

// LIL envelope verdict.
inline constexpr std::int64_t kLilWindowStart = 1000;
inline constexpr double kLilExceedanceLevel = 1.2;
inline constexpr double kLilMaxExceedanceFraction = 0.05;
inline constexpr double kLilAttainmentLevel = 0.5;

// Variance-exponent sweep.
inline constexpr double kSweepExponentTolerance = 0.1;

// Embedding.
inline constexpr double kGridKappa = 0.01;
inline constexpr double kEmbeddingRatioLow = 0.9;
inline constexpr double kEmbeddingRatioHigh = 1.1;
inline constexpr double kEmbeddingShrinkFraction = 0.8;

}  // namespace erw::calibration
