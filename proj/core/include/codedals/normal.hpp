#pragma once

namespace codedals::stats {

/// Standard normal density.
double normal_pdf(double x) noexcept;
/// Standard normal CDF.
double normal_cdf(double x) noexcept;
/// Inverse of the standard normal CDF for p in (0, 1). Rational
/// approximation followed by one Halley step; absolute error below 1e-12.
/// Throws ArgumentError outside (0, 1).
double normal_quantile(double p);

}  // namespace codedals::stats
