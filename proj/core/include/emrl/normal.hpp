#pragma once

namespace emrl {

inline constexpr double inv_sqrt_2pi = 0.39894228040143267794;
inline constexpr double log_sqrt_2pi = 0.91893853320467274178;

double norm_pdf(double x);
double norm_log_pdf(double x);
double norm_cdf(double x);

// log Phi(x), accurate far into the lower tail.
double norm_log_cdf(double x);

// Phi^{-1}(p), p in (0,1).
double norm_quantile(double p);

// Inverse of norm_log_cdf, lp <= 0.
double norm_quantile_log(double lp);

// log(Phi(hi) - Phi(lo)) for lo < hi; either bound may be infinite.
double log_norm_interval(double lo, double hi);

} // namespace emrl
