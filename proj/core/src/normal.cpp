#include "emrl/normal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace emrl {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Asymptotic series for log Phi(x), x << 0.
double log_cdf_asymptotic(double x)
{
    const double z = 1.0 / (x * x);
    double series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z * (1.0 - 9.0 * z))));
    return -0.5 * x * x - std::log(-x) - log_sqrt_2pi + std::log(series);
}

// log(exp(a) - exp(b)), a >= b
double log_diff_exp(double a, double b)
{
    if (b == -inf) return a;
    return a + std::log(-std::expm1(b - a));
}

} // namespace

double norm_pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

double norm_log_pdf(double x) { return -0.5 * x * x - log_sqrt_2pi; }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_log_cdf(double x)
{
    if (x == -inf) return -inf;
    if (x > 5.0) return std::log1p(-0.5 * std::erfc(x * M_SQRT1_2));
    if (x > -30.0) return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
    return log_cdf_asymptotic(x);
}

double norm_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -inf;
        if (p == 1.0) return inf;
        throw std::domain_error("norm_quantile: p outside [0,1]");
    }
    // Acklam's rational approximation, then one Halley step
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // refine against the upper tail when x > 0 to keep relative accuracy there
    for (int it = 0; it < 2; ++it) {
        double e = x > 0.0 ? (1.0 - p) - 0.5 * std::erfc(x * M_SQRT1_2) : norm_cdf(x) - p;
        double u = e / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double norm_quantile_log(double lp)
{
    if (lp > 0.0) throw std::domain_error("norm_quantile_log: log-probability > 0");
    if (lp == 0.0) return inf;
    if (lp == -inf) return -inf;
    if (lp > -700.0) return norm_quantile(std::exp(lp));
    double x = -std::sqrt(-2.0 * lp - std::log(-4.0 * M_PI * lp));
    for (int it = 0; it < 50; ++it) {
        double f = norm_log_cdf(x) - lp;
        double slope = std::exp(norm_log_pdf(x) - norm_log_cdf(x));
        double step = f / slope;
        x -= step;
        if (std::fabs(step) <= 1e-15 * std::fabs(x)) break;
    }
    return x;
}

double log_norm_interval(double lo, double hi)
{
    if (!(lo < hi)) throw std::domain_error("log_norm_interval: need lo < hi");
    if (lo >= 0.0) {
        // upper tail: Q(lo) - Q(hi) with Q(x) = Phi(-x)
        return log_diff_exp(norm_log_cdf(-lo), norm_log_cdf(-hi));
    }
    if (hi <= 0.0) return log_diff_exp(norm_log_cdf(hi), norm_log_cdf(lo));
    // straddles zero: 1 - Phi(lo) - Q(hi)
    double tails = 0.5 * std::erfc(-lo * M_SQRT1_2) + 0.5 * std::erfc(hi * M_SQRT1_2);
    return std::log1p(-tails);
}

} // namespace emrl
