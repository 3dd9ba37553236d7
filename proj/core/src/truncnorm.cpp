#include "emrl/truncnorm.hpp"
#include "emrl/normal.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace emrl {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double tail_cut = 8.0;

double lambda_term(double bound, double log_z)
{
    if (std::isinf(bound)) return 0.0;
    return std::exp(norm_log_pdf(bound) - log_z);
}

// Upper-tail interval 8 <= A < B. Integrate in s = X - A with weight exp(-A s - s^2/2).
void tail_moments(double A, double B, StdTruncMoments& m)
{
    using quad = boost::math::quadrature::gauss<double, 30>;
    double reach = -A + std::sqrt(A * A + 90.0);
    double hi = std::min(B - A, reach);
    const int panels = 8;
    const double w = hi / panels;
    auto weight = [A](double s) { return std::exp(-A * s - 0.5 * s * s); };

    double i0 = 0.0, i1 = 0.0;
    for (int k = 0; k < panels; ++k) {
        double lo = k * w;
        i0 += quad::integrate(weight, lo, lo + w);
        i1 += quad::integrate([&](double s) { return s * weight(s); }, lo, lo + w);
    }
    double ms = i1 / i0;
    double i2 = 0.0, i3 = 0.0;
    for (int k = 0; k < panels; ++k) {
        double lo = k * w;
        i2 += quad::integrate([&](double s) { double d = s - ms; return d * d * weight(s); }, lo, lo + w);
        i3 += quad::integrate([&](double s) { double d = s - ms; return d * d * d * weight(s); }, lo, lo + w);
    }
    m.mean = A + ms;
    m.var = i2 / i0;
    m.mu3 = i3 / i0;
}

} // namespace

void validate(const TruncNormParams& p)
{
    if (!std::isfinite(p.alpha)) throw std::domain_error("truncnorm: alpha must be finite");
    if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw std::domain_error("truncnorm: beta must be positive");
    if (std::isnan(p.a) || std::isnan(p.b) || !(p.a < p.b)) throw std::domain_error("truncnorm: need a < b");
    if (!((p.a - p.alpha) / p.beta < (p.b - p.alpha) / p.beta))
        throw std::domain_error("truncnorm: standardized bounds collapse");
}

StdTruncMoments standardized_moments(const TruncNormParams& p)
{
    validate(p);
    StdTruncMoments m;
    m.A = (p.a - p.alpha) / p.beta;
    m.B = (p.b - p.alpha) / p.beta;
    m.log_z = log_norm_interval(m.A, m.B);

    bool upper = m.A >= tail_cut;
    bool lower = m.B <= -tail_cut;
    if (upper || lower) {
        m.tail = true;
        if (upper) {
            tail_moments(m.A, m.B, m);
        } else {
            tail_moments(-m.B, -m.A, m);
            m.mean = -m.mean;
            m.mu3 = -m.mu3;
        }
        return m;
    }

    double la = lambda_term(m.A, m.log_z);
    double lb = lambda_term(m.B, m.log_z);
    double a1 = std::isinf(m.A) ? 0.0 : m.A * la;
    double b1 = std::isinf(m.B) ? 0.0 : m.B * lb;
    double a2 = std::isinf(m.A) ? 0.0 : m.A * a1;
    double b2 = std::isinf(m.B) ? 0.0 : m.B * b1;

    double e1 = la - lb;
    double e2 = 1.0 + a1 - b1;
    double e3 = 2.0 * e1 + a2 - b2;
    m.mean = e1;
    m.var = std::max(e2 - e1 * e1, 0.0);
    m.mu3 = e3 - 3.0 * e1 * e2 + 2.0 * e1 * e1 * e1;
    return m;
}

double log_normalizer(const TruncNormParams& p)
{
    validate(p);
    return log_norm_interval((p.a - p.alpha) / p.beta, (p.b - p.alpha) / p.beta);
}

double log_pdf(const TruncNormParams& p, double x)
{
    if (!std::isfinite(x)) throw std::domain_error("truncnorm: non-finite x");
    double lz = log_normalizer(p);
    if (x < p.a || x > p.b) return -inf;
    double z = (x - p.alpha) / p.beta;
    return norm_log_pdf(z) - std::log(p.beta) - lz;
}

double pdf(const TruncNormParams& p, double x)
{
    double lp = log_pdf(p, x);
    return lp == -inf ? 0.0 : std::exp(lp);
}

double cdf(const TruncNormParams& p, double x)
{
    if (std::isnan(x)) throw std::domain_error("truncnorm: NaN x");
    double lz = log_normalizer(p);
    if (x <= p.a) return 0.0;
    if (x >= p.b) return 1.0;
    double A = (p.a - p.alpha) / p.beta;
    double X = (x - p.alpha) / p.beta;
    if (!(X > A)) return 0.0;
    return std::min(1.0, std::exp(log_norm_interval(A, X) - lz));
}

Moments moments(const TruncNormParams& p)
{
    auto s = standardized_moments(p);
    Moments m;
    m.mean = std::clamp(p.alpha + p.beta * s.mean, p.a, p.b);
    m.variance = p.beta * p.beta * s.var;
    return m;
}

double entropy(const TruncNormParams& p)
{
    auto s = standardized_moments(p);
    return std::log(p.beta) + log_sqrt_2pi + s.log_z + 0.5 * (s.var + s.mean * s.mean);
}

EntropyGrad entropy_mean_grad(const TruncNormParams& p)
{
    auto s = standardized_moments(p);
    EntropyGrad g;
    g.value = std::log(p.beta) + log_sqrt_2pi + s.log_z + 0.5 * (s.var + s.mean * s.mean);
    g.d_alpha = (s.mu3 + 2.0 * s.mean * s.var) / (2.0 * p.beta);
    return g;
}

double sample(const TruncNormParams& p, double u)
{
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("truncnorm: u must lie in (0,1)");
    validate(p);
    double A = (p.a - p.alpha) / p.beta;
    double B = (p.b - p.alpha) / p.beta;
    bool flip = A + B > 0.0;
    if (flip) {
        std::swap(A, B);
        A = -A;
        B = -B;
        u = 1.0 - u;
    }
    double lza = norm_log_cdf(A);
    double lz = log_norm_interval(A, B);
    double lu = std::log(u) + lz;
    double lp;
    if (lza == -inf) {
        lp = lu;
    } else {
        double hi = std::max(lza, lu), lo = std::min(lza, lu);
        lp = hi + std::log1p(std::exp(lo - hi));
    }
    lp = std::min(lp, 0.0);
    double X = std::clamp(norm_quantile_log(lp), A, B);
    if (flip) X = -X;
    return std::clamp(p.alpha + p.beta * X, p.a, p.b);
}

double log_pdf_mean_grad(const TruncNormParams& p, double x)
{
    if (!std::isfinite(x) || x < p.a || x > p.b) throw std::domain_error("truncnorm: x outside support");
    auto s = standardized_moments(p);
    return ((x - p.alpha) / p.beta - s.mean) / p.beta;
}

} // namespace emrl
