#include "emrl/conditions.hpp"

#include "emrl/normal.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace emrl {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double golden_max(auto&& f, double lo, double hi, double tol)
{
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    return 0.5 * (lo + hi);
}

double scan_max(auto&& f, double lo, double hi)
{
    const int n = 1000;
    const double h = (hi - lo) / n;
    int best = 0;
    double fbest = f(lo);
    for (int i = 1; i <= n; ++i) {
        const double v = f(lo + i * h);
        if (v > fbest) {
            fbest = v;
            best = i;
        }
    }
    const double x = golden_max(f, std::max(lo, lo + (best - 1) * h), std::min(hi, lo + (best + 1) * h), 1e-9);
    return std::max({fbest, f(x), f(lo), f(hi)});
}

} // namespace

double f_ab_log_mass(double q, double m, double mu_excess, double a, double b)
{
    if (!(q > 0.0) || !(m > 0.0)) throw std::domain_error("f_ab: q and m must be positive");
    const double s = std::sqrt(q / m);
    const double shift = mu_excess / std::sqrt(m * q);
    const double lo = std::isinf(a) ? a : a * s - shift;
    const double hi = std::isinf(b) ? b : b * s - shift;
    if (!(lo < hi)) return -inf;
    const double lz = log_norm_interval(lo, hi);
    if (std::isinf(lz)) return -inf;
    return 2.0 * m * lz;
}

double f_ab(double q, double m, double mu_excess, double a, double b)
{
    const double lm = f_ab_log_mass(q, m, mu_excess, a, b);
    if (std::isinf(lm)) return -inf;
    return mu_excess * mu_excess / q + m * std::log(2.0 * std::numbers::pi * m / q) + lm;
}

double f_ab_log_mass_limit(double q, double mu_excess, double a, double b)
{
    const double z = mu_excess / q;
    if (z > b) return -q * (z - b) * (z - b);
    if (z < a) return -q * (a - z) * (a - z);
    return 0.0;
}

double mu_excess_bar(const MarketParams& p, double y_lo, double y_hi)
{
    return scan_max([&](double y) { return coeffs(p, 0.0, y).mu_excess; }, y_lo, y_hi);
}

double sup_sigma2(const MarketParams& p, double y_lo, double y_hi)
{
    return scan_max(
        [&](double y) {
            const double s = coeffs(p, 0.0, y).sigma;
            return s * s;
        },
        y_lo, y_hi);
}

CondI check_condition_i(const MarketParams& p, double mu_bar)
{
    if (!(p.m > 0.0)) throw std::domain_error("condition (i) needs m > 0");
    const double q = p.eta * p.sigma_star * p.sigma_star;
    const double v = f_ab(q, p.m, mu_bar, p.a, p.b);
    return {v, v > 0.0};
}

std::optional<double> find_q0(const MarketParams& p, double mu_bar, double q_hi)
{
    const double q_lo = p.eta * p.sigma_star * p.sigma_star;
    auto f = [&](double q) { return f_ab(q, p.m, mu_bar, p.a, p.b); };
    if (!(f(q_lo) > 0.0)) throw std::domain_error("find_q0: condition (i) fails");
    double lo = q_lo, hi = q_lo;
    double fhi = 0.0;
    bool found = false;
    while (hi < q_hi) {
        lo = hi;
        hi = std::min(hi * 1.05, q_hi);
        fhi = f(hi);
        if (fhi <= 0.0) {
            found = true;
            break;
        }
    }
    if (!found) return std::nullopt;
    if (fhi == 0.0) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= 1e-12 || hi - lo <= 1e-15 * hi) return mid;
        if (fm > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool check_condition_ii(const MarketParams& p, std::optional<double> q0, double sup_s2)
{
    if (!q0) return std::isfinite(sup_s2);
    return sup_s2 <= *q0 / p.eta;
}

double psi_bound(const MarketParams& p, double mu_bar)
{
    const double q = p.eta * p.sigma_star * p.sigma_star;
    const double ratio = mu_bar / p.sigma_star;
    return (1.0 - p.eta) / (2.0 * p.eta) * ratio * ratio + p.m * std::log(2.0 * std::numbers::pi * p.m / q) +
           f_ab_log_mass(q, p.m, mu_bar, p.a, p.b) + p.r * (1.0 - p.eta);
}

ConditionReport check_conditions(const MarketParams& p, double y_lo, double y_hi)
{
    validate(p);
    ConditionReport r;
    r.mu_excess_bar = mu_excess_bar(p, y_lo, y_hi);
    const auto c1 = check_condition_i(p, r.mu_excess_bar);
    r.cond_i_value = c1.value;
    r.cond_i_pass = c1.pass;
    r.sup_sigma2 = sup_sigma2(p, y_lo, y_hi);
    if (r.cond_i_pass) {
        r.q0 = find_q0(p, r.mu_excess_bar);
        if (r.q0) r.q0_over_eta = *r.q0 / p.eta;
        r.cond_ii_pass = check_condition_ii(p, r.q0, r.sup_sigma2);
    }
    r.psi_bound = psi_bound(p, r.mu_excess_bar);
    return r;
}

void print_report(std::ostream& os, const ConditionReport& r)
{
    auto opt = [](std::optional<double> v) {
        std::ostringstream s;
        if (v)
            s << std::setprecision(6) << *v;
        else
            s << "inf";
        return s.str();
    };
    os << std::setprecision(6);
    os << std::left << std::setw(16) << "mu_excess_bar" << r.mu_excess_bar << '\n';
    os << std::setw(16) << "cond_i_value" << r.cond_i_value << "   (reference 7.40)\n";
    os << std::setw(16) << "cond_i_pass" << (r.cond_i_pass ? "true" : "false") << '\n';
    os << std::setw(16) << "q0" << opt(r.q0) << "   (reference 1.62)\n";
    os << std::setw(16) << "q0_over_eta" << opt(r.q0_over_eta) << "   (reference 3.24)\n";
    os << std::setw(16) << "sup_sigma2" << r.sup_sigma2 << '\n';
    os << std::setw(16) << "cond_ii_pass" << (r.cond_ii_pass ? "true" : "false") << '\n';
    os << std::setw(16) << "psi_bound" << r.psi_bound << '\n';
}

void write_report_csv(std::ostream& os, const ConditionReport& r)
{
    auto opt = [](std::optional<double> v) { return v ? *v : inf; };
    os << "mu_excess_bar,cond_i_value,cond_i_pass,q0,q0_over_eta,sup_sigma2,cond_ii_pass,psi_bound\n";
    os << std::setprecision(17) << r.mu_excess_bar << ',' << r.cond_i_value << ',' << r.cond_i_pass << ','
       << opt(r.q0) << ',' << opt(r.q0_over_eta) << ',' << r.sup_sigma2 << ',' << r.cond_ii_pass << ','
       << r.psi_bound << '\n';
}

} // namespace emrl
