#include "emrl/market.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace emrl {

void validate(const MarketParams& p)
{
    auto need = [](bool ok, const char* what) {
        if (!ok) throw std::domain_error(std::string("market: ") + what);
    };
    need(p.k1 >= 0.0, "k1 must be nonnegative");
    need(p.k2 >= 0.0, "k2 must be nonnegative");
    need(p.delta_star > 0.0, "delta_star must be positive");
    need(p.sigma_star > 0.0, "sigma_star must be positive");
    need(p.c > 0.0, "c must be positive");
    need(p.rho > 0.0 && p.rho < 1.0, "rho must lie in (0,1)");
    need(p.eta > 0.0 && p.eta < 1.0, "eta must lie in (0,1)");
    need(p.m >= 0.0, "m must be nonnegative");
    need(p.s0 > 0.0, "s0 must be positive");
    need(p.T > 0.0, "T must be positive");
    need(p.n_steps >= 1, "n_steps must be positive");
    need(p.a < p.b, "need a < b");
    need(std::isfinite(p.r) && std::isfinite(p.y0), "r and y0 must be finite");
}

bool feller_holds(const MarketParams& p) { return 2.0 * p.c * (p.y0 + p.delta_star) >= p.k1 * p.k1; }

Coeffs coeffs(const MarketParams& p, double, double y)
{
    double z = y + p.delta_star;
    if (!(z > 0.0)) throw std::domain_error("coeffs: y + delta_star must be positive");
    double sigma = std::sqrt(y * y + p.sigma_star * p.sigma_star);
    double root = std::sqrt(z);
    return {sigma, p.k1 * root, p.k2 * root * sigma, p.c * (p.y0 - y)};
}

double crra_utility(const MarketParams& p, double x)
{
    return (std::pow(x, 1.0 - p.eta) - 1.0) / (1.0 - p.eta);
}

} // namespace emrl
