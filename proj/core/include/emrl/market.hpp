#pragma once

namespace emrl {

// Defaults are the reference market.
struct MarketParams {
    double k1 = 0.015;
    double k2 = 0.23;
    double delta_star = 0.3;
    double sigma_star = 0.3;
    double r = 0.02;
    double c = 2.0;
    double y0 = 0.5;
    double rho = 0.5;
    double s0 = 1.0;
    double m = 1.0;
    double eta = 0.5;
    double T = 1.0;
    int n_steps = 252;
    double a = 0.0;
    double b = 1.0;

    double dt() const { return T / n_steps; }
};

struct Coeffs {
    double sigma;
    double delta;
    double mu_excess;
    double drift_y;
};

void validate(const MarketParams& p);

// 2c(y0 + delta*) >= k1^2
bool feller_holds(const MarketParams& p);

Coeffs coeffs(const MarketParams& p, double t, double y);

// CRRA utility with the market's eta.
double crra_utility(const MarketParams& p, double x);

} // namespace emrl
