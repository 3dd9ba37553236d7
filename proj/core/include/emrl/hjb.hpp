#pragma once

#include "emrl/market.hpp"
#include "emrl/truncnorm.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace emrl {

// n_y and n_t count intervals, so the surface has (n_t+1) x (n_y+1) nodes.
struct Grid1D {
    double y_lo = 0.0;
    double y_hi = 1.0;
    int n_y = 100;
    double T = 1.0;
    int n_t = 252;

    double h() const { return (y_hi - y_lo) / n_y; }
    double dt() const { return T / n_t; }
    double y(int j) const { return y_lo + j * h(); }
    double t(int i) const { return i * dt(); }
};

void validate(const Grid1D& g);

struct ValueSurface {
    Grid1D grid;
    std::vector<double> u;  // row-major, time outer

    ValueSurface() = default;
    explicit ValueSurface(const Grid1D& g) : grid(g), u(size_t(g.n_t + 1) * (g.n_y + 1), 0.0) {}
    double& at(int i, int j) { return u[size_t(i) * (grid.n_y + 1) + j]; }
    double at(int i, int j) const { return u[size_t(i) * (grid.n_y + 1) + j]; }
    // central difference in y with zero-slope ghosts
    double u_y(int i, int j) const;
};

double sup_distance(const ValueSurface& a, const ValueSurface& b);

// First-difference treatment of the linear drift term.
enum class Stencil { upwind, central };

struct ZResult {
    double Z;
    double log_z;
    double D;  // a-side argument
    double F;  // b-side argument
    // Sign of Phi(D) - Phi(F) relative to Z; Z itself is always Phi(F) - Phi(D) > 0.
    int printed_sign = -1;
};

double merton_ratio(const MarketParams& p, double y, double u_y);

ZResult z_ab(const MarketParams& p, double y, double u_y);

// Zero-temperature limit of m ln Z; boundary points count as interior.
double limit_m_lnz(const MarketParams& p, double y, double u_y);

// Everything in the reduced equation except u_t and the second-order term; m = 0 uses the limit.
double hamiltonian(const MarketParams& p, double y, double u_y);

// d hamiltonian / d u_y minus the varpi part, at m = 0.
double hamiltonian_slope0(const MarketParams& p, double y, double u_y);

// Pointwise residual on interior nodes before the terminal row; zero elsewhere.
ValueSurface hjb_residual(const MarketParams& p, const ValueSurface& surf, Stencil st = Stencil::upwind);
double max_abs_interior(const ValueSurface& r);

ValueSurface solve_hjb(const MarketParams& p, const Grid1D& grid, Stencil st = Stencil::upwind);

TruncNormParams optimal_policy_from_u(const MarketParams& p, double t, double y, double u_y);

struct PolicySurface {
    Grid1D grid;
    std::vector<double> alpha, beta;

    PolicySurface() = default;
    explicit PolicySurface(const Grid1D& g)
        : grid(g), alpha(size_t(g.n_t + 1) * (g.n_y + 1), 0.0), beta(alpha.size(), 1.0)
    {
    }
    size_t idx(int i, int j) const { return size_t(i) * (grid.n_y + 1) + j; }
};

PolicySurface initial_policy(const MarketParams& p, const Grid1D& grid, double kappa, double chi);
PolicySurface improve_policy(const MarketParams& p, const ValueSurface& surf);

ValueSurface policy_evaluation_pde(const MarketParams& p, const Grid1D& grid, const PolicySurface& policy);

struct PolicyIterationResult {
    std::vector<ValueSurface> surfaces;
    std::vector<PolicySurface> policies;  // policies[n] is evaluated in surfaces[n]
    std::vector<double> sup_change;
    bool converged = false;
};

PolicyIterationResult policy_iteration(const MarketParams& p, const Grid1D& grid, double kappa, double chi,
                                       double tol, int max_iter,
                                       const std::optional<PolicySurface>& seed = std::nullopt);

// First-order correction in m around the m = 0 solution.
ValueSurface solve_first_order(const MarketParams& p, const ValueSurface& u0);

// Residual of the homogeneous first-order operator applied to phi.
ValueSurface first_order_homogeneous_residual(const MarketParams& p, const ValueSurface& u0,
                                              const ValueSurface& phi);

struct ExpansionReport {
    std::vector<double> m;
    std::vector<double> remainder;       // sup |u_m - u0 - c m ln m (T-t) - m u1|
    std::vector<double> mean_remainder;  // sup |alpha_m - alpha_0 - m rho delta / (eta sigma) u1_y|
    std::vector<double> ratios;          // remainder[k+1] / remainder[k]
    std::vector<double> leading;         // (u_m - u0 - m u1)(0, y0) / (m ln m)
    std::vector<double> leading_raw;     // (u_m - u0)(0, y0) / (m ln m)
    double leading_target = 0.0;         // (1 - eta) T / 2
    double phi1_residual = 0.0;
    bool ratio_pass = false;
};

ExpansionReport expansion_check(const MarketParams& p, const Grid1D& grid, const std::vector<double>& m_values);

void write_surface_csv(std::ostream& os, const ValueSurface& s);
void write_policy_csv(std::ostream& os, const MarketParams& p, const ValueSurface& s);

} // namespace emrl
