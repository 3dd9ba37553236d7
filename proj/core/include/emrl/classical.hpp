#pragma once

#include "emrl/market.hpp"

#include <array>
#include <string>
#include <vector>

namespace emrl {

struct PsiParams {
    std::array<double, 6> psi{};
};

struct LMSolution {
    std::vector<double> t, L, M;
};

// Right-hand sides dL/dt, dM/dt of the m = 0 Riccati system.
std::array<double, 2> lm_rhs(const MarketParams& p, double L);

// Classical RK4, swept backward from L(T) = M(T) = 0 over n_t uniform nodes.
LMSolution solve_lm_odes(const MarketParams& p, int n_t);

// Max |L' - rhs| and |M' - rhs| over the nodes, L' and M' from 4th-order differences.
std::array<double, 2> lm_residual(const MarketParams& p, const LMSolution& sol);

struct LMValue {
    double L, M;
    std::array<double, 6> dL, dM;  // partials w.r.t. psi
};

void validate(const PsiParams& psi, double T);
LMValue parametric_lm_grad(const PsiParams& psi, double t, double T);
std::array<double, 2> parametric_lm(const PsiParams& psi, double t, double T);

struct FitResult {
    PsiParams psi;
    double sup_err_L = 0.0;
    double sup_err_M = 0.0;
    bool converged = false;
};

// positive_rate restricts the search to psi0 > 0.
FitResult fit_parametric(const std::vector<double>& t, const std::vector<double>& L, const std::vector<double>& M,
                         double T, bool positive_rate = false);

double merton_fraction(const MarketParams& p, double t, double y, double u_y);

struct Band {
    double lo, hi;
    bool empty;
};
Band admissibility_band(const MarketParams& p, double R);

// (t, L, M, L^psi, M^psi)
void write_fit_csv(const LMSolution& sol, const PsiParams& psi, double T, const std::string& path,
                    const std::string& header_comment);

} // namespace emrl
