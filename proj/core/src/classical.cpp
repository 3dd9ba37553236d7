#include "emrl/classical.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace emrl {

std::array<double, 2> lm_rhs(const MarketParams& p, double L)
{
    const double q = (1.0 - p.eta) / (2.0 * p.eta);
    const double k1 = p.k1, k2 = p.k2, ds = p.delta_star, rho = p.rho;
    double bracket = k2 * k2 + 2.0 * rho * k1 * k2 * L + rho * rho * k1 * k1 * L * L;
    double dL = -(0.5 * k1 * k1 * L * L - p.c * L + q * bracket);
    double dM = -(p.r * (1.0 - p.eta) + 0.5 * k1 * k1 * ds * L * L + p.c * p.y0 * L + q * ds * bracket);
    return {dL, dM};
}

LMSolution solve_lm_odes(const MarketParams& p, int n_t)
{
    if (n_t < 2) throw std::domain_error("solve_lm_odes: need at least two nodes");
    validate(p);
    LMSolution s;
    s.t.resize(n_t);
    s.L.assign(n_t, 0.0);
    s.M.assign(n_t, 0.0);
    const double h = p.T / (n_t - 1);
    for (int i = 0; i < n_t; ++i) s.t[i] = i * h;
    s.t.back() = p.T;
    double L = 0.0, M = 0.0;
    for (int i = n_t - 1; i > 0; --i) {
        // step of -h in t
        auto k1 = lm_rhs(p, L);
        auto k2 = lm_rhs(p, L - 0.5 * h * k1[0]);
        auto k3 = lm_rhs(p, L - 0.5 * h * k2[0]);
        auto k4 = lm_rhs(p, L - h * k3[0]);
        L -= h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        M -= h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        if (!std::isfinite(L) || !std::isfinite(M)) throw std::runtime_error("solve_lm_odes: integration blew up");
        s.L[i - 1] = L;
        s.M[i - 1] = M;
    }
    return s;
}

namespace {

// Fourth-order first derivative at node i of a uniform grid.
double d1_fourth(const std::vector<double>& f, int i, double h)
{
    const int n = static_cast<int>(f.size());
    if (n < 5) throw std::domain_error("lm_residual: need at least five nodes");
    if (i >= 2 && i <= n - 3) return (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
    if (i == 0) return (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    if (i == 1) return (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    if (i == n - 1)
        return (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / (12.0 * h);
    return (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / (12.0 * h);
}

} // namespace

std::array<double, 2> lm_residual(const MarketParams& p, const LMSolution& sol)
{
    const int n = static_cast<int>(sol.t.size());
    const double h = sol.t[1] - sol.t[0];
    std::array<double, 2> worst{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        auto rhs = lm_rhs(p, sol.L[i]);
        worst[0] = std::max(worst[0], std::fabs(d1_fourth(sol.L, i, h) - rhs[0]));
        worst[1] = std::max(worst[1], std::fabs(d1_fourth(sol.M, i, h) - rhs[1]));
    }
    return worst;
}

void validate(const PsiParams& ps, double T)
{
    const auto& q = ps.psi;
    for (double v : q)
        if (!std::isfinite(v)) throw std::domain_error("psi: non-finite component");
    // D(t) = -q2 + q3 e^{q0 (T-t)} is monotone in t, so the endpoints decide its sign
    double d0 = -q[2] + q[3] * std::exp(q[0] * T);
    double dT = -q[2] + q[3];
    if (d0 == 0.0 || dT == 0.0 || (d0 > 0.0) != (dT > 0.0))
        throw std::domain_error("psi: denominator vanishes on [0,T]");
}

LMValue parametric_lm_grad(const PsiParams& ps, double t, double T)
{
    const auto& q = ps.psi;
    double tau = T - t;
    double E = std::exp(q[0] * tau);
    double D = -q[2] + q[3] * E;
    double B = -q[2] + q[3];
    if (D == 0.0 || B == 0.0 || D / B <= 0.0) throw std::domain_error("psi: invalid denominators");
    double Em1 = std::expm1(q[0] * tau);
    LMValue v;
    v.L = q[1] * Em1 / D;
    double log_ratio = std::log1p(q[3] * Em1 / B);
    v.M = q[4] * tau + q[5] * log_ratio;
    v.dL = {tau * E * q[1] * (q[3] - q[2]) / (D * D), Em1 / D, q[1] * Em1 / (D * D), -q[1] * Em1 * E / (D * D), 0.0,
            0.0};
    v.dM = {q[5] * q[3] * tau * E / D, 0.0, q[5] * q[3] * Em1 / (D * B), -q[5] * q[2] * Em1 / (D * B), tau,
            log_ratio};
    return v;
}

std::array<double, 2> parametric_lm(const PsiParams& ps, double t, double T)
{
    auto v = parametric_lm_grad(ps, t, T);
    return {v.L, v.M};
}

namespace {

struct FitFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<double>& t;
    const std::vector<double>& L;
    const std::vector<double>& M;
    double T;

    // psi3 is pinned to 1: (psi1, psi2, psi3) only matter up to a common scale
    int inputs() const { return 5; }
    int values() const { return static_cast<int>(2 * t.size()); }

    static PsiParams unpack(const Eigen::VectorXd& x)
    {
        PsiParams ps;
        ps.psi = {x[0], x[1], x[2], 1.0, x[3], x[4]};
        return ps;
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const
    {
        auto ps = unpack(x);
        const size_t n = t.size();
        for (size_t i = 0; i < n; ++i) {
            try {
                auto v = parametric_lm(ps, t[i], T);
                f[i] = v[0] - L[i];
                f[n + i] = v[1] - M[i];
            } catch (const std::domain_error&) {
                f[i] = f[n + i] = 1e6;
            }
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const
    {
        auto ps = unpack(x);
        const size_t n = t.size();
        J.setZero();
        for (size_t i = 0; i < n; ++i) {
            try {
                auto v = parametric_lm_grad(ps, t[i], T);
                const int cols[5] = {0, 1, 2, 4, 5};
                for (int k = 0; k < 5; ++k) {
                    J(i, k) = v.dL[cols[k]];
                    J(n + i, k) = v.dM[cols[k]];
                }
            } catch (const std::domain_error&) {
            }
        }
        return 0;
    }
};

// Given psi0 and psi3 = 1 the fit is linear in (psi1, psi2) and then in (psi4, psi5).
bool linear_start(double q0, const std::vector<double>& t, const std::vector<double>& L, const std::vector<double>& M,
                  double T, PsiParams& out, double& sse)
{
    const int n = static_cast<int>(t.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        double E = std::exp(q0 * (T - t[i]));
        A(i, 0) = E - 1.0;
        A(i, 1) = L[i];
        rhs[i] = L[i] * E;
    }
    Eigen::Vector2d c12 = A.completeOrthogonalDecomposition().solve(rhs);
    PsiParams ps;
    ps.psi = {q0, c12[0], c12[1], 1.0, 0.0, 0.0};
    double B = 1.0 - c12[1];
    Eigen::MatrixXd G(n, 2);
    for (int i = 0; i < n; ++i) {
        double D = std::exp(q0 * (T - t[i])) - c12[1];
        if (B == 0.0 || D / B <= 0.0) return false;
        G(i, 0) = T - t[i];
        G(i, 1) = std::log(D / B);
    }
    Eigen::VectorXd mv = Eigen::Map<const Eigen::VectorXd>(M.data(), n);
    Eigen::Vector2d c45 = G.completeOrthogonalDecomposition().solve(mv);
    ps.psi[4] = c45[0];
    ps.psi[5] = c45[1];
    try {
        validate(ps, T);
    } catch (const std::domain_error&) {
        return false;
    }
    sse = 0.0;
    for (int i = 0; i < n; ++i) {
        auto v = parametric_lm(ps, t[i], T);
        sse += (v[0] - L[i]) * (v[0] - L[i]) + (v[1] - M[i]) * (v[1] - M[i]);
    }
    out = ps;
    return std::isfinite(sse);
}

} // namespace

FitResult fit_parametric(const std::vector<double>& t, const std::vector<double>& L, const std::vector<double>& M,
                         double T, bool positive_rate)
{
    if (t.size() < 4 || L.size() != t.size() || M.size() != t.size())
        throw std::domain_error("fit_parametric: grids must share a length of at least 4");

    // variable projection over psi0: grid, then golden-section around every local minimum
    auto sse_at = [&](double q0, PsiParams& ps) {
        double sse;
        return linear_start(q0, t, L, M, T, ps, sse) ? sse : std::numeric_limits<double>::infinity();
    };
    std::vector<double> grid;
    for (double q0 = 0.02; q0 < 30.0; q0 *= 1.15) grid.push_back(q0);
    std::vector<PsiParams> starts;
    for (int sign : {1, -1}) {
        if (positive_rate && sign < 0) continue;
        std::vector<double> sse(grid.size());
        PsiParams tmp;
        for (size_t k = 0; k < grid.size(); ++k) sse[k] = sse_at(sign * grid[k], tmp);
        for (size_t k = 0; k < grid.size(); ++k) {
            if (!std::isfinite(sse[k])) continue;
            bool left = k == 0 || !(sse[k - 1] < sse[k]);
            bool right = k + 1 == grid.size() || !(sse[k + 1] < sse[k]);
            if (!(left && right)) continue;
            double lo = sign * grid[k > 0 ? k - 1 : k], hi = sign * grid[k + 1 < grid.size() ? k + 1 : k];
            if (lo > hi) std::swap(lo, hi);
            const double g = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
            double f1 = sse_at(x1, tmp), f2 = sse_at(x2, tmp);
            for (int it = 0; it < 80 && hi - lo > 1e-12 * std::max(1.0, std::fabs(hi)); ++it) {
                if (f1 < f2) {
                    hi = x2; x2 = x1; f2 = f1;
                    x1 = hi - g * (hi - lo); f1 = sse_at(x1, tmp);
                } else {
                    lo = x1; x1 = x2; f1 = f2;
                    x2 = lo + g * (hi - lo); f2 = sse_at(x2, tmp);
                }
            }
            PsiParams ps;
            if (std::isfinite(sse_at(0.5 * (lo + hi), ps))) starts.push_back(ps);
        }
    }
    if (starts.empty()) throw std::runtime_error("fit_parametric: no admissible starting point");

    FitFunctor fn{t, L, M, T};
    auto total_sse = [&](const PsiParams& ps) {
        double s = 0.0;
        for (size_t i = 0; i < t.size(); ++i) {
            auto v = parametric_lm(ps, t[i], T);
            s += (v[0] - L[i]) * (v[0] - L[i]) + (v[1] - M[i]) * (v[1] - M[i]);
        }
        return s;
    };
    PsiParams best = starts.front();
    double best_sse = std::numeric_limits<double>::infinity();
    int status = Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
    for (const auto& st : starts) {
        Eigen::VectorXd x(5);
        x << st.psi[0], st.psi[1], st.psi[2], st.psi[4], st.psi[5];
        Eigen::LevenbergMarquardt<FitFunctor> lm(fn);
        lm.parameters.ftol = 1e-15;
        lm.parameters.xtol = 1e-15;
        lm.parameters.gtol = 1e-12;
        lm.parameters.maxfev = 5000;
        int st_status = lm.minimize(x);
        PsiParams cand = FitFunctor::unpack(x);
        try {
            validate(cand, T);
            if (positive_rate && !(cand.psi[0] > 0.0)) cand = st;
        } catch (const std::domain_error&) {
            cand = st;
        }
        double s = total_sse(cand);
        if (s < best_sse) {
            best_sse = s;
            best = cand;
            status = st_status;
        }
    }

    FitResult res;
    res.psi = best;
    for (size_t i = 0; i < t.size(); ++i) {
        auto v = parametric_lm(res.psi, t[i], T);
        res.sup_err_L = std::max(res.sup_err_L, std::fabs(v[0] - L[i]));
        res.sup_err_M = std::max(res.sup_err_M, std::fabs(v[1] - M[i]));
    }
    res.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                    status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;
    return res;
}

double merton_fraction(const MarketParams& p, double, double y, double u_y)
{
    double z = y + p.delta_star;
    if (!(z > 0.0)) throw std::domain_error("merton_fraction: y + delta_star must be positive");
    return std::sqrt(z) / (p.eta * std::sqrt(y * y + p.sigma_star * p.sigma_star)) * (p.k2 + p.rho * p.k1 * u_y);
}

Band admissibility_band(const MarketParams& p, double R)
{
    if (R < 0.0) throw std::domain_error("admissibility_band: R must be nonnegative");
    double Delta = std::sqrt(p.delta_star * p.delta_star + p.sigma_star * p.sigma_star);
    double lo = p.rho * p.k1 * R;
    double hi = p.eta * std::sqrt(2.0 * (Delta - p.delta_star)) - p.rho * p.k1 * R;
    return {lo, hi, hi < lo};
}

void write_fit_csv(const LMSolution& sol, const PsiParams& psi, double T, const std::string& path,
                    const std::string& header_comment)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# " << header_comment << "\n";
    out << "t,L,M,L_psi,M_psi\n" << std::setprecision(17);
    for (size_t i = 0; i < sol.t.size(); ++i) {
        auto v = parametric_lm(psi, sol.t[i], T);
        out << sol.t[i] << ',' << sol.L[i] << ',' << sol.M[i] << ',' << v[0] << ',' << v[1] << '\n';
    }
}

} // namespace emrl
