#include "emrl/hjb.hpp"

#include "emrl/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <stdexcept>
#include <string>

namespace emrl {

void validate(const Grid1D& g)
{
    if (!(g.y_lo < g.y_hi)) throw std::domain_error("grid: need y_lo < y_hi");
    if (g.n_y < 3) throw std::domain_error("grid: n_y must be at least 3");
    if (g.n_t < 2) throw std::domain_error("grid: n_t must be at least 2");
    if (!(g.T > 0.0)) throw std::domain_error("grid: T must be positive");
}

double ValueSurface::u_y(int i, int j) const
{
    if (j == 0 || j == grid.n_y) return 0.0;
    return (at(i, j + 1) - at(i, j - 1)) / (2.0 * grid.h());
}

double sup_distance(const ValueSurface& a, const ValueSurface& b)
{
    if (a.u.size() != b.u.size()) throw std::invalid_argument("sup_distance: grid mismatch");
    double s = 0.0;
    for (size_t k = 0; k < a.u.size(); ++k) s = std::max(s, std::abs(a.u[k] - b.u[k]));
    return s;
}

double merton_ratio(const MarketParams& p, double y, double u_y)
{
    const auto c = coeffs(p, 0.0, y);
    return (c.mu_excess + p.rho * c.delta * c.sigma * u_y) / (p.eta * c.sigma * c.sigma);
}

ZResult z_ab(const MarketParams& p, double y, double u_y)
{
    if (!(p.m > 0.0)) throw std::domain_error("z_ab: m must be positive");
    const auto c = coeffs(p, 0.0, y);
    const double pim = merton_ratio(p, y, u_y);
    const double scale = std::sqrt(p.eta * c.sigma * c.sigma / p.m);
    ZResult z;
    z.D = std::isinf(p.a) ? p.a : (p.a - pim) * scale;
    z.F = std::isinf(p.b) ? p.b : (p.b - pim) * scale;
    z.log_z = log_norm_interval(z.D, z.F);
    z.Z = std::exp(z.log_z);
    return z;
}

double limit_m_lnz(const MarketParams& p, double y, double u_y)
{
    const auto c = coeffs(p, 0.0, y);
    const double pim = merton_ratio(p, y, u_y);
    const double q = p.eta * c.sigma * c.sigma;
    if (pim < p.a) return -0.5 * (p.a - pim) * (p.a - pim) * q;
    if (pim > p.b) return -0.5 * (p.b - pim) * (p.b - pim) * q;
    return 0.0;
}

namespace {

double d_limit_m_lnz(const MarketParams& p, double y, double u_y)
{
    const auto c = coeffs(p, 0.0, y);
    const double pim = merton_ratio(p, y, u_y);
    const double dpim = p.rho * c.delta / c.sigma;
    const double q = p.eta * c.sigma * c.sigma;
    if (pim < p.a) return (p.a - pim) * q * dpim;
    if (pim > p.b) return (p.b - pim) * q * dpim;
    return 0.0;
}

} // namespace

double hamiltonian(const MarketParams& p, double y, double q)
{
    const auto c = coeffs(p, 0.0, y);
    const double s2 = c.sigma * c.sigma;
    const double k = (1.0 - p.eta) / (2.0 * p.eta);
    double h = p.r * (1.0 - p.eta) + c.drift_y * q + 0.5 * c.delta * c.delta * q * q +
               k * (c.mu_excess * c.mu_excess / s2 + 2.0 * p.rho * c.mu_excess * c.delta * q / c.sigma +
                    p.rho * p.rho * c.delta * c.delta * q * q);
    if (p.m > 0.0) {
        const auto z = z_ab(p, y, q);
        h += 0.5 * (1.0 - p.eta) * p.m * (std::log(2.0 * std::numbers::pi * p.m / (p.eta * s2)) + 2.0 * z.log_z);
    } else {
        h += (1.0 - p.eta) * limit_m_lnz(p, y, q);
    }
    return h;
}

double hamiltonian_slope0(const MarketParams& p, double y, double q)
{
    const auto c = coeffs(p, 0.0, y);
    const double d2 = c.delta * c.delta;
    return d2 * q + (1.0 - p.eta) / p.eta * (p.rho * c.mu_excess * c.delta / c.sigma + p.rho * p.rho * d2 * q) +
           (1.0 - p.eta) * d_limit_m_lnz(p, y, q);
}

namespace {

// Coefficients of u_{j-1}, u_j, u_{j+1} in diff * u_yy + adv * u_y with zero-slope ghosts.
std::array<double, 3> stencil(int j, int n, double h, double diff, double adv, Stencil st)
{
    std::array<double, 3> w{0.0, 0.0, 0.0};
    const double h2 = h * h;
    if (j == 0) {
        w[1] = -2.0 * diff / h2;
        w[2] = 2.0 * diff / h2;
        if (st == Stencil::upwind && adv > 0.0) {
            w[1] -= adv / h;
            w[2] += adv / h;
        }
        return w;
    }
    if (j == n) {
        w[0] = 2.0 * diff / h2;
        w[1] = -2.0 * diff / h2;
        if (st == Stencil::upwind && adv < 0.0) {
            w[0] -= adv / h;
            w[1] += adv / h;
        }
        return w;
    }
    w[0] = diff / h2;
    w[1] = -2.0 * diff / h2;
    w[2] = diff / h2;
    if (st == Stencil::central) {
        w[0] -= adv / (2.0 * h);
        w[2] += adv / (2.0 * h);
    } else if (adv > 0.0) {
        w[1] -= adv / h;
        w[2] += adv / h;
    } else if (adv < 0.0) {
        w[0] -= adv / h;
        w[1] += adv / h;
    }
    return w;
}

double central(const std::vector<double>& row, int j, double h)
{
    const int n = int(row.size()) - 1;
    if (j == 0 || j == n) return 0.0;
    return (row[j + 1] - row[j - 1]) / (2.0 * h);
}

// Backward parabolic problem u_t + diff u_yy + adv u_y + g(i, j, u_y, u) = 0, u(T) = 0.
struct Problem {
    Grid1D grid;
    Stencil st = Stencil::upwind;
    std::vector<double> diff, adv;  // per node, time independent
    std::function<double(int, int, double, double)> g;
};

void thomas(std::vector<double>& lo, std::vector<double>& di, std::vector<double>& up, std::vector<double>& rhs)
{
    const size_t n = di.size();
    for (size_t k = 1; k < n; ++k) {
        const double w = lo[k] / di[k - 1];
        di[k] -= w * up[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    rhs[n - 1] /= di[n - 1];
    for (size_t k = n - 1; k-- > 0;) rhs[k] = (rhs[k] - up[k] * rhs[k + 1]) / di[k];
}

constexpr double picard_tol = 1e-10;
constexpr int picard_max = 50;

bool advance(const Problem& pr, int i, const std::vector<double>& next, double dt, std::vector<double>& out)
{
    const int n = pr.grid.n_y;
    const double h = pr.grid.h();
    std::vector<double> lo(n + 1), di(n + 1), up(n + 1);
    for (int j = 0; j <= n; ++j) {
        const auto w = stencil(j, n, h, pr.diff[j], pr.adv[j], pr.st);
        lo[j] = -dt * w[0];
        di[j] = 1.0 - dt * w[1];
        up[j] = -dt * w[2];
    }
    std::vector<double> cur = next, rhs(n + 1), l2, d2, u2;
    for (int it = 0; it < picard_max; ++it) {
        for (int j = 0; j <= n; ++j) rhs[j] = next[j] + dt * pr.g(i, j, central(cur, j, h), cur[j]);
        l2 = lo;
        d2 = di;
        u2 = up;
        thomas(l2, d2, u2, rhs);
        double change = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (!std::isfinite(rhs[j])) return false;
            change = std::max(change, std::abs(rhs[j] - cur[j]));
        }
        cur.swap(rhs);
        if (change <= picard_tol) {
            out = cur;
            return true;
        }
    }
    return false;
}

void step_with_retry(const Problem& pr, int i, const std::vector<double>& next, double dt, std::vector<double>& out,
                     int depth)
{
    if (advance(pr, i, next, dt, out)) return;
    if (depth >= 6)
        throw std::runtime_error("pde: inner iteration did not converge at time row " + std::to_string(i));
    std::vector<double> mid;
    step_with_retry(pr, i, next, 0.5 * dt, mid, depth + 1);
    step_with_retry(pr, i, mid, 0.5 * dt, out, depth + 1);
}

ValueSurface solve(const Problem& pr)
{
    validate(pr.grid);
    ValueSurface s(pr.grid);
    const int n = pr.grid.n_y;
    std::vector<double> next(n + 1, 0.0), row;
    for (int i = pr.grid.n_t - 1; i >= 0; --i) {
        step_with_retry(pr, i, next, pr.grid.dt(), row, 0);
        for (int j = 0; j <= n; ++j) s.at(i, j) = row[j];
        next = row;
    }
    return s;
}

ValueSurface residual(const Problem& pr, const ValueSurface& s)
{
    const Grid1D& g = s.grid;
    ValueSurface r(g);
    const double h = g.h(), dt = g.dt();
    std::vector<double> row(g.n_y + 1);
    for (int i = 0; i < g.n_t; ++i) {
        for (int j = 0; j <= g.n_y; ++j) row[j] = s.at(i, j);
        for (int j = 1; j < g.n_y; ++j) {
            const auto w = stencil(j, g.n_y, h, pr.diff[j], pr.adv[j], pr.st);
            const double lin = w[0] * row[j - 1] + w[1] * row[j] + w[2] * row[j + 1];
            r.at(i, j) = (s.at(i + 1, j) - row[j]) / dt + lin + pr.g(i, j, central(row, j, h), row[j]);
        }
    }
    return r;
}

Problem base_problem(const MarketParams& p, const Grid1D& grid, Stencil st)
{
    validate(p);
    validate(grid);
    Problem pr;
    pr.grid = grid;
    pr.st = st;
    pr.diff.resize(grid.n_y + 1);
    pr.adv.resize(grid.n_y + 1);
    for (int j = 0; j <= grid.n_y; ++j) {
        const auto c = coeffs(p, 0.0, grid.y(j));
        pr.diff[j] = 0.5 * c.delta * c.delta;
        pr.adv[j] = c.drift_y;
    }
    return pr;
}

Problem hjb_problem(const MarketParams& p, const Grid1D& grid, Stencil st)
{
    Problem pr = base_problem(p, grid, st);
    std::vector<double> ys(grid.n_y + 1);
    for (int j = 0; j <= grid.n_y; ++j) ys[j] = grid.y(j);
    pr.g = [p, ys, adv = pr.adv](int, int j, double q, double) { return hamiltonian(p, ys[j], q) - adv[j] * q; };
    return pr;
}

struct NodePolicy {
    double m1, v, ent;
};

Problem evaluation_problem(const MarketParams& p, const Grid1D& grid, const PolicySurface& pol)
{
    Problem pr = base_problem(p, grid, Stencil::upwind);
    const int ny = grid.n_y;
    std::vector<NodePolicy> np(pol.alpha.size());
    std::vector<Coeffs> cs(ny + 1);
    for (int j = 0; j <= ny; ++j) cs[j] = coeffs(p, 0.0, grid.y(j));
    for (int i = 0; i <= grid.n_t; ++i)
        for (int j = 0; j <= ny; ++j) {
            const size_t k = pol.idx(i, j);
            TruncNormParams tp{pol.alpha[k], pol.beta[k], p.a, p.b};
            const auto mo = moments(tp);
            np[k] = {mo.mean, mo.variance, entropy(tp)};
        }
    pr.g = [p, np = std::move(np), cs = std::move(cs), ny](int i, int j, double q, double) {
        const auto& c = cs[j];
        const auto& n = np[size_t(i) * (ny + 1) + j];
        const double s2 = c.sigma * c.sigma;
        return (1.0 - p.eta) * p.rho * c.delta * c.sigma * n.m1 * q + 0.5 * c.delta * c.delta * q * q +
               (1.0 - p.eta) * (p.r + c.mu_excess * n.m1 - 0.5 * p.eta * s2 * (n.m1 * n.m1 + n.v) + p.m * n.ent);
    };
    return pr;
}

Problem first_order_problem(const MarketParams& p, const ValueSurface& u0, bool with_source)
{
    const Grid1D& grid = u0.grid;
    Problem pr = base_problem(p, grid, Stencil::upwind);
    const int ny = grid.n_y;
    std::vector<double> slope(u0.u.size()), src(ny + 1);
    for (int i = 0; i <= grid.n_t; ++i)
        for (int j = 0; j <= ny; ++j) slope[size_t(i) * (ny + 1) + j] = hamiltonian_slope0(p, grid.y(j), u0.u_y(i, j));
    for (int j = 0; j <= ny; ++j) {
        const auto c = coeffs(p, 0.0, grid.y(j));
        src[j] = with_source ? 0.5 * (1.0 - p.eta) * std::log(2.0 * std::numbers::pi / (p.eta * c.sigma * c.sigma))
                             : 0.0;
    }
    pr.g = [slope = std::move(slope), src = std::move(src), ny](int i, int j, double q, double) {
        return slope[size_t(i) * (ny + 1) + j] * q + src[j];
    };
    return pr;
}

} // namespace

ValueSurface hjb_residual(const MarketParams& p, const ValueSurface& surf, Stencil st)
{
    return residual(hjb_problem(p, surf.grid, st), surf);
}

double max_abs_interior(const ValueSurface& r)
{
    double s = 0.0;
    for (int i = 0; i < r.grid.n_t; ++i)
        for (int j = 1; j < r.grid.n_y; ++j) s = std::max(s, std::abs(r.at(i, j)));
    return s;
}

ValueSurface solve_hjb(const MarketParams& p, const Grid1D& grid, Stencil st)
{
    return solve(hjb_problem(p, grid, st));
}

TruncNormParams optimal_policy_from_u(const MarketParams& p, double, double y, double u_y)
{
    if (!(p.m > 0.0)) throw std::domain_error("optimal policy needs m > 0");
    const auto c = coeffs(p, 0.0, y);
    return {merton_ratio(p, y, u_y), std::sqrt(p.m / (p.eta * c.sigma * c.sigma)), p.a, p.b};
}

PolicySurface initial_policy(const MarketParams& p, const Grid1D& grid, double kappa, double chi)
{
    if (!(chi > 0.0)) throw std::domain_error("initial policy: chi must be positive");
    PolicySurface pol(grid);
    for (int i = 0; i <= grid.n_t; ++i)
        for (int j = 0; j <= grid.n_y; ++j) {
            const double s = coeffs(p, 0.0, grid.y(j)).sigma;
            pol.alpha[pol.idx(i, j)] = kappa / (s * s);
            pol.beta[pol.idx(i, j)] = chi / s;
        }
    return pol;
}

PolicySurface improve_policy(const MarketParams& p, const ValueSurface& surf)
{
    const Grid1D& g = surf.grid;
    PolicySurface pol(g);
    for (int i = 0; i <= g.n_t; ++i)
        for (int j = 0; j <= g.n_y; ++j) {
            const auto tp = optimal_policy_from_u(p, g.t(i), g.y(j), surf.u_y(i, j));
            pol.alpha[pol.idx(i, j)] = tp.alpha;
            pol.beta[pol.idx(i, j)] = tp.beta;
        }
    return pol;
}

ValueSurface policy_evaluation_pde(const MarketParams& p, const Grid1D& grid, const PolicySurface& policy)
{
    if (policy.alpha.size() != size_t(grid.n_t + 1) * (grid.n_y + 1))
        throw std::invalid_argument("policy evaluation: policy grid mismatch");
    for (size_t k = 0; k < policy.alpha.size(); ++k)
        if (!std::isfinite(policy.alpha[k]) || !(policy.beta[k] > 0.0))
            throw std::domain_error("policy evaluation: policy must be finite with positive scale");
    return solve(evaluation_problem(p, grid, policy));
}

PolicyIterationResult policy_iteration(const MarketParams& p, const Grid1D& grid, double kappa, double chi,
                                       double tol, int max_iter, const std::optional<PolicySurface>& seed)
{
    if (!(p.m > 0.0)) throw std::domain_error("policy iteration needs m > 0");
    PolicyIterationResult res;
    PolicySurface pol = seed ? *seed : initial_policy(p, grid, kappa, chi);
    for (int n = 0; n < max_iter; ++n) {
        res.policies.push_back(pol);
        res.surfaces.push_back(policy_evaluation_pde(p, grid, pol));
        if (n > 0) {
            const double d = sup_distance(res.surfaces[n], res.surfaces[n - 1]);
            res.sup_change.push_back(d);
            if (d <= tol) {
                res.converged = true;
                break;
            }
        }
        pol = improve_policy(p, res.surfaces.back());
    }
    return res;
}

ValueSurface solve_first_order(const MarketParams& p, const ValueSurface& u0)
{
    return solve(first_order_problem(p, u0, true));
}

ValueSurface first_order_homogeneous_residual(const MarketParams& p, const ValueSurface& u0, const ValueSurface& phi)
{
    return residual(first_order_problem(p, u0, false), phi);
}

namespace {

double at_y(const ValueSurface& s, int i, double y)
{
    const Grid1D& g = s.grid;
    double x = (y - g.y_lo) / g.h();
    int j = std::clamp(int(std::floor(x)), 0, g.n_y - 1);
    double w = x - j;
    return (1.0 - w) * s.at(i, j) + w * s.at(i, j + 1);
}

} // namespace

ExpansionReport expansion_check(const MarketParams& p, const Grid1D& grid, const std::vector<double>& m_values)
{
    for (size_t k = 0; k < m_values.size(); ++k) {
        if (!(m_values[k] > 0.0)) throw std::domain_error("expansion: m values must be positive");
        if (k > 0 && !(m_values[k] < m_values[k - 1])) throw std::domain_error("expansion: m values must decrease");
    }
    MarketParams p0 = p;
    p0.m = 0.0;
    const ValueSurface u0 = solve_hjb(p0, grid);
    const ValueSurface u1 = solve_first_order(p0, u0);
    ExpansionReport rep;
    rep.leading_target = 0.5 * (1.0 - p.eta) * grid.T;
    for (double m : m_values) {
        MarketParams pm = p;
        pm.m = m;
        const ValueSurface um = solve_hjb(pm, grid);
        ValueSurface rem(grid);
        double r = 0.0;
        for (int i = 0; i <= grid.n_t; ++i)
            for (int j = 0; j <= grid.n_y; ++j) {
                const double lead = 0.5 * (1.0 - p.eta) * m * std::log(m) * (grid.T - grid.t(i));
                rem.at(i, j) = um.at(i, j) - u0.at(i, j) - lead - m * u1.at(i, j);
                r = std::max(r, std::abs(rem.at(i, j)));
            }
        double mr = 0.0;
        for (int i = 0; i <= grid.n_t; ++i)
            for (int j = 1; j < grid.n_y; ++j) {
                const auto c = coeffs(p, 0.0, grid.y(j));
                const double am = merton_ratio(pm, grid.y(j), um.u_y(i, j));
                const double a0 = merton_ratio(p0, grid.y(j), u0.u_y(i, j));
                const double corr = m * p.rho * c.delta / (p.eta * c.sigma) * u1.u_y(i, j);
                mr = std::max(mr, std::abs(am - a0 - corr));
            }
        const double mlm = m * std::log(m);
        const double d = at_y(um, 0, p.y0) - at_y(u0, 0, p.y0);
        rep.m.push_back(m);
        rep.remainder.push_back(r);
        rep.mean_remainder.push_back(mr);
        rep.leading.push_back((d - m * at_y(u1, 0, p.y0)) / mlm);
        rep.leading_raw.push_back(d / mlm);
    }
    for (size_t k = 1; k < rep.remainder.size(); ++k) rep.ratios.push_back(rep.remainder[k] / rep.remainder[k - 1]);
    rep.ratio_pass = !rep.ratios.empty() && rep.ratios.back() < 0.75;
    const ValueSurface zero(grid);
    rep.phi1_residual = max_abs_interior(first_order_homogeneous_residual(p0, u0, zero));
    return rep;
}

void write_surface_csv(std::ostream& os, const ValueSurface& s)
{
    const Grid1D& g = s.grid;
    os << "t,y,u\n" << std::setprecision(17);
    for (int i = 0; i <= g.n_t; ++i)
        for (int j = 0; j <= g.n_y; ++j) os << g.t(i) << ',' << g.y(j) << ',' << s.at(i, j) << '\n';
}

void write_policy_csv(std::ostream& os, const MarketParams& p, const ValueSurface& s)
{
    const Grid1D& g = s.grid;
    os << "t,y,alpha_star,beta_star2\n" << std::setprecision(17);
    for (int i = 0; i <= g.n_t; ++i)
        for (int j = 0; j <= g.n_y; ++j) {
            const auto tp = optimal_policy_from_u(p, g.t(i), g.y(j), s.u_y(i, j));
            os << g.t(i) << ',' << g.y(j) << ',' << tp.alpha << ',' << tp.beta * tp.beta << '\n';
        }
}

} // namespace emrl
