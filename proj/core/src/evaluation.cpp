#include "emrl/evaluation.hpp"

#include "emrl/simulation.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace emrl {

const char* to_string(EvalMode m) { return m == EvalMode::deterministic ? "deterministic" : "stochastic"; }

std::vector<double> simulate_utilities(const ActorParams& theta, const MarketParams& p, int n_test, std::uint64_t seed,
                                       EvalMode mode, const EvalOptions& opt)
{
    if (n_test < 1) throw std::domain_error("evaluate: n_test must be positive");
    validate(p);
    validate(theta, p.T);
    const double dt = p.dt();
    std::vector<double> u(n_test);
    detail::parallel_for(n_test, opt.workers, [&](long i) {
        RandomSource src(seed, StreamTag::evaluation, std::uint64_t(i));
        double x = 1.0, y = p.y0;
        for (int k = 0; k < p.n_steps; ++k) {
            const double t = k * dt;
            double m1 = 0.0, v = 0.0;
            try {
                if (!opt.bond_only) {
                    const auto mo = moments(actor_policy(theta, p, t, y));
                    m1 = mo.mean;
                    v = mode == EvalMode::stochastic ? mo.variance : 0.0;
                }
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "evaluate: path " << i << " step " << k << ": " << e.what();
                throw std::domain_error(msg.str());
            }
            const auto d = draw_step(p, y, dt, src);
            x = exploratory_wealth_step(p, x, y, m1, v, dt, d.dW, opt.what_scale * d.dWhat);
            y = d.y_next;
        }
        u[i] = crra_utility(p, x);
    });
    return u;
}

EvalReport summarize(const std::vector<double>& u, int n, double benchmark)
{
    if (n < 1 || size_t(n) > u.size()) throw std::domain_error("summarize: bad sample size");
    EvalReport r;
    r.n_test = n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += u[i];
    r.mean_u = s / n;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += (u[i] - r.mean_u) * (u[i] - r.mean_u);
    r.std_u = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    std::vector<double> tmp(u.begin(), u.begin() + n);
    auto mid = tmp.begin() + (n - 1) / 2;
    std::nth_element(tmp.begin(), mid, tmp.end());
    r.median_u = *mid;
    r.benchmark = benchmark;
    r.gap = r.mean_u - benchmark;
    return r;
}

EvalReport evaluate(const ActorParams& theta, const CriticParams& psi, const MarketParams& p, int n_test,
                    std::uint64_t seed, EvalMode mode, const EvalOptions& opt)
{
    const double bench = critic_value(psi, p, 0.0, 1.0, p.y0);
    auto r = summarize(simulate_utilities(theta, p, n_test, seed, mode, opt), n_test, bench);
    r.mode = mode;
    r.seed = seed;
    return r;
}

std::vector<CurvePoint> running_curve(const std::vector<double>& u, const std::vector<int>& checkpoints)
{
    std::vector<CurvePoint> out;
    double s = 0.0, s2 = 0.0;
    int n = 0, prev = 0;
    for (int c : checkpoints) {
        if (c <= prev || size_t(c) > u.size()) throw std::domain_error("curve: checkpoints must increase within n_max");
        for (; n < c; ++n) {
            s += u[n];
            s2 += u[n] * u[n];
        }
        const double mean = s / n;
        const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
        out.push_back({n, mean, std::sqrt(var / n)});
        prev = c;
    }
    return out;
}

std::vector<CurvePoint> mc_convergence_curve(const ActorParams& theta, const CriticParams&, const MarketParams& p,
                                             int n_max, const std::vector<int>& checkpoints, std::uint64_t seed,
                                             EvalMode mode, const EvalOptions& opt)
{
    return running_curve(simulate_utilities(theta, p, n_max, seed, mode, opt), checkpoints);
}

void print_report(std::ostream& os, const EvalReport& r)
{
    os << std::left << std::setprecision(6);
    os << std::setw(12) << "mode" << to_string(r.mode) << '\n';
    os << std::setw(12) << "n_test" << r.n_test << '\n';
    os << std::setw(12) << "seed" << r.seed << '\n';
    os << std::setw(12) << "E[U]" << r.mean_u << '\n';
    os << std::setw(12) << "Std(U)" << r.std_u << '\n';
    os << std::setw(12) << "Median(U)" << r.median_u << '\n';
    os << std::setw(12) << "benchmark" << r.benchmark << '\n';
    os << std::setw(12) << "gap" << r.gap << '\n';
}

void write_report_csv(std::ostream& os, const std::vector<EvalReport>& rows)
{
    os << "mode,n_test,seed,mean_u,std_u,median_u,benchmark,gap\n" << std::setprecision(17);
    for (const auto& r : rows)
        os << to_string(r.mode) << ',' << r.n_test << ',' << r.seed << ',' << r.mean_u << ',' << r.std_u << ','
           << r.median_u << ',' << r.benchmark << ',' << r.gap << '\n';
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve, double benchmark)
{
    os << "n,estimate,benchmark\n" << std::setprecision(17);
    for (const auto& c : curve) os << c.n << ',' << c.estimate << ',' << benchmark << '\n';
}

} // namespace emrl
