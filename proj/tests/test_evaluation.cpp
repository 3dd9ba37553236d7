#include "emrl/evaluation.hpp"
#include "emrl/simulation.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace emrl;

namespace {

const Vec6 theta_ref{2.09, 0.3986, 0.0068, 0.8806, 0.1568, 0.0945};
const Vec6 psi_ref{1.9950, 0.0169, 0.0137, 0.9587, -8.0055, 4.0010};

double utility(double x, double eta) { return (std::pow(x, 1 - eta) - 1) / (1 - eta); }

} // namespace

TEST(Evaluate, BondOnlyIsRiskless)
{
    MarketParams p;
    EvalOptions o;
    o.bond_only = true;
    for (auto mode : {EvalMode::deterministic, EvalMode::stochastic}) {
        auto r = evaluate(ActorParams{theta_ref}, CriticParams{psi_ref}, p, 500, 3, mode, o);
        EXPECT_NEAR(r.mean_u, utility(std::exp(p.r * p.T), p.eta), 1e-12);
        EXPECT_NEAR(r.std_u, 0.0, 1e-12);
    }
}

TEST(Evaluate, SinglePathMatchesHandRoll)
{
    MarketParams p;
    p.n_steps = 50;
    const double dt = p.dt();
    for (auto mode : {EvalMode::deterministic, EvalMode::stochastic}) {
        auto u = simulate_utilities(ActorParams{theta_ref}, p, 3, 11, mode);
        RandomSource src(11, StreamTag::evaluation, 2);
        double x = 1.0, y = p.y0, logx = 0.0;
        for (int k = 0; k < p.n_steps; ++k) {
            double t = k * dt;
            double s2 = y * y + p.sigma_star * p.sigma_star, s = std::sqrt(s2);
            double tau = p.T - t, E = std::exp(theta_ref[0] * tau);
            double L = theta_ref[1] * (E - 1) / (-theta_ref[2] + theta_ref[3] * E);
            double mu = std::sqrt(y + p.delta_star) / (p.eta * s) * (theta_ref[4] + theta_ref[5] * L);
            oracle::TruncNormQuad o(mu, std::sqrt(p.m / (p.eta * s2)), p.a, p.b);
            double m1 = o.mean(), v = mode == EvalMode::stochastic ? o.variance() : 0.0;
            double ex = p.k2 * std::sqrt(y + p.delta_star) * s;
            auto d = draw_step(p, y, dt, src);
            logx += (p.r + ex * m1 - 0.5 * s2 * (m1 * m1 + v)) * dt + s * m1 * d.dW + s * std::sqrt(v) * d.dWhat;
            y = d.y_next;
        }
        x = std::exp(logx);
        EXPECT_NEAR(u[2], utility(x, p.eta), 1e-9 * (1 + std::abs(u[2])));
    }
}

TEST(Evaluate, ExplorationLegOnlyMattersStochastically)
{
    MarketParams p;
    EvalOptions off;
    off.what_scale = 0.0;
    ActorParams th{theta_ref};
    auto d1 = simulate_utilities(th, p, 200, 5, EvalMode::deterministic);
    auto d0 = simulate_utilities(th, p, 200, 5, EvalMode::deterministic, off);
    EXPECT_EQ(d1, d0);
    auto s1 = simulate_utilities(th, p, 200, 5, EvalMode::stochastic);
    auto s0 = simulate_utilities(th, p, 200, 5, EvalMode::stochastic, off);
    EXPECT_NE(s1, s0);
}

TEST(Evaluate, StochasticSpreadExceedsDeterministic)
{
    MarketParams p;
    ActorParams th{theta_ref};
    CriticParams c{psi_ref};
    auto d = evaluate(th, c, p, 20000, 9, EvalMode::deterministic);
    auto s = evaluate(th, c, p, 20000, 9, EvalMode::stochastic);
    EXPECT_GT(s.std_u, d.std_u);
    EXPECT_LE(s.gap, d.gap);
    EXPECT_EQ(d.benchmark, s.benchmark);
    EXPECT_EQ(d.gap, d.mean_u - d.benchmark);
}

TEST(Evaluate, WorkerCountDoesNotChangeResults)
{
    MarketParams p;
    EvalOptions a, b;
    a.workers = 1;
    b.workers = 4;
    ActorParams th{theta_ref};
    EXPECT_EQ(simulate_utilities(th, p, 64, 2, EvalMode::stochastic, a),
              simulate_utilities(th, p, 64, 2, EvalMode::stochastic, b));
}

TEST(Evaluate, RejectsBadSize)
{
    MarketParams p;
    EXPECT_THROW(simulate_utilities(ActorParams{theta_ref}, p, 0, 1, EvalMode::deterministic), std::domain_error);
    std::vector<double> u{1, 2};
    EXPECT_THROW(summarize(u, 3, 0.0), std::domain_error);
}

TEST(Summary, MomentsAndLowerMedian)
{
    std::vector<double> u{5, 1, 4, 2, 3, 6};
    auto r = summarize(u, 6, 3.0);
    EXPECT_DOUBLE_EQ(r.mean_u, 3.5);
    EXPECT_DOUBLE_EQ(r.std_u, std::sqrt(17.5 / 5));
    EXPECT_DOUBLE_EQ(r.median_u, 3.0);
    EXPECT_DOUBLE_EQ(r.gap, 0.5);
    auto h = summarize(u, 5, 0.0);
    EXPECT_DOUBLE_EQ(h.median_u, 3.0);
    EXPECT_DOUBLE_EQ(h.mean_u, 3.0);
}

TEST(Curve, FinalPointEqualsEvaluation)
{
    MarketParams p;
    ActorParams th{theta_ref};
    CriticParams c{psi_ref};
    auto curve = mc_convergence_curve(th, c, p, 3000, {1000, 2000, 3000}, 4);
    auto r = evaluate(th, c, p, 3000, 4, EvalMode::deterministic);
    ASSERT_EQ(curve.size(), 3u);
    EXPECT_EQ(curve.back().n, 3000);
    EXPECT_EQ(curve.back().estimate, r.mean_u);
    EXPECT_NEAR(curve.back().std_error, r.std_u / std::sqrt(3000.0), 1e-15);
}

TEST(Curve, StandardErrorShrinksAtRootN)
{
    std::mt19937_64 gen(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> u(400000);
    for (auto& v : u) v = g(gen);
    auto c = running_curve(u, {100000, 400000});
    double ratio = c[1].std_error / c[0].std_error;
    EXPECT_GE(ratio, 0.4);
    EXPECT_LE(ratio, 0.6);
    // realized error over many independent batches
    const int reps = 400, n = 250;
    double e1 = 0, e4 = 0;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> s(4 * n);
        for (auto& v : s) v = g(gen);
        auto cc = running_curve(s, {n, 4 * n});
        e1 += cc[0].estimate * cc[0].estimate;
        e4 += cc[1].estimate * cc[1].estimate;
    }
    double realized = std::sqrt(e4 / e1);
    EXPECT_GE(realized, 0.4);
    EXPECT_LE(realized, 0.6);
}

TEST(Curve, RejectsUnorderedCheckpoints)
{
    std::vector<double> u(10, 1.0);
    EXPECT_THROW(running_curve(u, {5, 3}), std::domain_error);
    EXPECT_THROW(running_curve(u, {11}), std::domain_error);
}

TEST(Files, ReportAndCurveCsv)
{
    EvalReport r;
    r.n_test = 10;
    std::ostringstream os;
    write_report_csv(os, {r});
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "mode,n_test,seed,mean_u,std_u,median_u,benchmark,gap");
    std::ostringstream cs;
    write_curve_csv(cs, {{10, 0.1, 0.01}}, 0.06);
    EXPECT_EQ(cs.str().substr(0, cs.str().find('\n')), "n,estimate,benchmark");
}
