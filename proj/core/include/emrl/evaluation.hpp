#pragma once

#include "emrl/actor_critic.hpp"
#include "emrl/market.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace emrl {

enum class EvalMode { deterministic, stochastic };

const char* to_string(EvalMode m);

struct EvalReport {
    int n_test = 0;
    double mean_u = 0.0;
    double std_u = 0.0;
    double median_u = 0.0;
    double benchmark = 0.0;
    double gap = 0.0;
    EvalMode mode = EvalMode::deterministic;
    std::uint64_t seed = 0;
};

struct EvalOptions {
    int workers = 0;
    bool bond_only = false;   // force a zero risky fraction
    double what_scale = 1.0;  // multiplies the exploration leg
};

// Terminal utilities per path, in path order.
std::vector<double> simulate_utilities(const ActorParams& theta, const MarketParams& p, int n_test, std::uint64_t seed,
                                       EvalMode mode, const EvalOptions& opt = {});

// Summary of the first n entries of u.
EvalReport summarize(const std::vector<double>& u, int n, double benchmark);

EvalReport evaluate(const ActorParams& theta, const CriticParams& psi, const MarketParams& p, int n_test,
                    std::uint64_t seed, EvalMode mode, const EvalOptions& opt = {});

struct CurvePoint {
    int n;
    double estimate;
    double std_error;
};

// Running mean and standard error of u at each checkpoint.
std::vector<CurvePoint> running_curve(const std::vector<double>& u, const std::vector<int>& checkpoints);

std::vector<CurvePoint> mc_convergence_curve(const ActorParams& theta, const CriticParams& psi, const MarketParams& p,
                                             int n_max, const std::vector<int>& checkpoints, std::uint64_t seed,
                                             EvalMode mode = EvalMode::deterministic, const EvalOptions& opt = {});

void print_report(std::ostream& os, const EvalReport& r);
void write_report_csv(std::ostream& os, const std::vector<EvalReport>& rows);
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve, double benchmark);

} // namespace emrl
