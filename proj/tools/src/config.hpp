#pragma once

#include "emrl/actor_critic.hpp"
#include "emrl/evaluation.hpp"
#include "emrl/hjb.hpp"
#include "emrl/market.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace emrl::cli {

struct EvalSettings {
    int n_test = 100000;
    EvalMode mode = EvalMode::deterministic;
    std::uint64_t seed = 7;
    int workers = 0;
};

struct PolicySettings {
    double kappa = 0.2;
    double chi = 0.5;
    double tol = 1e-4;
    int max_iter = 30;
};

struct RunConfig {
    MarketParams market;
    Grid1D grid;
    TrainConfig train;
    EvalSettings eval;
    PolicySettings policy;
    std::vector<double> expansion_m{1e-2, 5e-3, 2.5e-3};
    std::string output_dir = "out";
};

// Throws std::domain_error on bad content, std::runtime_error if unreadable.
RunConfig parse_config(std::istream& is);
RunConfig parse_config_file(const std::string& path);

void validate(const RunConfig& c);

// Canonical text form; output_dir is omitted unless with_output is set.
std::string serialize(const RunConfig& c, bool with_output = true);

// FNV-1a over the canonical form without output_dir.
std::string config_hash(const RunConfig& c);

const char* to_string(TrainMode m);

} // namespace emrl::cli
