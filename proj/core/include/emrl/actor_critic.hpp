#pragma once

#include "emrl/market.hpp"
#include "emrl/truncnorm.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace emrl {

using Vec6 = std::array<double, 6>;

struct CriticParams {
    Vec6 psi{};
};

struct ActorParams {
    Vec6 theta{};
};

void validate(const CriticParams& c, double T);
void validate(const ActorParams& a, double T);

double critic_value(const CriticParams& c, const MarketParams& p, double t, double x, double y);
Vec6 critic_grad(const CriticParams& c, const MarketParams& p, double t, double x, double y);

TruncNormParams actor_policy(const ActorParams& a, const MarketParams& p, double t, double y);
// d mu_theta / d theta
Vec6 actor_mean_grad(const ActorParams& a, const MarketParams& p, double t, double y);
Vec6 actor_log_pdf_grad(const ActorParams& a, const MarketParams& p, double t, double y, double pi);

struct EntropyAndGrad {
    double value;
    Vec6 grad;
};
EntropyAndGrad entropy_and_grad(const ActorParams& a, const MarketParams& p, double t, double y);

enum class TrainMode { entropy, merton };

struct TrainConfig {
    int episodes = 5000;
    int batch_n = 32;
    double lr_exponent = 0.51;
    std::uint64_t seed = 1;
    TrainMode mode = TrainMode::entropy;
    std::optional<double> grad_clip;
    int first_episode = 1;  // > 1 when resuming
    int workers = 0;
    bool noise_free = false;  // zero market increments and mid-quantile actions
};

void validate(const TrainConfig& c);

struct EpisodeRecord {
    int episode = 0;
    Vec6 psi{}, theta{};
    double loss = 0.0;
    bool rejected = false;
    double wall_seconds = 0.0;
};

using TrainHistory = std::vector<EpisodeRecord>;

struct TrainResult {
    CriticParams psi;
    ActorParams theta;
    TrainHistory history;
    int rejected = 0;
};

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;

TrainResult train(const TrainConfig& cfg, const MarketParams& p, CriticParams psi0, ActorParams theta0,
                  const EpisodeCallback& on_episode = {});

struct Accumulators {
    Vec6 h_psi{}, h_theta{};
    Vec6 score_dv{};  // score x Delta V part of h_theta
    double loss = 0.0;
    bool finite = true;
};

// Critic and actor accumulators for one batch of episode j (1-based).
Accumulators episode_accumulators(const TrainConfig& cfg, const MarketParams& p, const CriticParams& psi,
                                  const ActorParams& theta, int episode);

// Norm of the Monte Carlo estimate of sum score x Delta V / N.
double score_term_norm(const MarketParams& p, const CriticParams& psi, const ActorParams& theta, int n_paths,
                       std::uint64_t seed);

struct WarmStart {
    CriticParams psi;
    ActorParams theta;
};

// Critic from the classical factor ODEs, actor mean at the classical Merton fraction.
WarmStart warm_start(const MarketParams& p);

void write_history_csv(std::ostream& os, const TrainHistory& h);

struct Checkpoint {
    CriticParams psi;
    ActorParams theta;
    int episode = 0;
    std::uint64_t seed = 0;
};

void write_checkpoint(std::ostream& os, const Checkpoint& c);
Checkpoint read_checkpoint(std::istream& is);

} // namespace emrl
