#pragma once

#include "emrl/market.hpp"
#include "emrl/rng.hpp"
#include "emrl/truncnorm.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace emrl {

// Source of the random primitives a path consumes.
class IncrementSource {
public:
    virtual ~IncrementSource() = default;
    virtual double normal() = 0;
    virtual double uniform() = 0;
    // Non-central chi-square with dof degrees of freedom and non-centrality ncp.
    virtual double noncentral_chi2(double dof, double ncp) = 0;
};

class RandomSource final : public IncrementSource {
public:
    RandomSource(std::uint64_t seed, StreamTag tag, std::uint64_t index);
    double normal() override;
    double uniform() override;
    double noncentral_chi2(double dof, double ncp) override;

private:
    CounterRng rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Every draw at its mean: zero normals, chi-square at dof + ncp, uniforms at 1/2.
class ZeroSource final : public IncrementSource {
public:
    double normal() override { return 0.0; }
    double uniform() override { return 0.5; }
    double noncentral_chi2(double dof, double ncp) override { return dof + ncp; }
};

using SourceFactory = std::function<std::unique_ptr<IncrementSource>(std::uint64_t path)>;

SourceFactory random_sources(std::uint64_t seed, StreamTag tag = StreamTag::market);
SourceFactory zero_sources();

enum class FactorScheme { exact_cir, drift_implicit };

// Shifted-CIR transition of the factor, exact in law.
double factor_step(const MarketParams& p, double y_k, double dt, IncrementSource& src);

// Conditional mean and variance of y_next given y_k under the exact transition.
struct FactorMoments {
    double mean;
    double variance;
};
FactorMoments factor_transition_moments(const MarketParams& p, double y_k, double dt);

// Drift-implicit square-root step driven by a Brownian increment dU.
double factor_step_implicit(const MarketParams& p, double y_k, double dt, double dU);

struct StepDraw {
    double y_next;
    double dU;     // factor driver
    double dW;     // asset / exploitation leg
    double dWbar;  // complement of W inside U
    double dWhat;  // exploration leg
};

StepDraw draw_step(const MarketParams& p, double y_k, double dt, IncrementSource& src,
                   FactorScheme scheme = FactorScheme::exact_cir);

double asset_step(const MarketParams& p, double s_k, double y_k, double y_next, double t_k, double dt, double dW);

double exploratory_wealth_step(const MarketParams& p, double x_k, double y_k, double policy_mean, double policy_var,
                               double dt, double dW, double dWhat);

using PolicyFn = std::function<TruncNormParams(double t, double y)>;

struct PathBatch {
    int n_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> y, s, x;  // row-major, n_paths x (n_steps + 1)

    double& at(std::vector<double>& v, int i, int k) { return v[static_cast<size_t>(i) * (n_steps + 1) + k]; }
    double at(const std::vector<double>& v, int i, int k) const
    {
        return v[static_cast<size_t>(i) * (n_steps + 1) + k];
    }
};

struct SimOptions {
    double x0 = 1.0;
    FactorScheme scheme = FactorScheme::exact_cir;
    int workers = 0;  // 0: hardware concurrency
    SourceFactory sources;  // empty: counter-based market streams from the seed
};

PathBatch simulate_batch(const MarketParams& p, const PolicyFn& policy, int n_paths, std::uint64_t seed,
                         const SimOptions& opt = {});

void write_csv(const PathBatch& batch, const std::string& path, const std::string& header_comment);

} // namespace emrl
