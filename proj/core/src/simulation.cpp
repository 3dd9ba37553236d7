#include "emrl/simulation.hpp"
#include "parallel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace emrl {

RandomSource::RandomSource(std::uint64_t seed, StreamTag tag, std::uint64_t index) : rng_(seed, tag, index) {}

double RandomSource::uniform() { return rng_.uniform(); }

double RandomSource::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Marsaglia polar
    double u, v, s;
    do {
        u = 2.0 * rng_.uniform() - 1.0;
        v = 2.0 * rng_.uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double RandomSource::noncentral_chi2(double dof, double ncp)
{
    if (dof > 1.0) {
        double z = normal() + std::sqrt(ncp);
        std::gamma_distribution<double> g(0.5 * (dof - 1.0), 2.0);
        return z * z + g(rng_);
    }
    std::poisson_distribution<long> pois(0.5 * ncp);
    long n = ncp > 0.0 ? pois(rng_) : 0;
    double shape = 0.5 * dof + static_cast<double>(n);
    std::gamma_distribution<double> g(shape, 2.0);
    return g(rng_);
}

SourceFactory random_sources(std::uint64_t seed, StreamTag tag)
{
    return [seed, tag](std::uint64_t path) -> std::unique_ptr<IncrementSource> {
        return std::make_unique<RandomSource>(seed, tag, path);
    };
}

SourceFactory zero_sources()
{
    return [](std::uint64_t) -> std::unique_ptr<IncrementSource> { return std::make_unique<ZeroSource>(); };
}

namespace {

struct CirStep {
    double e, scale, dof, level;
};

CirStep cir_setup(const MarketParams& p, double dt)
{
    CirStep s;
    s.level = p.y0 + p.delta_star;
    s.e = std::exp(-p.c * dt);
    double v = p.k1 * p.k1;
    s.scale = v * (1.0 - s.e) / (4.0 * p.c);
    s.dof = v > 0.0 ? 4.0 * p.c * s.level / v : 0.0;
    return s;
}

// Keeps y + delta* strictly positive in floating point when z underflows.
double floor_shift(double y, double shift)
{
    if (y + shift > 0.0) return y;
    return std::nextafter(-shift, 0.0);
}

} // namespace

FactorMoments factor_transition_moments(const MarketParams& p, double y_k, double dt)
{
    double z = y_k + p.delta_star;
    double level = p.y0 + p.delta_star;
    double e = std::exp(-p.c * dt);
    double v = p.k1 * p.k1;
    double mean = level + (z - level) * e;
    double var = z * v * e * (1.0 - e) / p.c + level * v * (1.0 - e) * (1.0 - e) / (2.0 * p.c);
    return {mean - p.delta_star, var};
}

double factor_step(const MarketParams& p, double y_k, double dt, IncrementSource& src)
{
    double z = y_k + p.delta_star;
    if (!(z > 0.0)) throw std::domain_error("factor_step: y + delta_star must be positive");
    auto s = cir_setup(p, dt);
    if (p.k1 == 0.0) return s.level + (z - s.level) * s.e - p.delta_star;
    double ncp = z * s.e / s.scale;
    double z_next = s.scale * src.noncentral_chi2(s.dof, ncp);
    return floor_shift(z_next - p.delta_star, p.delta_star);
}

double factor_step_implicit(const MarketParams& p, double y_k, double dt, double dU)
{
    double z = y_k + p.delta_star;
    if (!(z > 0.0)) throw std::domain_error("factor_step_implicit: y + delta_star must be positive");
    double level = p.y0 + p.delta_star;
    double shifted = p.c * level - 0.25 * p.k1 * p.k1;
    double w = std::sqrt(z) + 0.5 * p.k1 * dU;
    double root = (w + std::sqrt(w * w + (2.0 + p.c * dt) * shifted * dt)) / (2.0 + p.c * dt);
    return floor_shift(root * root - p.delta_star, p.delta_star);
}

StepDraw draw_step(const MarketParams& p, double y_k, double dt, IncrementSource& src, FactorScheme scheme)
{
    StepDraw d{};
    double sdt = std::sqrt(dt);
    if (scheme == FactorScheme::drift_implicit || p.k1 == 0.0) {
        d.dU = sdt * src.normal();
        d.y_next = scheme == FactorScheme::drift_implicit ? factor_step_implicit(p, y_k, dt, d.dU)
                                                          : factor_step(p, y_k, dt, src);
    } else {
        d.y_next = factor_step(p, y_k, dt, src);
        auto fm = factor_transition_moments(p, y_k, dt);
        d.dU = (d.y_next - fm.mean) / std::sqrt(fm.variance) * sdt;
    }
    double cr = std::sqrt(1.0 - p.rho * p.rho);
    d.dW = p.rho * d.dU + cr * sdt * src.normal();
    d.dWbar = (d.dU - p.rho * d.dW) / cr;
    d.dWhat = sdt * src.normal();
    return d;
}

double asset_step(const MarketParams& p, double s_k, double y_k, double y_next, double t_k, double dt, double dW)
{
    double ybar = 0.5 * (y_k + y_next);
    auto c = coeffs(p, t_k + 0.5 * dt, ybar);
    double mu = p.r + c.mu_excess;
    return s_k * std::exp((mu - 0.5 * c.sigma * c.sigma) * dt + c.sigma * dW);
}

double exploratory_wealth_step(const MarketParams& p, double x_k, double y_k, double policy_mean, double policy_var,
                               double dt, double dW, double dWhat)
{
    auto c = coeffs(p, 0.0, y_k);
    double m1 = policy_mean, v = policy_var;
    double drift = p.r + c.mu_excess * m1 - 0.5 * c.sigma * c.sigma * (m1 * m1 + v);
    return x_k * std::exp(drift * dt + c.sigma * (m1 * dW + std::sqrt(v) * dWhat));
}

PathBatch simulate_batch(const MarketParams& p, const PolicyFn& policy, int n_paths, std::uint64_t seed,
                         const SimOptions& opt)
{
    if (n_paths < 1) throw std::domain_error("simulate_batch: need at least one path");
    validate(p);
    PathBatch b;
    b.n_paths = n_paths;
    b.n_steps = p.n_steps;
    b.seed = seed;
    const double dt = p.dt();
    b.times.resize(p.n_steps + 1);
    for (int k = 0; k <= p.n_steps; ++k) b.times[k] = k * dt;
    size_t cells = static_cast<size_t>(n_paths) * (p.n_steps + 1);
    b.y.resize(cells);
    b.s.resize(cells);
    b.x.resize(cells);
    SourceFactory make = opt.sources ? opt.sources : random_sources(seed);

    detail::parallel_for(n_paths, opt.workers, [&](long i) {
        auto src = make(static_cast<std::uint64_t>(i));
        double y = p.y0, s = p.s0, x = opt.x0;
        b.at(b.y, i, 0) = y;
        b.at(b.s, i, 0) = s;
        b.at(b.x, i, 0) = x;
        for (int k = 0; k < p.n_steps; ++k) {
            double t = b.times[k];
            Moments mom;
            try {
                mom = moments(policy(t, y));
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "simulate_batch: path " << i << " step " << k << ": " << e.what();
                throw std::domain_error(msg.str());
            }
            auto d = draw_step(p, y, dt, *src, opt.scheme);
            x = exploratory_wealth_step(p, x, y, mom.mean, mom.variance, dt, d.dW, d.dWhat);
            s = asset_step(p, s, y, d.y_next, t, dt, d.dW);
            y = d.y_next;
            b.at(b.y, i, k + 1) = y;
            b.at(b.s, i, k + 1) = s;
            b.at(b.x, i, k + 1) = x;
        }
    });
    return b;
}

void write_csv(const PathBatch& b, const std::string& path, const std::string& header_comment)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# " << header_comment << "\n";
    out << "path,step,t,y,s,x\n";
    out << std::setprecision(17);
    for (int i = 0; i < b.n_paths; ++i)
        for (int k = 0; k <= b.n_steps; ++k)
            out << i << ',' << k << ',' << b.times[k] << ',' << b.at(b.y, i, k) << ',' << b.at(b.s, i, k) << ','
                << b.at(b.x, i, k) << '\n';
}

} // namespace emrl
