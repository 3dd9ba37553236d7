#include "emrl/actor_critic.hpp"

#include "emrl/classical.hpp"
#include "emrl/simulation.hpp"
#include "parallel.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace emrl {

namespace {

PsiParams as_psi(const Vec6& v) { return PsiParams{v}; }

double log_m_term(const MarketParams& p, double t)
{
    if (p.m == 0.0) return 0.0;
    return 0.5 * p.m * (1.0 - p.eta) * (p.T - t) * std::log(p.m);
}

struct CriticEval {
    double value;
    Vec6 grad;
};

CriticEval critic_eval(const CriticParams& c, const MarketParams& p, double t, double x, double y, bool with_grad)
{
    if (!(x > 0.0)) throw std::domain_error("critic: wealth must be positive");
    const auto lm = parametric_lm_grad(as_psi(c.psi), t, p.T);
    const double w = std::pow(x, 1.0 - p.eta) * std::exp(lm.L * y + lm.M + log_m_term(p, t)) / (1.0 - p.eta);
    CriticEval e{w - 1.0 / (1.0 - p.eta), {}};
    if (with_grad)
        for (int k = 0; k < 6; ++k) e.grad[k] = w * (y * lm.dL[k] + lm.dM[k]);
    return e;
}

double mean_scale(const MarketParams& p, double y)
{
    const double z = y + p.delta_star;
    if (!(z > 0.0)) throw std::domain_error("actor: y + delta_star must be positive");
    return std::sqrt(z) / (p.eta * std::sqrt(y * y + p.sigma_star * p.sigma_star));
}

LMValue actor_shape(const ActorParams& a, double t, double T)
{
    PsiParams q{a.theta};
    q.psi[4] = q.psi[5] = 0.0;
    return parametric_lm_grad(q, t, T);
}

double norm(const Vec6& v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

void validate(const CriticParams& c, double T)
{
    for (double v : c.psi)
        if (!std::isfinite(v)) throw std::domain_error("critic: non-finite parameter");
    validate(as_psi(c.psi), T);
}

void validate(const ActorParams& a, double T)
{
    for (double v : a.theta)
        if (!std::isfinite(v)) throw std::domain_error("actor: non-finite parameter");
    PsiParams q{a.theta};
    q.psi[4] = q.psi[5] = 0.0;
    validate(q, T);
}

double critic_value(const CriticParams& c, const MarketParams& p, double t, double x, double y)
{
    return critic_eval(c, p, t, x, y, false).value;
}

Vec6 critic_grad(const CriticParams& c, const MarketParams& p, double t, double x, double y)
{
    return critic_eval(c, p, t, x, y, true).grad;
}

TruncNormParams actor_policy(const ActorParams& a, const MarketParams& p, double t, double y)
{
    const auto sh = actor_shape(a, t, p.T);
    const double mu = mean_scale(p, y) * (a.theta[4] + a.theta[5] * sh.L);
    const double beta = std::sqrt(p.m / (p.eta * (y * y + p.sigma_star * p.sigma_star)));
    return {mu, beta, p.a, p.b};
}

Vec6 actor_mean_grad(const ActorParams& a, const MarketParams& p, double t, double y)
{
    const auto sh = actor_shape(a, t, p.T);
    const double c = mean_scale(p, y);
    Vec6 g{};
    for (int k = 0; k < 4; ++k) g[k] = c * a.theta[5] * sh.dL[k];
    g[4] = c;
    g[5] = c * sh.L;
    return g;
}

Vec6 actor_log_pdf_grad(const ActorParams& a, const MarketParams& p, double t, double y, double pi)
{
    const auto tp = actor_policy(a, p, t, y);
    if (pi < tp.a || pi > tp.b) throw std::domain_error("actor: action outside the support");
    const double gm = log_pdf_mean_grad(tp, pi);
    auto g = actor_mean_grad(a, p, t, y);
    for (double& v : g) v *= gm;
    return g;
}

EntropyAndGrad entropy_and_grad(const ActorParams& a, const MarketParams& p, double t, double y)
{
    const auto tp = actor_policy(a, p, t, y);
    const auto eg = entropy_mean_grad(tp);
    EntropyAndGrad r{eg.value, actor_mean_grad(a, p, t, y)};
    for (double& v : r.grad) v *= eg.d_alpha;
    return r;
}

void validate(const TrainConfig& c)
{
    if (c.episodes < 1) throw std::domain_error("train: episodes must be at least 1");
    if (c.batch_n < 1) throw std::domain_error("train: batch_n must be at least 1");
    if (!(c.lr_exponent > 0.5 && c.lr_exponent <= 1.0)) throw std::domain_error("train: lr_exponent must lie in (0.5, 1]");
    if (c.grad_clip && !(*c.grad_clip > 0.0)) throw std::domain_error("train: grad_clip must be positive");
    if (c.first_episode < 1) throw std::domain_error("train: first_episode must be at least 1");
}

Accumulators episode_accumulators(const TrainConfig& cfg, const MarketParams& p, const CriticParams& psi,
                                  const ActorParams& theta, int episode)
{
    const int n = cfg.batch_n, K = p.n_steps;
    const double dt = p.dt();
    const std::uint64_t base = std::uint64_t(episode - 1) * std::uint64_t(n);
    const bool entropy_mode = cfg.mode == TrainMode::entropy;

    SimOptions opt;
    opt.workers = cfg.workers;
    if (cfg.noise_free)
        opt.sources = zero_sources();
    else
        opt.sources = [seed = cfg.seed, base](std::uint64_t i) {
            return std::make_unique<RandomSource>(seed, StreamTag::market, base + i);
        };
    const PolicyFn policy = [&](double t, double y) { return actor_policy(theta, p, t, y); };
    const PathBatch batch = simulate_batch(p, policy, n, cfg.seed, opt);

    std::vector<Accumulators> per(n);
    detail::parallel_for(n, cfg.workers, [&](long i) {
        Accumulators& acc = per[i];
        std::optional<RandomSource> actions;
        if (!cfg.noise_free) actions.emplace(cfg.seed, StreamTag::action, base + i);
        auto next = critic_eval(psi, p, 0.0, batch.at(batch.x, int(i), 0), batch.at(batch.y, int(i), 0), true);
        for (int k = 0; k < K; ++k) {
            const double t = batch.times[k];
            const double y = batch.at(batch.y, int(i), k);
            const auto cur = next;
            next = critic_eval(psi, p, batch.times[k + 1], batch.at(batch.x, int(i), k + 1),
                               batch.at(batch.y, int(i), k + 1), true);
            const double dv = next.value - cur.value;
            const double u = actions ? actions->uniform() : 0.5;
            const auto tp = actor_policy(theta, p, t, y);
            const double pi = sample(tp, u);
            const auto score = actor_log_pdf_grad(theta, p, t, y, pi);
            double resid = dv;
            const double w = (1.0 - p.eta) * cur.value + 1.0;
            if (entropy_mode) {
                const auto eg = entropy_and_grad(theta, p, t, y);
                resid += dt * p.m * w * eg.value;
                for (int q = 0; q < 6; ++q) acc.h_theta[q] += p.m * dt * w * eg.grad[q];
            }
            for (int q = 0; q < 6; ++q) {
                acc.h_psi[q] += cur.grad[q] * resid;
                acc.h_theta[q] += score[q] * dv;
                acc.score_dv[q] += score[q] * dv;
            }
            acc.loss += resid * resid;
        }
    });

    Accumulators total;
    for (const auto& a : per) {
        for (int q = 0; q < 6; ++q) {
            total.h_psi[q] += a.h_psi[q];
            total.h_theta[q] += a.h_theta[q];
            total.score_dv[q] += a.score_dv[q];
        }
        total.loss += a.loss;
    }
    total.loss /= double(n) * K;
    for (int q = 0; q < 6; ++q)
        if (!std::isfinite(total.h_psi[q]) || !std::isfinite(total.h_theta[q])) total.finite = false;
    if (!std::isfinite(total.loss)) total.finite = false;
    return total;
}

TrainResult train(const TrainConfig& cfg, const MarketParams& p, CriticParams psi0, ActorParams theta0,
                  const EpisodeCallback& on_episode)
{
    validate(cfg);
    validate(p);
    validate(psi0, p.T);
    validate(theta0, p.T);
    TrainResult res{psi0, theta0, {}, 0};
    res.history.reserve(cfg.episodes);
    const auto start = std::chrono::steady_clock::now();
    for (int e = 0; e < cfg.episodes; ++e) {
        const int j = cfg.first_episode + e;
        EpisodeRecord rec;
        rec.episode = j;
        Accumulators acc;
        try {
            acc = episode_accumulators(cfg, p, res.psi, res.theta, j);
        } catch (const std::domain_error&) {
            acc.finite = false;
            acc.loss = std::nan("");
        }
        rec.loss = acc.loss;
        if (acc.finite) {
            const double lr = std::pow(double(j), -cfg.lr_exponent);
            Vec6 dpsi, dtheta;
            for (int q = 0; q < 6; ++q) {
                dpsi[q] = acc.h_psi[q] / cfg.batch_n;
                dtheta[q] = acc.h_theta[q] / cfg.batch_n;
            }
            if (cfg.grad_clip) {
                for (Vec6* v : {&dpsi, &dtheta}) {
                    const double nv = norm(*v);
                    if (nv > *cfg.grad_clip)
                        for (double& x : *v) x *= *cfg.grad_clip / nv;
                }
            }
            CriticParams psi = res.psi;
            ActorParams theta = res.theta;
            for (int q = 0; q < 6; ++q) {
                psi.psi[q] += lr * dpsi[q];
                theta.theta[q] += lr * dtheta[q];
            }
            try {
                validate(psi, p.T);
                validate(theta, p.T);
                res.psi = psi;
                res.theta = theta;
            } catch (const std::domain_error&) {
                rec.rejected = true;
            }
        } else {
            rec.rejected = true;
        }
        if (rec.rejected) ++res.rejected;
        rec.psi = res.psi.psi;
        rec.theta = res.theta.theta;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        res.history.push_back(rec);
        if (on_episode) on_episode(rec);
    }
    return res;
}

double score_term_norm(const MarketParams& p, const CriticParams& psi, const ActorParams& theta, int n_paths,
                       std::uint64_t seed)
{
    TrainConfig cfg;
    cfg.batch_n = n_paths;
    cfg.seed = seed;
    const auto acc = episode_accumulators(cfg, p, psi, theta, 1);
    Vec6 v;
    for (int q = 0; q < 6; ++q) v[q] = acc.score_dv[q] / n_paths;
    return norm(v);
}

WarmStart warm_start(const MarketParams& p)
{
    validate(p);
    const auto sol = solve_lm_odes(p, 4 * p.n_steps + 1);
    const auto fit = fit_parametric(sol.t, sol.L, sol.M, p.T, true);
    WarmStart w;
    w.psi.psi = fit.psi.psi;
    w.psi.psi[5] = 0.0;
    // M ~ psi4 (T - t) in least squares
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < sol.t.size(); ++i) {
        const double tau = p.T - sol.t[i];
        num += tau * sol.M[i];
        den += tau * tau;
    }
    w.psi.psi[4] = num / den;
    w.theta.theta = {fit.psi.psi[0], fit.psi.psi[1], fit.psi.psi[2], fit.psi.psi[3], p.k2, p.rho * p.k1};
    return w;
}

void write_history_csv(std::ostream& os, const TrainHistory& h)
{
    os << "episode";
    for (int q = 0; q < 6; ++q) os << ",psi" << q;
    for (int q = 0; q < 6; ++q) os << ",theta" << q;
    os << ",loss_proxy\n" << std::setprecision(17);
    for (const auto& r : h) {
        os << r.episode;
        for (double v : r.psi) os << ',' << v;
        for (double v : r.theta) os << ',' << v;
        os << ',' << r.loss << '\n';
    }
}

void write_checkpoint(std::ostream& os, const Checkpoint& c)
{
    os << std::setprecision(17);
    os << "episode=" << c.episode << '\n' << "seed=" << c.seed << '\n';
    for (int q = 0; q < 6; ++q) os << "psi" << q << '=' << c.psi.psi[q] << '\n';
    for (int q = 0; q < 6; ++q) os << "theta" << q << '=' << c.theta.theta[q] << '\n';
}

Checkpoint read_checkpoint(std::istream& is)
{
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("checkpoint: malformed line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto take = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error("checkpoint: missing key " + k);
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    Checkpoint c;
    c.episode = std::stoi(take("episode"));
    c.seed = std::stoull(take("seed"));
    for (int q = 0; q < 6; ++q) c.psi.psi[q] = std::stod(take("psi" + std::to_string(q)));
    for (int q = 0; q < 6; ++q) c.theta.theta[q] = std::stod(take("theta" + std::to_string(q)));
    if (!kv.empty()) throw std::runtime_error("checkpoint: unknown key " + kv.begin()->first);
    return c;
}

} // namespace emrl
