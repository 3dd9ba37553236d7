#include "commands.hpp"

#include "config.hpp"

#include "emrl/classical.hpp"
#include "emrl/conditions.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace emrl::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    std::optional<int> n_test;
    std::string mode;
    std::string checkpoint;
};

struct Context {
    RunConfig cfg;
    fs::path dir;
    std::string hash;
    std::ostream& out;

    std::ofstream open(const std::string& name) const
    {
        std::ofstream f(dir / name);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << "# config_hash=" << hash << '\n';
        return f;
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

Context make_context(const Flags& fl, std::ostream& out, const char* sub)
{
    RunConfig cfg = fl.config.empty() ? RunConfig{} : parse_config_file(fl.config);
    const std::string sname = sub;
    if (fl.seed) {
        if (sname == "evaluate" || sname == "mc-curve") cfg.eval.seed = *fl.seed;
        else cfg.train.seed = *fl.seed;
    }
    if (fl.episodes) cfg.train.episodes = *fl.episodes;
    if (fl.n_test) cfg.eval.n_test = *fl.n_test;
    if (!fl.mode.empty()) {
        if (fl.mode == "entropy") cfg.train.mode = TrainMode::entropy;
        else if (fl.mode == "merton") cfg.train.mode = TrainMode::merton;
        else if (fl.mode == "deterministic") cfg.eval.mode = EvalMode::deterministic;
        else if (fl.mode == "stochastic") cfg.eval.mode = EvalMode::stochastic;
    }
    if (const char* env = std::getenv("EM_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!fl.out.empty()) cfg.output_dir = fl.out;
    validate(cfg);
    fs::create_directories(cfg.output_dir);
    Context ctx{cfg, fs::path(cfg.output_dir), config_hash(cfg), out};
    out << "config_hash=" << ctx.hash << "  output_dir=" << cfg.output_dir << '\n';
    return ctx;
}

Checkpoint load_checkpoint(const Context& c, const std::string& flag)
{
    const std::string p = flag.empty() ? c.path("checkpoint.txt") : flag;
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot open checkpoint " + p + " (run train first)");
    return read_checkpoint(f);
}

void print_vec(std::ostream& os, const char* name, const Vec6& v)
{
    os << name << " =";
    for (double x : v) os << ' ' << std::setprecision(6) << x;
    os << '\n';
}

void cmd_solve_classical(const Context& c)
{
    const auto& p = c.cfg.market;
    auto sol = solve_lm_odes(p, 4 * p.n_steps + 1);
    auto res = lm_residual(p, sol);
    auto fit = fit_parametric(sol.t, sol.L, sol.M, p.T, true);
    write_fit_csv(sol, fit.psi, p.T, c.path("classical_fit.csv"), "config_hash=" + c.hash);
    c.out << "ode residual L,M    = " << res[0] << ", " << res[1] << '\n';
    c.out << "L(0), M(0)          = " << sol.L.front() << ", " << sol.M.front() << '\n';
    print_vec(c.out, "fitted psi         ", fit.psi.psi);
    c.out << "sup|L_psi - L|      = " << fit.sup_err_L << '\n';
    c.out << "sup|M_psi - M|      = " << fit.sup_err_M << '\n';
    c.out << "wrote " << c.path("classical_fit.csv") << '\n';
}

void cmd_check_conditions(const Context& c)
{
    auto r = check_conditions(c.cfg.market, c.cfg.grid.y_lo, c.cfg.grid.y_hi);
    print_report(c.out, r);
    auto f = c.open("conditions.csv");
    write_report_csv(f, r);
    c.out << "wrote " << c.path("conditions.csv") << '\n';
}

void cmd_solve_hjb(const Context& c)
{
    const auto& p = c.cfg.market;
    auto u = solve_hjb(p, c.cfg.grid);
    double res = max_abs_interior(hjb_residual(p, u));
    auto s = c.open("hjb_surface.csv");
    write_surface_csv(s, u);
    auto q = c.open("hjb_policy.csv");
    write_policy_csv(q, p, u);
    int j0 = static_cast<int>(std::lround((p.y0 - c.cfg.grid.y_lo) / c.cfg.grid.h()));
    c.out << "grid                = " << c.cfg.grid.n_y + 1 << " x " << c.cfg.grid.n_t + 1 << '\n';
    c.out << "max residual        = " << res << '\n';
    c.out << "u(0, y0)            = " << std::setprecision(8) << u.at(0, j0) << '\n';
    c.out << "wrote hjb_surface.csv, hjb_policy.csv\n";
}

void cmd_policy_iterate(const Context& c)
{
    const auto& p = c.cfg.market;
    const auto& ps = c.cfg.policy;
    auto pi = policy_iteration(p, c.cfg.grid, ps.kappa, ps.chi, ps.tol, ps.max_iter);
    auto hjb = solve_hjb(p, c.cfg.grid);
    auto f = c.open("policy_iteration.csv");
    f << "iteration,sup_change,sup_distance_to_hjb\n" << std::setprecision(17);
    for (size_t k = 0; k < pi.surfaces.size(); ++k)
        f << k << ',' << (k == 0 ? 0.0 : pi.sup_change[k - 1]) << ',' << sup_distance(pi.surfaces[k], hjb) << '\n';
    auto s = c.open("policy_iteration_surface.csv");
    write_surface_csv(s, pi.surfaces.back());
    c.out << "iterations          = " << pi.surfaces.size() - 1 << '\n';
    c.out << "converged           = " << (pi.converged ? "true" : "false") << '\n';
    c.out << "sup |V - u_hjb|     = " << sup_distance(pi.surfaces.back(), hjb) << '\n';
    c.out << "wrote policy_iteration.csv, policy_iteration_surface.csv\n";
    if (!pi.converged) throw std::domain_error("policy iteration did not converge within max_iter");
}

void cmd_expansion_check(const Context& c)
{
    auto r = expansion_check(c.cfg.market, c.cfg.grid, c.cfg.expansion_m);
    auto f = c.open("expansion.csv");
    f << "m,remainder,mean_remainder,leading,leading_raw,ratio\n" << std::setprecision(17);
    for (size_t k = 0; k < r.m.size(); ++k)
        f << r.m[k] << ',' << r.remainder[k] << ',' << r.mean_remainder[k] << ',' << r.leading[k] << ','
          << r.leading_raw[k] << ',' << (k == 0 ? 0.0 : r.ratios[k - 1]) << '\n';
    c.out << "m          remainder      ratio\n";
    for (size_t k = 0; k < r.m.size(); ++k)
        c.out << std::setw(10) << r.m[k] << ' ' << std::setw(14) << r.remainder[k] << ' '
              << (k == 0 ? 0.0 : r.ratios[k - 1]) << '\n';
    c.out << "leading target      = " << r.leading_target << '\n';
    c.out << "phi1 residual       = " << r.phi1_residual << '\n';
    c.out << "ratio_pass          = " << (r.ratio_pass ? "true" : "false") << '\n';
    c.out << "wrote expansion.csv\n";
}

void cmd_train(const Context& c, const Flags& fl)
{
    const auto& p = c.cfg.market;
    TrainConfig tc = c.cfg.train;
    CriticParams psi;
    ActorParams theta;
    if (!fl.checkpoint.empty()) {
        auto ck = load_checkpoint(c, fl.checkpoint);
        psi = ck.psi;
        theta = ck.theta;
        tc.first_episode = ck.episode + 1;
        tc.seed = ck.seed;
        c.out << "resuming after episode " << ck.episode << '\n';
    } else {
        auto w = warm_start(p);
        psi = w.psi;
        theta = w.theta;
    }
    const int every = std::max(1, tc.episodes / 10);
    auto res = train(tc, p, psi, theta, [&](const EpisodeRecord& e) {
        if ((e.episode - tc.first_episode + 1) % every == 0)
            c.out << "episode " << std::setw(6) << e.episode << "  loss " << std::setprecision(6) << e.loss
                  << "  V(0,1,y0) " << critic_value(CriticParams{e.psi}, p, 0.0, 1.0, p.y0) << '\n';
    });
    auto h = c.open("history.csv");
    write_history_csv(h, res.history);
    std::ofstream ck(c.path("checkpoint.txt"));
    if (!ck) throw std::runtime_error("cannot write checkpoint");
    ck << "# config_hash=" << c.hash << '\n';
    write_checkpoint(ck, Checkpoint{res.psi, res.theta, tc.first_episode + tc.episodes - 1, tc.seed});
    print_vec(c.out, "psi  ", res.psi.psi);
    print_vec(c.out, "theta", res.theta.theta);
    c.out << "rejected episodes = " << res.rejected << '\n';
    c.out << "wrote history.csv, checkpoint.txt\n";
}

void cmd_evaluate(const Context& c, const Flags& fl)
{
    auto ck = load_checkpoint(c, fl.checkpoint);
    EvalOptions o;
    o.workers = c.cfg.eval.workers;
    auto r = evaluate(ck.theta, ck.psi, c.cfg.market, c.cfg.eval.n_test, c.cfg.eval.seed, c.cfg.eval.mode, o);
    print_report(c.out, r);
    const std::string name = std::string("evaluation_") + emrl::to_string(r.mode) + ".csv";
    auto f = c.open(name);
    write_report_csv(f, {r});
    c.out << "wrote " << name << '\n';
}

void cmd_mc_curve(const Context& c, const Flags& fl)
{
    auto ck = load_checkpoint(c, fl.checkpoint);
    const int n = c.cfg.eval.n_test;
    std::vector<int> pts;
    for (int base = 1000; base < n; base *= 10)
        for (int k : {1, 2, 5})
            if (base * k < n) pts.push_back(base * k);
    pts.push_back(n);
    EvalOptions o;
    o.workers = c.cfg.eval.workers;
    auto curve = mc_convergence_curve(ck.theta, ck.psi, c.cfg.market, n, pts, c.cfg.eval.seed, c.cfg.eval.mode, o);
    const double bench = critic_value(ck.psi, c.cfg.market, 0.0, 1.0, c.cfg.market.y0);
    const std::string name = std::string("mc_curve_") + emrl::to_string(c.cfg.eval.mode) + ".csv";
    auto f = c.open(name);
    write_curve_csv(f, curve, bench);
    c.out << "n_test      estimate     std_error    gap\n";
    for (const auto& q : curve)
        c.out << std::setw(8) << q.n << "  " << std::setw(11) << q.estimate << "  " << std::setw(11) << q.std_error
              << "  " << q.estimate - bench << '\n';
    c.out << "wrote " << name << '\n';
}

} // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Entropy-regularized portfolio learning under stochastic volatility", "emrl"};
    app.require_subcommand(1);
    Flags fl;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", fl.config, "key=value config file")->check(CLI::ExistingFile);
        s->add_option("--out", fl.out, "output directory");
    };
    auto* classical = app.add_subcommand("solve-classical", "classical factor ODEs and parametric fit");
    auto* conditions = app.add_subcommand("check-conditions", "existence conditions report");
    auto* hjb = app.add_subcommand("solve-hjb", "finite-difference value surface");
    auto* piter = app.add_subcommand("policy-iterate", "policy iteration on the grid");
    auto* expansion = app.add_subcommand("expansion-check", "small-temperature expansion remainders");
    auto* trainc = app.add_subcommand("train", "actor-critic training");
    auto* evalc = app.add_subcommand("evaluate", "out-of-sample Monte Carlo evaluation");
    auto* curve = app.add_subcommand("mc-curve", "running Monte Carlo estimate");
    for (auto* s : {classical, conditions, hjb, piter, expansion, trainc, evalc, curve}) common(s);

    trainc->add_option("--seed", fl.seed, "training seed");
    trainc->add_option("--episodes", fl.episodes, "number of episodes")->check(CLI::PositiveNumber);
    trainc->add_option("--mode", fl.mode, "entropy or merton")->check(CLI::IsMember({"entropy", "merton"}));
    trainc->add_option("--checkpoint", fl.checkpoint, "resume from checkpoint");
    for (auto* s : {evalc, curve}) {
        s->add_option("--seed", fl.seed, "evaluation seed");
        s->add_option("--n-test", fl.n_test, "number of test paths")->check(CLI::PositiveNumber);
        s->add_option("--mode", fl.mode, "deterministic or stochastic")
            ->check(CLI::IsMember({"deterministic", "stochastic"}));
        s->add_option("--checkpoint", fl.checkpoint, "trained parameters (default OUT/checkpoint.txt)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (app.exit(e, out, err) == 0) return 0;
        err << app.help();
        return 2;
    }

    auto* sub = app.get_subcommands().front();
    try {
        auto ctx = make_context(fl, out, sub->get_name().c_str());
        if (sub == classical) cmd_solve_classical(ctx);
        else if (sub == conditions) cmd_check_conditions(ctx);
        else if (sub == hjb) cmd_solve_hjb(ctx);
        else if (sub == piter) cmd_policy_iterate(ctx);
        else if (sub == expansion) cmd_expansion_check(ctx);
        else if (sub == trainc) cmd_train(ctx, fl);
        else if (sub == evalc) cmd_evaluate(ctx, fl);
        else cmd_mc_curve(ctx, fl);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace emrl::cli
