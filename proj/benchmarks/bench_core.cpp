#include "emrl/actor_critic.hpp"
#include "emrl/evaluation.hpp"
#include "emrl/hjb.hpp"
#include "emrl/simulation.hpp"
#include "emrl/truncnorm.hpp"

#include <benchmark/benchmark.h>

using namespace emrl;

static void BM_TruncNormMoments(benchmark::State& st)
{
    TruncNormParams p{0.6, 2.4, 0.0, 1.0};
    for (auto _ : st) {
        p.alpha += 1e-9;
        benchmark::DoNotOptimize(moments(p));
        benchmark::DoNotOptimize(entropy(p));
    }
}
BENCHMARK(BM_TruncNormMoments);

static void BM_TruncNormSample(benchmark::State& st)
{
    TruncNormParams p{0.6, 2.4, 0.0, 1.0};
    double u = 0.1;
    for (auto _ : st) {
        u = u < 0.9 ? u + 1e-6 : 0.1;
        benchmark::DoNotOptimize(sample(p, u));
    }
}
BENCHMARK(BM_TruncNormSample);

static void BM_DrawStep(benchmark::State& st)
{
    MarketParams p;
    RandomSource src(1, StreamTag::test, 0);
    double y = p.y0;
    for (auto _ : st) {
        auto d = draw_step(p, y, p.dt(), src);
        y = d.y_next;
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(BM_DrawStep);

static void BM_SolveHjb(benchmark::State& st)
{
    MarketParams p;
    Grid1D g;
    g.n_y = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(solve_hjb(p, g));
}
BENCHMARK(BM_SolveHjb)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_TrainEpisode(benchmark::State& st)
{
    MarketParams p;
    auto w = warm_start(p);
    TrainConfig cfg;
    cfg.workers = 1;
    int j = 1;
    for (auto _ : st) benchmark::DoNotOptimize(episode_accumulators(cfg, p, w.psi, w.theta, j++));
}
BENCHMARK(BM_TrainEpisode)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& st)
{
    MarketParams p;
    auto w = warm_start(p);
    EvalOptions o;
    o.workers = 1;
    for (auto _ : st)
        benchmark::DoNotOptimize(simulate_utilities(w.theta, p, 1000, 7, EvalMode::stochastic, o));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
