#include "commands.hpp"
#include "config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace emrl;
using namespace emrl::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "emrl");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    int code = dispatch(static_cast<int>(argv.size()), argv.data(), o, e);
    return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name)
{
    auto d = fs::temp_directory_path() / ("emrl_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig parse(const std::string& text)
{
    std::istringstream is(text);
    return parse_config(is);
}

} // namespace

TEST(Config, EmptyGivesDefaults)
{
    auto c = parse("");
    EXPECT_EQ(c.market.k1, 0.015);
    EXPECT_EQ(c.market.k2, 0.23);
    EXPECT_EQ(c.market.delta_star, 0.3);
    EXPECT_EQ(c.market.sigma_star, 0.3);
    EXPECT_EQ(c.market.r, 0.02);
    EXPECT_EQ(c.market.c, 2.0);
    EXPECT_EQ(c.market.y0, 0.5);
    EXPECT_EQ(c.market.rho, 0.5);
    EXPECT_EQ(c.market.m, 1.0);
    EXPECT_EQ(c.market.eta, 0.5);
    EXPECT_EQ(c.market.T, 1.0);
    EXPECT_EQ(c.market.n_steps, 252);
    EXPECT_EQ(c.train.episodes, 5000);
    EXPECT_EQ(c.train.batch_n, 32);
    EXPECT_EQ(serialize(c), serialize(RunConfig{}));
}

TEST(Config, RejectsOutOfRangeRiskAversion)
{
    EXPECT_THROW(parse("[market]\neta = 1.5\n"), std::domain_error);
}

TEST(Config, ListsUnknownKeys)
{
    try {
        parse("[market]\nfoo = 1\n[train]\nbar = 2\n");
        FAIL();
    } catch (const std::domain_error& e) {
        std::string m = e.what();
        EXPECT_NE(m.find("market.foo"), std::string::npos);
        EXPECT_NE(m.find("train.bar"), std::string::npos);
    }
}

TEST(Config, MalformedLineReportsLineNumber)
{
    try {
        parse("[market]\nk1 = 0.02\nk2 0.3\n");
        FAIL();
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    EXPECT_THROW(parse("[market]\nk1 = abc\n"), std::domain_error);
}

TEST(Config, RoundTripIsCanonical)
{
    auto c = parse("[market]\nk1 = 0.02\nm = 0.25\n[train]\nmode = merton\ngrad_clip = 5\n"
                   "[eval]\nmode = stochastic\n[expansion]\nm_values = 0.1,0.05\n[run]\noutput_dir = res\n");
    EXPECT_EQ(c.market.k1, 0.02);
    EXPECT_EQ(c.train.mode, TrainMode::merton);
    EXPECT_EQ(c.train.grad_clip.value(), 5.0);
    EXPECT_EQ(c.eval.mode, EvalMode::stochastic);
    EXPECT_EQ(c.output_dir, "res");
    auto text = serialize(c);
    EXPECT_EQ(serialize(parse(text)), text);
}

TEST(Config, HashIgnoresOutputDirOnly)
{
    RunConfig a, b;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.train.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Dispatch, UsageErrors)
{
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"no-such-command"}).code, 2);
    EXPECT_EQ(run({"train", "--mode", "sideways"}).code, 2);
    EXPECT_EQ(run({"train", "--episodes", "zero"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Dispatch, DomainErrors)
{
    auto d = scratch("domain");
    std::ofstream(d / "bad.ini") << "[market]\neta = 1.5\n";
    EXPECT_EQ(run({"check-conditions", "--config", (d / "bad.ini").string(), "--out", d.string()}).code, 1);
    EXPECT_EQ(run({"evaluate", "--out", (d / "missing").string()}).code, 1);
}

TEST(Dispatch, CheckConditionsReportsConditionTwo)
{
    auto d = scratch("conditions");
    auto r = run({"check-conditions", "--out", d.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto pos = r.out.find("cond_ii_pass");
    ASSERT_NE(pos, std::string::npos);
    auto line = r.out.substr(pos, r.out.find('\n', pos) - pos);
    EXPECT_NE(line.find("true"), std::string::npos);
    auto csv = slurp(d / "conditions.csv");
    EXPECT_EQ(csv.rfind("# config_hash=" + config_hash(RunConfig{}) + "\n", 0), 0u);
}

TEST(Dispatch, TrainIsByteIdentical)
{
    auto a = scratch("train_a"), b = scratch("train_b");
    ASSERT_EQ(run({"train", "--episodes", "10", "--seed", "1", "--out", a.string()}).code, 0);
    ASSERT_EQ(run({"train", "--episodes", "10", "--seed", "1", "--out", b.string()}).code, 0);
    for (auto name : {"history.csv", "checkpoint.txt"}) {
        auto x = slurp(a / name);
        EXPECT_FALSE(x.empty());
        EXPECT_EQ(x, slurp(b / name)) << name;
        EXPECT_EQ(x.rfind("# config_hash=", 0), 0u) << name;
    }
    // evaluation picks up the checkpoint from the output directory
    auto e1 = run({"evaluate", "--out", a.string(), "--n-test", "500"});
    ASSERT_EQ(e1.code, 0) << e1.err;
    auto first = slurp(a / "evaluation_deterministic.csv");
    ASSERT_EQ(run({"evaluate", "--out", a.string(), "--n-test", "500"}).code, 0);
    EXPECT_EQ(first, slurp(a / "evaluation_deterministic.csv"));
    ASSERT_EQ(run({"mc-curve", "--out", a.string(), "--n-test", "3000", "--mode", "stochastic"}).code, 0);
    EXPECT_EQ(slurp(a / "mc_curve_stochastic.csv").rfind("# config_hash=", 0), 0u);
}

TEST(Dispatch, EnvironmentSetsOutputDir)
{
    auto d = scratch("env");
    ::setenv("EM_OUTPUT_DIR", d.string().c_str(), 1);
    auto r = run({"check-conditions"});
    ::unsetenv("EM_OUTPUT_DIR");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(fs::exists(d / "conditions.csv"));
}

TEST(Config, CommentsAreIgnored)
{
    auto c = parse("; header\n# also a comment\n[market]\nm = 0.5 ; inline\neta = 0.4 # inline\n");
    EXPECT_EQ(c.market.m, 0.5);
    EXPECT_EQ(c.market.eta, 0.4);
}
