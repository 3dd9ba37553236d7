#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace emrl::cli {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

double to_double(const std::string& key, const std::string& s)
{
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw std::domain_error("config: " + key + ": not a number: '" + s + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& s)
{
    size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw std::domain_error("config: " + key + ": not an integer: '" + s + "'");
    return v;
}

struct Field {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

using Table = std::vector<std::pair<std::string, Field>>;

#define EMRL_DBL(sec, key, expr)                                                                            \
    {                                                                                                      \
        sec "." key, Field{[](RunConfig& c, const std::string& s) { expr = to_double(sec "." key, s); },   \
                           [](const RunConfig& c) { return fmt(expr); } }                                  \
    }
#define EMRL_INT(sec, key, expr)                                                                            \
    {                                                                                                      \
        sec "." key, Field{[](RunConfig& c, const std::string& s) { expr = to_int(sec "." key, s); },      \
                           [](const RunConfig& c) { return std::to_string(expr); } }                       \
    }

const Table& fields()
{
    static const Table t = {
        EMRL_DBL("market", "k1", c.market.k1),
        EMRL_DBL("market", "k2", c.market.k2),
        EMRL_DBL("market", "delta_star", c.market.delta_star),
        EMRL_DBL("market", "sigma_star", c.market.sigma_star),
        EMRL_DBL("market", "r", c.market.r),
        EMRL_DBL("market", "c", c.market.c),
        EMRL_DBL("market", "y0", c.market.y0),
        EMRL_DBL("market", "rho", c.market.rho),
        EMRL_DBL("market", "s0", c.market.s0),
        EMRL_DBL("market", "m", c.market.m),
        EMRL_DBL("market", "eta", c.market.eta),
        EMRL_DBL("market", "T", c.market.T),
        EMRL_INT("market", "n_steps", c.market.n_steps),
        EMRL_DBL("market", "a", c.market.a),
        EMRL_DBL("market", "b", c.market.b),
        EMRL_DBL("grid", "y_lo", c.grid.y_lo),
        EMRL_DBL("grid", "y_hi", c.grid.y_hi),
        EMRL_INT("grid", "n_y", c.grid.n_y),
        EMRL_INT("grid", "n_t", c.grid.n_t),
        EMRL_INT("train", "episodes", c.train.episodes),
        EMRL_INT("train", "batch_n", c.train.batch_n),
        EMRL_DBL("train", "lr_exponent", c.train.lr_exponent),
        EMRL_INT("train", "seed", c.train.seed),
        {"train.mode", Field{[](RunConfig& c, const std::string& s) {
                                 if (s == "entropy") c.train.mode = TrainMode::entropy;
                                 else if (s == "merton") c.train.mode = TrainMode::merton;
                                 else throw std::domain_error("config: train.mode must be entropy or merton");
                             },
                             [](const RunConfig& c) { return std::string(to_string(c.train.mode)); }}},
        {"train.grad_clip", Field{[](RunConfig& c, const std::string& s) {
                                      double v = to_double("train.grad_clip", s);
                                      c.train.grad_clip = v > 0 ? std::optional<double>(v) : std::nullopt;
                                  },
                                  [](const RunConfig& c) { return fmt(c.train.grad_clip.value_or(0.0)); }}},
        EMRL_INT("train", "workers", c.train.workers),
        EMRL_INT("eval", "n_test", c.eval.n_test),
        {"eval.mode", Field{[](RunConfig& c, const std::string& s) {
                                if (s == "deterministic") c.eval.mode = EvalMode::deterministic;
                                else if (s == "stochastic") c.eval.mode = EvalMode::stochastic;
                                else throw std::domain_error("config: eval.mode must be deterministic or stochastic");
                            },
                            [](const RunConfig& c) { return std::string(emrl::to_string(c.eval.mode)); }}},
        EMRL_INT("eval", "seed", c.eval.seed),
        EMRL_INT("eval", "workers", c.eval.workers),
        EMRL_DBL("policy", "kappa", c.policy.kappa),
        EMRL_DBL("policy", "chi", c.policy.chi),
        EMRL_DBL("policy", "tol", c.policy.tol),
        EMRL_INT("policy", "max_iter", c.policy.max_iter),
        {"expansion.m_values", Field{[](RunConfig& c, const std::string& s) {
                                         c.expansion_m.clear();
                                         std::stringstream ss(s);
                                         std::string tok;
                                         while (std::getline(ss, tok, ','))
                                             c.expansion_m.push_back(to_double("expansion.m_values", tok));
                                     },
                                     [](const RunConfig& c) {
                                         std::string s;
                                         for (size_t i = 0; i < c.expansion_m.size(); ++i)
                                             s += (i ? "," : "") + fmt(c.expansion_m[i]);
                                         return s;
                                     }}},
        {"run.output_dir", Field{[](RunConfig& c, const std::string& s) { c.output_dir = s; },
                                 [](const RunConfig& c) { return c.output_dir; }}},
    };
    return t;
}

#undef EMRL_DBL
#undef EMRL_INT

} // namespace

const char* to_string(TrainMode m) { return m == TrainMode::entropy ? "entropy" : "merton"; }

RunConfig parse_config(std::istream& is)
{
    // strip ';' and '#' comments, keeping line numbers
    std::stringstream clean;
    for (std::string line; std::getline(is, line);) clean << line.substr(0, line.find_first_of(";#")) << '\n';
    pt::ptree tree;
    try {
        pt::read_ini(clean, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::domain_error("config: line " + std::to_string(e.line()) + ": " + e.message());
    }
    std::map<std::string, const Field*> lookup;
    for (const auto& [k, f] : fields()) lookup[k] = &f;

    RunConfig c;
    std::vector<std::string> unknown;
    for (const auto& [sec, body] : tree) {
        if (body.empty()) {
            unknown.push_back(sec);  // key outside any section
            continue;
        }
        for (const auto& [key, val] : body) {
            auto it = lookup.find(sec + "." + key);
            if (it == lookup.end()) {
                unknown.push_back(sec + "." + key);
                continue;
            }
            it->second->set(c, val.get_value<std::string>());
        }
    }
    if (!unknown.empty()) {
        std::string msg = "config: unknown keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw std::domain_error(msg);
    }
    c.grid.T = c.market.T;
    validate(c);
    return c;
}

RunConfig parse_config_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    return parse_config(f);
}

void validate(const RunConfig& c)
{
    validate(c.market);
    validate(c.grid);
    validate(c.train);
    if (c.eval.n_test < 1) throw std::domain_error("config: eval.n_test must be positive");
    if (!(c.policy.tol > 0) || c.policy.max_iter < 1) throw std::domain_error("config: bad policy settings");
    if (c.expansion_m.size() < 2) throw std::domain_error("config: expansion.m_values needs at least two values");
    if (c.output_dir.empty()) throw std::domain_error("config: run.output_dir is empty");
}

std::string serialize(const RunConfig& c, bool with_output)
{
    std::ostringstream os;
    std::string section;
    for (const auto& [k, f] : fields()) {
        auto dot = k.find('.');
        auto sec = k.substr(0, dot);
        if (sec == "run" && !with_output) continue;
        if (sec != section) {
            os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        os << k.substr(dot + 1) << " = " << f.get(c) << '\n';
    }
    return os.str();
}

std::string config_hash(const RunConfig& c)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : serialize(c, false)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace emrl::cli
