// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

// Batch front end. Exit codes: 0 ok, 1 domain failure, 2 config/parse/checksum
// error, 3 internal invariant breach.

#include <oppai/costmodel.hpp>
#include <oppai/econ.hpp>
#include <oppai/error.hpp>
#include <oppai/workflow.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;
using namespace oppai;

namespace
{
constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kConfig = 2;
constexpr int kInvariant = 3;

struct ConfigError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json load_json(const std::string& path)
{
    try
    {
        return nlohmann::json::parse(slurp(path));
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ConfigError(path + ": " + e.what());
    }
}

void emit(const std::string& out, const std::string& text)
{
    if (out.empty() || out == "-")
    {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write " + out);
    f << text;
}

// "3/4", "0.25" or "12".
Rational parse_rational(const std::string& s)
{
    static const std::regex frac(R"(^(-?\d+)/(\d+)$)");
    static const std::regex dec(R"(^(-?)(\d+)(?:\.(\d+))?$)");
    std::smatch m;
    using boost::multiprecision::cpp_int;
    auto integer = [](const std::string& digits) {
        const auto nz = digits.find_first_not_of('0');
        return cpp_int(nz == std::string::npos ? "0" : digits.substr(nz));
    };
    if (std::regex_match(s, m, frac))
    {
        const std::string num = m[1].str();
        const bool neg = num[0] == '-';
        const cpp_int n = integer(neg ? num.substr(1) : num), d = integer(m[2].str());
        if (d == 0)
            throw ConfigError("zero denominator in '" + s + "'");
        return Rational(neg ? cpp_int(-n) : n, d);
    }
    if (std::regex_match(s, m, dec))
    {
        Rational v(integer(m[2].str()));
        if (m[3].matched)
        {
            cpp_int den = 1;
            for (size_t i = 0; i < m[3].str().size(); ++i)
                den *= 10;
            v += Rational(integer(m[3].str()), den);
        }
        return m[1].str() == "-" ? Rational(-v) : v;
    }
    throw ConfigError("not a number: '" + s + "'");
}

nlohmann::json rational_json(const Rational& r)
{
    return {{"exact", r.str()}, {"value", to_double(r)}};
}

std::string dump(const nlohmann::json& j)
{
    return j.dump(2) + "\n";
}

struct SimulateOpts
{
    std::string config, out, transcript, sweep, values;
    std::optional<uint64_t> seed, challenge_period, deadline;
};

int simulate(const SimulateOpts& o)
{
    nlohmann::json j = load_json(o.config);
    if (!j.is_object())
        throw ConfigError(o.config + ": scenario must be a JSON object");
    if (o.seed)
        j["seed"] = *o.seed;
    if (o.challenge_period)
        j["chain"]["challenge_period"] = *o.challenge_period;
    if (o.deadline)
        j["chain"]["move_deadline"] = *o.deadline;

    if (!o.sweep.empty())
    {
        nlohmann::json values;
        try
        {
            values = nlohmann::json::parse(o.values);
        }
        catch (const nlohmann::json::parse_error& e)
        {
            throw ConfigError(std::string("--values: ") + e.what());
        }
        if (!values.is_array())
            throw ConfigError("--values must be a JSON array");
        const auto reports = run_matrix(j, Sweep{o.sweep, values.get<std::vector<nlohmann::json>>()});
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : reports)
            arr.push_back(to_json(r));
        emit(o.out, dump(arr));
        return kOk;
    }

    const Scenario s = scenario_from_json(j);
    const ScenarioReport r = run_scenario(s);
    emit(o.out, dump(to_json(r)));
    if (!o.transcript.empty())
        emit(o.transcript, r.log_jsonl);
    return kOk;
}

struct PlanOpts
{
    std::string config, out, data, framework, budget, target_cost;
    std::string c = "1", n_per_unit = "1";
};

int plan_cmd(const PlanOpts& o)
{
    const SizeMetric metric = metric_from_json(load_json(o.config));
    PlanRequest req;
    req.metric = metric;
    req.framework = o.framework.empty() ? framework_for(metric.kind) : framework_from_string(o.framework);
    if (!o.budget.empty() && o.budget != "inf")
    {
        const Rational b = parse_rational(o.budget);
        if (b < 0)
            throw ConfigError("--budget must be non-negative");
        req.budget_bytes = static_cast<uint64_t>(b.convert_to<boost::multiprecision::cpp_int>());
    }
    if (!o.target_cost.empty())
        req.target_cost = parse_rational(o.target_cost);
    req.price = parse_rational(o.c);
    req.inferences_per_unit = parse_rational(o.n_per_unit);
    const auto rows = load_table1(fs::path(o.data) / "table1.csv");
    nlohmann::json j = to_json(plan(rows, req));
    j["framework"] = to_string(req.framework);
    j["budget_bytes"] = req.budget_bytes ? nlohmann::json(*req.budget_bytes) : nlohmann::json("inf");
    emit(o.out, dump(j));
    return kOk;
}

struct AttackOpts
{
    std::string out, c = "0", n_per_unit = "1", x = "1", p = "0", target_cost;
};

int attack_cmd(const AttackOpts& o)
{
    const EconParams e{parse_rational(o.c), parse_rational(o.n_per_unit), parse_rational(o.x), parse_rational(o.p)};
    nlohmann::json j{{"params", to_json(e)}, {"attack_cost", rational_json(attack_cost(e))},
        {"extraction_threshold", rational_json(extraction_threshold(e))}};
    if (const auto w = attack_cost_warning(e))
        j["warning"] = *w;
    if (!o.target_cost.empty())
        j["price_for_target"] =
            rational_json(price_for_constant_cost(parse_rational(o.target_cost), e.inferences_per_unit, e.x, e.p));
    emit(o.out, dump(j));
    return kOk;
}

struct BenchOpts
{
    std::string out, csv, data, framework = "ezkl";
};

int bench_cmd(const BenchOpts& o)
{
    const Framework f = framework_from_string(o.framework);
    const auto rows = load_table1(fs::path(o.data) / "table1.csv");
    const auto targets = load_table2(fs::path(o.data) / "table2.csv");
    emit(o.out, dump(bench_report(rows, targets, f)));
    if (!o.csv.empty())
        emit(o.csv, fraction_csv(fraction_series(rows, f)));
    return kOk;
}

struct EnumerateOpts
{
    std::string config, out;
    size_t max_layers = 16;
};

// Every zk/op labelling of the layers, normalized, with its zk proportion.
int enumerate_cmd(const EnumerateOpts& o)
{
    const SizeMetric metric = metric_from_json(load_json(o.config));
    const size_t L = metric.values.size();
    if (L == 0 || L > o.max_layers)
        throw ConfigError("enumeration needs 1.." + std::to_string(o.max_layers) + " layers, metric has " +
                          std::to_string(L));
    nlohmann::json arr = nlohmann::json::array();
    for (uint64_t mask = 0; mask < (uint64_t{1} << L); ++mask)
    {
        PartitionSpec spec;
        for (size_t i = 0; i < L; ++i)
            spec.cuts.push_back(Cut{i, 1, (mask >> i) & 1 ? Tag::Zk : Tag::Op});
        const PartitionSpec n = normalize(spec, L);
        std::string labels;
        for (size_t i = 0; i < L; ++i)
            labels += (mask >> i) & 1 ? 'z' : 'o';
        const Rational p = zk_proportion(n, metric);
        arr.push_back({{"layers", labels}, {"pairs", pair_count(n, L)}, {"p", rational_json(p)},
            {"partition", to_json(n)}});
    }
    emit(o.out, dump(arr));
    return kOk;
}

int guarded(const std::function<int()>& body)
{
    try
    {
        return body();
    }
    catch (const ConfigError& e)
    {
        std::cerr << "oppai: " << e.what() << "\n";
        return kConfig;
    }
    catch (const Error& e)
    {
        std::cerr << "oppai: " << e.what() << "\n";
        switch (e.code())
        {
            case Errc::ScenarioInvalid:
            case Errc::ParseError:
            case Errc::ChecksumMismatch:
            case Errc::InvalidPartition:
                return kConfig;
            case Errc::InvariantBreach:
                return kInvariant;
            default:
                return kDomain;
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        std::cerr << "oppai: malformed configuration: " << e.what() << "\n";
        return kConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "oppai: internal error: " << e.what() << "\n";
        return kInvariant;
    }
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"opp/ai hybrid verification simulator and planning toolkit"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* s = app.add_subcommand("simulate", "run a scenario on the simulated chain");
    s->add_option("--config", sim.config, "scenario JSON")->required();
    s->add_option("--out", sim.out, "report path (default stdout)");
    s->add_option("--seed", sim.seed, "override the scenario seed");
    s->add_option("--transcript", sim.transcript, "write the public event log (JSONL)");
    s->add_option("--challenge-period", sim.challenge_period, "override chain.challenge_period");
    s->add_option("--deadline", sim.deadline, "override chain.move_deadline");
    s->add_option("--sweep", sim.sweep, "top-level scenario key to sweep");
    s->add_option("--values", sim.values, "JSON array of values for --sweep");

    PlanOpts pl;
    pl.data = OPPAI_DATA_DIR;
    auto* p = app.add_subcommand("plan", "recommend a zk prefix under a memory budget");
    p->add_option("--config", pl.config, "size metric JSON")->required();
    p->add_option("--out", pl.out, "output path (default stdout)");
    p->add_option("--framework", pl.framework, "circom or ezkl (default from metric kind)");
    p->add_option("--budget", pl.budget, "memory budget in bytes, or inf");
    p->add_option("--target-cost", pl.target_cost, "attack cost to price for");
    p->add_option("--c", pl.c, "price per inference");
    p->add_option("--n-per-unit", pl.n_per_unit, "inferences per unit of model size");
    p->add_option("--data", pl.data, "directory with table1.csv");
    p->add_option("--seed", "accepted for uniformity; plan is not randomized");

    AttackOpts at;
    auto* a = app.add_subcommand("attack-cost", "c * n * (1 - p) * x");
    a->add_option("--out", at.out, "output path (default stdout)");
    a->add_option("--c", at.c, "price per inference");
    a->add_option("--n-per-unit", at.n_per_unit, "inferences per unit of model size");
    a->add_option("--x", at.x, "model size");
    a->add_option("--p", at.p, "zk proportion");
    a->add_option("--target-cost,--target", at.target_cost, "also report the price reaching this cost");

    BenchOpts be;
    be.data = OPPAI_DATA_DIR;
    auto* b = app.add_subcommand("bench-report", "fraction series and Table 2 extrapolation");
    b->add_option("--out", be.out, "JSON report path (default stdout)");
    b->add_option("--csv", be.csv, "fraction series CSV path");
    b->add_option("--framework", be.framework, "circom or ezkl")->check(CLI::IsMember({"circom", "ezkl"}));
    b->add_option("--data", be.data, "directory with table1.csv and table2.csv");
    b->add_option("--config", "accepted for uniformity; the bundled tables are the input");

    EnumerateOpts en;
    auto* e = app.add_subcommand("enumerate-partitions", "all zk/op labellings of a small model");
    e->add_option("--config", en.config, "size metric JSON")->required();
    e->add_option("--out", en.out, "output path (default stdout)");
    e->add_option("--max-layers", en.max_layers, "refuse larger models");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& err)
    {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kConfig;
    }

    if (*s)
        return guarded([&] { return simulate(sim); });
    if (*p)
        return guarded([&] { return plan_cmd(pl); });
    if (*a)
        return guarded([&] { return attack_cmd(at); });
    if (*b)
        return guarded([&] { return bench_cmd(be); });
    return guarded([&] { return enumerate_cmd(en); });
}
