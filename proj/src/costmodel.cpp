// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/costmodel.hpp>
#include <oppai/error.hpp>
#include <oppai/hash.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

namespace oppai
{
namespace
{
std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    size_t start = 0;
    for (;;)
    {
        const size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

std::vector<std::string> lines_of(std::string_view text)
{
    std::vector<std::string> out;
    for (auto& l : split(text, '\n'))
    {
        if (!l.empty() && l.back() == '\r')
            l.pop_back();
        if (!l.empty())
            out.push_back(std::move(l));
    }
    return out;
}

uint64_t parse_u64(const std::string& s, std::string_view what)
{
    uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
        throw Error(Errc::ParseError, std::string(what) + ": not an unsigned integer: '" + s + "'");
    return v;
}

// Decimal literal such as "180" or "0.5".
Rational parse_decimal(const std::string& s, std::string_view what)
{
    static const std::regex re(R"(^(\d+)(?:\.(\d+))?$)");
    std::smatch m;
    if (!std::regex_match(s, m, re))
        throw Error(Errc::ParseError, std::string(what) + ": not a decimal: '" + s + "'");
    Rational v(parse_u64(m[1].str(), what));
    if (m[2].matched)
    {
        boost::multiprecision::cpp_int den = 1;
        for (size_t i = 0; i < m[2].str().size(); ++i)
            den *= 10;
        v += Rational(boost::multiprecision::cpp_int(parse_u64(m[2].str(), what)), den);
    }
    return v;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::ParseError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Rational rel_delta(const Rational& got, const Rational& want)
{
    return (got - want) / want;
}
}  // namespace

std::string_view to_string(Framework f) noexcept
{
    return f == Framework::Circom ? "circom" : "ezkl";
}

Framework framework_from_string(std::string_view s)
{
    if (s == "circom")
        return Framework::Circom;
    if (s == "ezkl")
        return Framework::Ezkl;
    throw Error(Errc::ParseError, "unknown framework '" + std::string(s) + "'");
}

Rational parse_duration(std::string_view text)
{
    static const std::regex re(R"(^(\d+):([0-5]\d)\.(\d{1,9})$)");
    const std::string s(text);
    std::smatch m;
    if (!std::regex_match(s, m, re))
        throw Error(Errc::ParseError, "duration must be mm:ss.xx, got '" + s + "'");
    return Rational(parse_u64(m[1].str(), "minutes") * 60) + parse_decimal(m[2].str() + "." + m[3].str(), "seconds");
}

std::vector<BenchRow> ingest_table1(std::string_view csv)
{
    static const char* kHeader = "layer,circom_constraints,circom_time,circom_mem_kb,ezkl_rows,ezkl_time,ezkl_mem_kb,tf_time_ns";
    const auto lines = lines_of(csv);
    if (lines.empty() || lines[0] != kHeader)
        throw Error(Errc::ParseError, "table 1 header mismatch");
    std::vector<BenchRow> rows;
    for (size_t i = 1; i < lines.size(); ++i)
    {
        const auto f = split(lines[i], ',');
        if (f.size() != 8)
            throw Error(Errc::ParseError, "line " + std::to_string(i + 1) + ": expected 8 fields");
        BenchRow r;
        r.layer = f[0];
        r.circom = {parse_u64(f[1], "circom_constraints"), parse_duration(f[2]), parse_u64(f[3], "circom_mem_kb")};
        r.ezkl = {parse_u64(f[4], "ezkl_rows"), parse_duration(f[5]), parse_u64(f[6], "ezkl_mem_kb")};
        r.native_time_ns = parse_u64(f[7], "tf_time_ns");
        if (!rows.empty() && (r.circom.size < rows.back().circom.size || r.ezkl.size < rows.back().ezkl.size))
            throw Error(Errc::MonotonicityViolation, "cumulative size decreases at line " + std::to_string(i + 1));
        rows.push_back(std::move(r));
    }
    if (rows.empty())
        throw Error(Errc::ParseError, "table 1 has no rows");
    return rows;
}

std::string read_checked(const std::filesystem::path& path)
{
    const std::string body = read_file(path);
    auto sidecar = path;
    sidecar += ".sha256";
    const std::string sum = read_file(sidecar);
    const std::string want = sum.substr(0, std::min<size_t>(64, sum.size()));
    const std::string got = to_hex(sha256(body));
    if (want != got)
        throw Error(Errc::ChecksumMismatch, path.string() + ": sha256 " + got + " does not match " + want);
    return body;
}

std::vector<BenchRow> load_table1(const std::filesystem::path& path)
{
    return ingest_table1(read_checked(path));
}

Rational sum_squared_residuals(const std::vector<Point>& pts, const Rational& slope, const Rational& intercept)
{
    Rational s = 0;
    for (const auto& p : pts)
    {
        const Rational r = p.y - (slope * p.x + intercept);
        s += r * r;
    }
    return s;
}

LinearFit fit_linear(const std::vector<Point>& pts)
{
    if (pts.size() < 2)
        throw Error(Errc::Degenerate, "need at least two points");
    Rational sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts)
    {
        sx += p.x;
        sy += p.y;
        sxx += p.x * p.x;
        sxy += p.x * p.y;
    }
    const Rational n(static_cast<long long>(pts.size()));
    const Rational den = n * sxx - sx * sx;
    if (den == 0)
        throw Error(Errc::Degenerate, "all sizes are equal");
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.n = pts.size();
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.x < b.x; });
    fit.x_min = lo->x;
    fit.x_max = hi->x;
    fit.sse = sum_squared_residuals(pts, fit.slope, fit.intercept);
    return fit;
}

FrameworkFits fit_framework(const std::vector<BenchRow>& rows, Framework f)
{
    std::vector<Point> t, m;
    for (const auto& r : rows)
    {
        const auto& c = r.cost(f);
        t.push_back({Rational(c.size), c.time_s});
        m.push_back({Rational(c.size), Rational(c.mem_kb)});
    }
    return {fit_linear(t), fit_linear(m)};
}

std::vector<ExtrapolationTarget> ingest_table2(std::string_view csv)
{
    const auto lines = lines_of(csv);
    if (lines.empty() || lines[0] != "name,input_shape,params,rows,rows_given,memory_tb,time_h")
        throw Error(Errc::ParseError, "table 2 header mismatch");
    std::vector<ExtrapolationTarget> out;
    for (size_t i = 1; i < lines.size(); ++i)
    {
        const auto f = split(lines[i], ',');
        if (f.size() != 7)
            throw Error(Errc::ParseError, "table 2 line " + std::to_string(i + 1) + ": expected 7 fields");
        ExtrapolationTarget t;
        t.name = f[0];
        t.input_shape = f[1];
        t.params = parse_u64(f[2], "params");
        const uint64_t rows = parse_u64(f[3], "rows");
        if (f[4] == "1")
            t.rows = rows;
        else if (f[4] == "0")
            t.reported_rows = rows;
        else
            throw Error(Errc::ParseError, "rows_given must be 0 or 1");
        t.reported_memory_tb = parse_decimal(f[5], "memory_tb");
        t.reported_time_h = parse_decimal(f[6], "time_h");
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<ExtrapolationTarget> load_table2(const std::filesystem::path& path)
{
    return ingest_table2(read_checked(path));
}

Rational mean_rows_per_param(const std::vector<ExtrapolationTarget>& targets)
{
    Rational sum = 0;
    long long n = 0;
    for (const auto& t : targets)
        if (t.rows && t.params > 0)
        {
            sum += Rational(*t.rows) / Rational(t.params);
            ++n;
        }
    if (n == 0)
        throw Error(Errc::Degenerate, "no target with given rows");
    return sum / n;
}

Prediction extrapolate(const LinearFit& time_s, const LinearFit& mem_kb, const ExtrapolationTarget& t,
    const Rational& mean_ratio)
{
    Prediction p;
    p.name = t.name;
    p.rows_derived = !t.rows.has_value();
    p.rows = t.rows ? Rational(*t.rows) : Rational(t.params) * mean_ratio;
    p.time_h = time_s.predict(p.rows) / 3600;
    p.memory_tb = mem_kb.predict(p.rows) / kKbPerTb;
    return p;
}

std::vector<Prediction> extrapolate_all(const FrameworkFits& fits, const std::vector<ExtrapolationTarget>& targets)
{
    const Rational ratio = mean_rows_per_param(targets);
    std::vector<Prediction> out;
    for (const auto& t : targets)
        out.push_back(extrapolate(fits.time_s, fits.mem_kb, t, ratio));
    return out;
}

FractionReport fraction_report(const std::vector<BenchRow>& rows, Framework f, size_t k)
{
    if (k < 1 || k > rows.size())
        throw Error(Errc::UnknownPrefix, "prefix " + std::to_string(k) + " not in 1.." + std::to_string(rows.size()));
    const auto& full = rows.back().cost(f);
    const auto& pre = rows[k - 1].cost(f);
    uint64_t max_mem = 0;
    for (const auto& r : rows)
        max_mem = std::max(max_mem, r.cost(f).mem_kb);
    const uint64_t native_ns = rows.back().native_time_ns;
    const Rational native_s(native_ns, 1000000000);
    FractionReport r;
    r.prefix_rows = k;
    r.layer = rows[k - 1].layer;
    r.p = Rational(pre.size) / Rational(full.size);
    r.time_fraction = (pre.time_s + native_s) / (full.time_s + native_s);
    r.memory_fraction = Rational(pre.mem_kb) / Rational(max_mem);
    r.opml_native_time_ns = native_ns;
    return r;
}

std::vector<FractionReport> fraction_series(const std::vector<BenchRow>& rows, Framework f)
{
    std::vector<FractionReport> out;
    for (size_t k = 1; k <= rows.size(); ++k)
        out.push_back(fraction_report(rows, f, k));
    return out;
}

double to_double(const Rational& r)
{
    return r.convert_to<double>();
}

std::string fraction_csv(const std::vector<FractionReport>& series)
{
    std::ostringstream os;
    os << "prefix,layer,p,time_fraction,memory_fraction\n" << std::setprecision(17);
    for (const auto& r : series)
        os << r.prefix_rows << ',' << r.layer << ',' << to_double(r.p) << ',' << to_double(r.time_fraction) << ','
           << to_double(r.memory_fraction) << '\n';
    return os.str();
}

SizeMetric table_metric(const std::vector<BenchRow>& rows, Framework f)
{
    if (rows.size() != 5)
        throw Error(Errc::ParseError, "reference layout needs 5 table rows");
    // Conv, Pool, Conv, Pool, Flatten, Dense; Flatten shares the second Pool row.
    static constexpr size_t kRowOf[6] = {0, 1, 2, 3, 3, 4};
    SizeMetric m;
    m.kind = f == Framework::Circom ? MetricKind::Constraints : MetricKind::Rows;
    uint64_t prev = 0;
    for (size_t row : kRowOf)
    {
        const uint64_t cum = rows[row].cost(f).size;
        m.values.push_back(cum - prev);
        prev = cum;
    }
    return m;
}

Framework framework_for(MetricKind kind)
{
    switch (kind)
    {
        case MetricKind::Constraints:
            return Framework::Circom;
        case MetricKind::Rows:
            return Framework::Ezkl;
        default:
            throw Error(Errc::ParseError, "no benchmark framework measures " + std::string(to_string(kind)));
    }
}

PlanReport plan(const std::vector<BenchRow>& rows, const PlanRequest& req)
{
    const uint64_t total = req.metric.total();
    if (total == 0)
        throw Error(Errc::ZeroTotal, "metric total is zero");
    const FrameworkFits fits = fit_framework(rows, req.framework);

    PlanReport rep;
    uint64_t cum = 0;
    std::optional<size_t> best;
    for (size_t k = 1; k <= req.metric.values.size(); ++k)
    {
        cum += req.metric.values[k - 1];
        PlanCandidate c;
        c.zk_layers = k;
        c.cumulative_size = cum;
        c.p = Rational(cum) / Rational(total);
        const auto match = std::find_if(rows.begin(), rows.end(),
            [&](const BenchRow& r) { return r.cost(req.framework).size == cum; });
        if (match != rows.end() && req.metric.kind == (req.framework == Framework::Circom ? MetricKind::Constraints
                                                                                           : MetricKind::Rows))
        {
            c.measured = true;
            c.time_s = match->cost(req.framework).time_s;
            c.mem_kb = Rational(match->cost(req.framework).mem_kb);
        }
        else
        {
            c.time_s = fits.time_s.predict(Rational(cum));
            c.mem_kb = fits.mem_kb.predict(Rational(cum));
        }
        const EconParams e{req.price, req.inferences_per_unit, Rational(total), c.p};
        c.attack_cost = attack_cost(e);
        if (req.target_cost && c.p != 1)
            c.price_for_target = price_for_constant_cost(*req.target_cost, req.inferences_per_unit, Rational(total), c.p);
        c.feasible = !req.budget_bytes || c.mem_kb * 1000 <= Rational(*req.budget_bytes);
        if (c.feasible && (!best || c.p >= rep.candidates[*best].p))
            best = rep.candidates.size();
        rep.candidates.push_back(std::move(c));
    }
    if (!best)
        throw Error(Errc::NoFeasiblePrefix, "no prefix fits the memory budget");
    rep.recommended = *best;
    return rep;
}

nlohmann::json to_json(const LinearFit& f)
{
    return {{"slope", to_double(f.slope)}, {"intercept", to_double(f.intercept)}, {"x_min", to_double(f.x_min)},
        {"x_max", to_double(f.x_max)}, {"n", f.n}, {"sse", to_double(f.sse)}};
}

nlohmann::json to_json(const FractionReport& r)
{
    return {{"prefix", r.prefix_rows}, {"layer", r.layer}, {"p", to_double(r.p)},
        {"time_fraction", to_double(r.time_fraction)}, {"memory_fraction", to_double(r.memory_fraction)},
        {"opml_native_time_ns", r.opml_native_time_ns}};
}

nlohmann::json to_json(const PlanReport& r)
{
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : r.candidates)
    {
        nlohmann::json j{{"zk_layers", c.zk_layers}, {"p", to_double(c.p)}, {"cumulative_size", c.cumulative_size},
            {"time_s", to_double(c.time_s)}, {"memory_bytes", to_double(c.mem_kb * 1000)}, {"measured", c.measured},
            {"attack_cost", to_double(c.attack_cost)}, {"feasible", c.feasible}};
        if (c.price_for_target)
            j["price_for_target"] = to_double(*c.price_for_target);
        cands.push_back(std::move(j));
    }
    return {{"candidates", cands}, {"recommended", r.candidates.at(r.recommended).zk_layers}};
}

nlohmann::json bench_report(const std::vector<BenchRow>& rows, const std::vector<ExtrapolationTarget>& targets,
    Framework f)
{
    nlohmann::json series = nlohmann::json::array();
    for (const auto& r : fraction_series(rows, f))
        series.push_back(to_json(r));

    const FrameworkFits ezkl = fit_framework(rows, Framework::Ezkl);
    const Rational ratio = mean_rows_per_param(targets);
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& t : targets)
    {
        const Prediction p = extrapolate(ezkl.time_s, ezkl.mem_kb, t, ratio);
        nlohmann::json j{{"name", p.name}, {"params", t.params}, {"rows", to_double(p.rows)},
            {"rows_derived", p.rows_derived}, {"time_h", to_double(p.time_h)}, {"memory_tb", to_double(p.memory_tb)},
            {"reported_time_h", to_double(t.reported_time_h)}, {"reported_memory_tb", to_double(t.reported_memory_tb)},
            {"delta_time", to_double(rel_delta(p.time_h, t.reported_time_h))},
            {"delta_memory", to_double(rel_delta(p.memory_tb, t.reported_memory_tb))}};
        if (t.reported_rows)
            j["delta_rows"] = to_double(rel_delta(p.rows, Rational(*t.reported_rows)));
        preds.push_back(std::move(j));
    }
    return {{"framework", to_string(f)}, {"fractions", series},
        {"fits", {{"ezkl_time_s", to_json(ezkl.time_s)}, {"ezkl_mem_kb", to_json(ezkl.mem_kb)}}},
        {"mean_rows_per_param", to_double(ratio)}, {"table2", preds}};
}
}  // namespace oppai
