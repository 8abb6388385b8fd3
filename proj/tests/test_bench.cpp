#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "oracles.h"
#include "regot/regot.h"

using namespace regot;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream is(path);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle)
{
    std::size_t count = 0, pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos)
    {
        count++;
        pos += needle.size();
    }
    return count;
}

BenchSpec small_spec()
{
    BenchSpec spec;
    spec.gen.kind = "synth2";
    spec.gen.n = 16;
    spec.gen.m = 16;
    spec.eta = 0.01;
    spec.algos = {"sinkhorn", "splr"};
    spec.checkpoints = {5, 10};
    spec.repeats = 2;
    spec.warmup = 0;
    spec.splr.S = 5;
    spec.splr.J = 2;
    return spec;
}

}  // namespace

TEST_CASE("the CSV header is frozen", "[bench]")
{
    REQUIRE(std::string(csv_header()) == "iter,wall_ms,f,marginal_error,duality_gap");
}

TEST_CASE("an empty trace produces a header-only file", "[bench]")
{
    SolverTrace trace;
    trace.algo = "sinkhorn";
    const std::string path = "regot_test_empty.csv";
    emit_csv(trace, path);
    REQUIRE(slurp(path) == "iter,wall_ms,f,marginal_error,duality_gap\n");
    std::remove(path.c_str());
}

TEST_CASE("trace CSV round trips bitwise", "[bench]")
{
    SolverTrace trace;
    trace.append({0, 0.0, 1.0 / 3.0, 0.1234567890123456789, -2.5e-17});
    trace.append({7, 12.5, -1.0 / 7.0, 9.9e-9, 3.0});
    trace.append({9, 12.5, 1e300, 1e-300, 0.0});
    const std::string path = "regot_test_roundtrip.csv";
    emit_csv(trace, path);

    const auto series = parse_report_csv(path);
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].rows.size() == trace.rows.size());
    for (std::size_t r = 0; r < trace.rows.size(); r++)
    {
        const TraceRow& a = trace.rows[r];
        const TraceRow& b = series[0].rows[r];
        REQUIRE(a.iter == b.iter);
        REQUIRE(std::memcmp(&a.wall_ms, &b.wall_ms, sizeof(double)) == 0);
        REQUIRE(std::memcmp(&a.f, &b.f, sizeof(double)) == 0);
        REQUIRE(std::memcmp(&a.marginal_error, &b.marginal_error, sizeof(double)) == 0);
        REQUIRE(std::memcmp(&a.duality_gap, &b.duality_gap, sizeof(double)) == 0);
    }
    std::remove(path.c_str());
}

TEST_CASE("trace invariants are enforced on append", "[bench]")
{
    SolverTrace trace;
    trace.append({3, 5.0, 1.0, 1.0, 0.0});
    REQUIRE_THROWS_AS(trace.append({3, 6.0, 1.0, 1.0, 0.0}), ValidationError);
    REQUIRE_THROWS_AS(trace.append({4, 4.0, 1.0, 1.0, 0.0}), ValidationError);
    trace.append({4, 5.0, 0.9, 1.0, 0.0});
    REQUIRE(trace.rows.size() == 2);
}

TEST_CASE("median conventions", "[bench]")
{
    REQUIRE(detail::median({3.0, 1.0, 2.0}) == 2.0);
    REQUIRE(detail::median({5.0}) == 5.0);
    REQUIRE(detail::median({4.0, 1.0}) == 2.5);
}

TEST_CASE("the benchmark protocol reports deterministic errors and medians", "[bench]")
{
    BenchSpec spec = small_spec();
    const BenchReport report = run_benchmark(spec);
    REQUIRE(report.algos.size() == 2);
    for (const AlgoReport& ar : report.algos)
    {
        REQUIRE(ar.rows.size() == 2);
        for (const CheckpointStat& row : ar.rows)
        {
            REQUIRE(!row.failed);
            REQUIRE(row.samples.size() == 2);
            // error columns identical across repeats; medians equal them
            for (const RepeatSample& s : row.samples)
            {
                REQUIRE(std::memcmp(&s.f, &row.samples[0].f, sizeof(double)) == 0);
                REQUIRE(std::memcmp(&s.marginal_error, &row.samples[0].marginal_error,
                                    sizeof(double)) == 0);
            }
            REQUIRE(row.marginal_error == row.samples[0].marginal_error);
        }
        // more iterations never increase the error for these monotone solvers
        REQUIRE(ar.rows[1].marginal_error <=
                ar.rows[0].marginal_error * (1.0 + 1e-12) + 1e-300);
    }

    // a single repeat's median is the measurement itself
    spec.repeats = 1;
    spec.checkpoints = {5};
    const BenchReport single = run_benchmark(spec);
    for (const AlgoReport& ar : single.algos)
        REQUIRE(ar.rows[0].wall_ms == ar.rows[0].samples[0].wall_ms);
}

TEST_CASE("parallel repeats reproduce the sequential error columns", "[bench]")
{
    BenchSpec spec = small_spec();
    spec.repeats = 3;
    const BenchReport seq = run_benchmark(spec);
    spec.parallel_repeats = true;
    const BenchReport par = run_benchmark(spec);
    for (std::size_t a = 0; a < seq.algos.size(); a++)
        for (std::size_t r = 0; r < seq.algos[a].rows.size(); r++)
        {
            const CheckpointStat& s = seq.algos[a].rows[r];
            const CheckpointStat& q = par.algos[a].rows[r];
            REQUIRE(std::memcmp(&s.marginal_error, &q.marginal_error, sizeof(double)) == 0);
            REQUIRE(std::memcmp(&s.f, &q.f, sizeof(double)) == 0);
            REQUIRE(std::memcmp(&s.duality_gap, &q.duality_gap, sizeof(double)) == 0);
        }
}

TEST_CASE("the duality gap stays below its marginal-error bound at checkpoints", "[bench]")
{
    const BenchSpec spec = small_spec();
    const ProblemInstance p = make_problem(spec.gen, spec.eta);
    for (const std::string& algo : spec.algos)
        for (const long cp : spec.checkpoints)
        {
            const DualPoint x = bench_solve(algo, p, spec.splr, cp);
            const GradientResult gr = fused_gradient(x, p);
            const double bound = std::max(x.alpha.lpNorm<Eigen::Infinity>(),
                                          x.beta.lpNorm<Eigen::Infinity>()) *
                marginal_error(gr, p);
            REQUIRE(std::abs(duality_gap(x, gr, p)) <= bound * (1.0 + 1e-12) + 1e-300);
        }
}

TEST_CASE("report CSV carries one section per algorithm and parses back", "[bench]")
{
    const BenchReport report = run_benchmark(small_spec());
    const std::string path = "regot_test_report.csv";
    emit_csv(report, path);

    const std::string body = slurp(path);
    REQUIRE(body.rfind("iter,wall_ms,f,marginal_error,duality_gap\n", 0) == 0);
    REQUIRE(count_occurrences(body, "# algo=") == 2);

    const auto series = parse_report_csv(path);
    REQUIRE(series.size() == 2);
    REQUIRE(series[0].algo == "sinkhorn");
    REQUIRE(series[1].algo == "splr");
    for (std::size_t s = 0; s < series.size(); s++)
    {
        REQUIRE(series[s].rows.size() == report.algos[s].rows.size());
        for (std::size_t r = 0; r < series[s].rows.size(); r++)
        {
            const CheckpointStat& a = report.algos[s].rows[r];
            const TraceRow& b = series[s].rows[r];
            REQUIRE(a.iter == b.iter);
            REQUIRE(std::memcmp(&a.marginal_error, &b.marginal_error, sizeof(double)) == 0);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("svg plots carry polylines, markers, legend and log values", "[bench]")
{
    std::vector<PlotSeries> series(2);
    series[0].algo = "sinkhorn";
    series[0].rows = {{10, 1.0, 1.0, 1e-2, 5e-3},
                      {20, 2.0, 0.9, 1e-3, 5e-4},
                      {50, 5.0, 0.8, 1e-5, 5e-6}};
    series[1].algo = "splr";
    series[1].rows = {{10, 1.5, 1.0, 1e-4, 5e-5},
                      {20, 3.0, 0.9, 1e-8, 5e-9}};

    const std::string path = "regot_test_plot.svg";
    emit_svg_plot(series, path, PlotMetric::marginal);
    const std::string svg = slurp(path);

    REQUIRE(svg.rfind("<?xml", 0) == 0);
    REQUIRE(svg.find("</svg>") != std::string::npos);
    REQUIRE(count_occurrences(svg, "<polyline") == 2);
    REQUIRE(svg.find(">sinkhorn</text>") != std::string::npos);
    REQUIRE(svg.find(">splr</text>") != std::string::npos);
    REQUIRE(svg.find("wall time (s)") != std::string::npos);
    REQUIRE(svg.find("log10(marginal error)") != std::string::npos);

    // every marker records log10 of its metric value
    std::size_t pos = 0;
    std::vector<double> logged;
    while ((pos = svg.find("data-log10=\"", pos)) != std::string::npos)
    {
        pos += std::strlen("data-log10=\"");
        logged.push_back(std::strtod(svg.c_str() + pos, nullptr));
    }
    std::vector<double> expected;
    for (const auto& s : series)
        for (const auto& r : s.rows)
            expected.push_back(std::log10(r.marginal_error));
    REQUIRE(logged.size() == expected.size());
    for (std::size_t i = 0; i < logged.size(); i++)
        REQUIRE(std::abs(logged[i] - expected[i]) <= 1e-9);
    std::remove(path.c_str());
}

TEST_CASE("a single point still renders a marker", "[bench]")
{
    std::vector<PlotSeries> series(1);
    series[0].algo = "splr";
    series[0].rows = {{10, 3.0, 1.0, 1e-4, 1e-5}};
    const std::string path = "regot_test_single.svg";
    emit_svg_plot(series, path, PlotMetric::dgap);
    const std::string svg = slurp(path);
    REQUIRE(count_occurrences(svg, "<circle") == 1);
    REQUIRE(svg.find("log10|duality gap|") != std::string::npos);
    const std::size_t pos = svg.find("data-log10=\"");
    REQUIRE(pos != std::string::npos);
    const double v = std::strtod(svg.c_str() + pos + std::strlen("data-log10=\""), nullptr);
    REQUIRE(std::abs(v - std::log10(1e-5)) <= 1e-9);
    std::remove(path.c_str());
}

TEST_CASE("failed cells round trip as nan and are skipped by plots", "[bench]")
{
    BenchReport report;
    report.problem = "synth2 8x8";
    report.eta = 0.01;
    AlgoReport ar;
    ar.algo = "splr";
    ar.config_hash = "deadbeef";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ar.rows.push_back({10, false, 1.0, 0.5, 1e-3, 1e-4, {}});
    ar.rows.push_back({20, true, nan, nan, nan, nan, {}});
    report.algos.push_back(ar);

    const std::string path = "regot_test_failedcell.csv";
    emit_csv(report, path);
    const auto series = parse_report_csv(path);
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].rows.size() == 2);
    REQUIRE(std::isnan(series[0].rows[1].marginal_error));

    const std::string svg_path = "regot_test_failedcell.svg";
    emit_svg_plot(series, svg_path, PlotMetric::marginal);
    REQUIRE(count_occurrences(slurp(svg_path), "<circle") == 1);
    std::remove(path.c_str());
    std::remove(svg_path.c_str());
}

TEST_CASE("plots with no finite points are refused", "[bench]")
{
    std::vector<PlotSeries> series(1);
    series[0].algo = "splr";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    series[0].rows = {{10, nan, nan, nan, nan}};
    REQUIRE_THROWS_AS(emit_svg_plot(series, "regot_test_bad.svg", PlotMetric::marginal),
                      PlotError);
    REQUIRE_THROWS_AS(emit_svg_plot({}, "regot_test_bad.svg", PlotMetric::marginal),
                      PlotError);
}

TEST_CASE("bench spec keyfiles parse and validate", "[bench]")
{
    const std::string path = "regot_test_spec.cfg";
    {
        std::ofstream os(path);
        os << "# benchmark configuration\n"
           << "problem = synth2\n"
           << "n = 32\n"
           << "m = 24\n"
           << "eta = 0.005\n"
           << "algo = sinkhorn,splr\n"
           << "checkpoints = 5, 10, 20\n"
           << "repeats = 3\n"
           << "warmup = 1\n"
           << "S = 7\n"
           << "J = 2\n"
           << "density = 0.05\n";
    }
    const BenchSpec spec = parse_bench_spec(path);
    REQUIRE(spec.gen.kind == "synth2");
    REQUIRE(spec.gen.n == 32);
    REQUIRE(spec.gen.m == 24);
    REQUIRE(spec.eta == 0.005);
    REQUIRE(spec.algos == std::vector<std::string>({"sinkhorn", "splr"}));
    REQUIRE(spec.checkpoints == std::vector<long>({5, 10, 20}));
    REQUIRE(spec.repeats == 3);
    REQUIRE(spec.splr.S == 7);
    REQUIRE(spec.splr.J == 2);
    REQUIRE(spec.splr.density == 0.05);
    std::remove(path.c_str());

    {
        std::ofstream os(path);
        os << "problem = synth2\nbogus = 1\n";
    }
    REQUIRE_THROWS_AS(parse_bench_spec(path), ValidationError);
    std::remove(path.c_str());

    {
        std::ofstream os(path);
        os << "problem = synth2\ncheckpoints = 10,5\n";
    }
    REQUIRE_THROWS_AS(parse_bench_spec(path), ValidationError);
    std::remove(path.c_str());
}

TEST_CASE("benchmark spec invariants", "[bench]")
{
    BenchSpec spec = small_spec();
    spec.repeats = 0;
    REQUIRE_THROWS_AS(spec.validate(), ValidationError);
    spec = small_spec();
    spec.checkpoints.clear();
    REQUIRE_THROWS_AS(spec.validate(), ValidationError);
    spec = small_spec();
    spec.algos = {"greenkhorn"};
    REQUIRE_THROWS_AS(spec.validate(), ValidationError);
}
