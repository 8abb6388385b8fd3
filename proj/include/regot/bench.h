#ifndef REGOT_BENCH_H
#define REGOT_BENCH_H

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "core.h"
#include "problem.h"
#include "sinkhorn.h"
#include "splr.h"
#include "trace.h"

namespace regot {

inline const char* csv_header()
{
    return "iter,wall_ms,f,marginal_error,duality_gap";
}

namespace detail {

// 17 significant digits: enough for a bit-exact strtod round trip
inline std::string fmt_g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s)
{
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true)
    {
        const std::size_t nxt = s.find(sep, pos);
        if (nxt == std::string::npos)
        {
            out.push_back(trim(s.substr(pos)));
            break;
        }
        out.push_back(trim(s.substr(pos, nxt - pos)));
        pos = nxt + 1;
    }
    return out;
}

inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

struct BenchSpec
{
    GeneratorSpec gen;
    double eta = 0.001;
    std::vector<std::string> algos{"sinkhorn", "splr"};
    SplrConfig splr;
    std::vector<long> checkpoints{10, 20, 50, 100};
    long repeats = 10;
    long warmup = 1;
    bool parallel_repeats = false;  // concurrent repeats; timings not comparable

    void validate() const
    {
        if (repeats < 1)
            throw ValidationError("BenchSpec: repeats must be >= 1");
        if (warmup < 0)
            throw ValidationError("BenchSpec: warmup must be >= 0");
        if (checkpoints.empty())
            throw ValidationError("BenchSpec: need at least one checkpoint");
        for (std::size_t i = 0; i < checkpoints.size(); i++)
        {
            if (checkpoints[i] < 1)
                throw ValidationError("BenchSpec: checkpoints must be >= 1");
            if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
                throw ValidationError("BenchSpec: checkpoints must be strictly increasing");
        }
        if (algos.empty())
            throw ValidationError("BenchSpec: need at least one algorithm");
        for (const auto& a : algos)
        {
            if (a != "sinkhorn" && a != "splr")
                throw ValidationError("BenchSpec: unknown algorithm '" + a + "'");
            if (a == "splr")
                splr.validate();
        }
    }
};

struct RepeatSample
{
    double wall_ms = 0.0;
    double f = 0.0;
    double marginal_error = 0.0;
    double duality_gap = 0.0;
};

struct CheckpointStat
{
    long iter = 0;
    bool failed = false;
    double wall_ms = 0.0;  // medians across repeats
    double f = 0.0;
    double marginal_error = 0.0;
    double duality_gap = 0.0;
    std::vector<RepeatSample> samples;
};

struct AlgoReport
{
    std::string algo;
    std::string config_hash;
    std::vector<CheckpointStat> rows;
};

struct BenchReport
{
    std::string problem;
    double eta = 0.0;
    std::vector<AlgoReport> algos;
};

// One solver run for exactly `iters` iterations (tolerance zero), returning
// the final dual point. Timing is the caller's business.
inline DualPoint bench_solve(const std::string& algo, const ProblemInstance& p,
                             const SplrConfig& splr_cfg, long iters)
{
    if (algo == "sinkhorn")
    {
        SinkhornConfig c;
        c.max_iter = iters;
        c.record_every = iters;
        c.tol = 0.0;
        return run_sinkhorn(DualPoint::zeros(p.n, p.m), p, c).x;
    }
    SplrConfig c = splr_cfg;
    c.max_iter = iters;
    c.record_every = iters;
    c.tol = 0.0;
    return run_splr(DualPoint::zeros(p.n, p.m), p, c).x;
}

// Experimental protocol: per algorithm and checkpoint, run for exactly that
// many iterations, `repeats` times after `warmup` discarded runs, and report
// the medians. A solver failure marks the cell failed and the benchmark
// moves on.
inline BenchReport run_benchmark(const BenchSpec& spec)
{
    spec.validate();
    const ProblemInstance p = make_problem(spec.gen, spec.eta);

    BenchReport report;
    report.problem = describe(spec.gen);
    report.eta = p.eta;

    using clock = std::chrono::steady_clock;
    for (const std::string& algo : spec.algos)
    {
        AlgoReport ar;
        ar.algo = algo;
        ar.config_hash = (algo == "splr") ? splr_config_hash(spec.splr)
                                          : std::string("sinkhorn");
        for (const long cp : spec.checkpoints)
        {
            CheckpointStat stat;
            stat.iter = cp;
            try
            {
                for (long w = 0; w < spec.warmup; w++)
                    bench_solve(algo, p, spec.splr, cp);
                auto one_repeat = [&]() {
                    const auto t0 = clock::now();
                    const DualPoint x = bench_solve(algo, p, spec.splr, cp);
                    const double wall =
                        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
                    const GradientResult gr = fused_gradient(x, p);
                    return RepeatSample{wall, gr.f, marginal_error(gr, p),
                                        duality_gap(x, gr, p)};
                };
                if (spec.parallel_repeats)
                {
                    // property runs only: errors stay deterministic, wall
                    // times reflect contention
                    std::vector<std::future<RepeatSample>> futs;
                    for (long r = 0; r < spec.repeats; r++)
                        futs.push_back(std::async(std::launch::async, one_repeat));
                    for (auto& f : futs)
                        stat.samples.push_back(f.get());
                } else {
                    for (long r = 0; r < spec.repeats; r++)
                        stat.samples.push_back(one_repeat());
                }
                std::vector<double> walls, fs, errs, gaps;
                for (const auto& s : stat.samples)
                {
                    walls.push_back(s.wall_ms);
                    fs.push_back(s.f);
                    errs.push_back(s.marginal_error);
                    gaps.push_back(s.duality_gap);
                }
                stat.wall_ms = detail::median(walls);
                stat.f = detail::median(fs);
                stat.marginal_error = detail::median(errs);
                stat.duality_gap = detail::median(gaps);
            }
            catch (const Error&)
            {
                stat.failed = true;
                const double nan = std::numeric_limits<double>::quiet_NaN();
                stat.wall_ms = stat.f = stat.marginal_error = stat.duality_gap = nan;
            }
            ar.rows.push_back(std::move(stat));
        }
        report.algos.push_back(std::move(ar));
    }
    return report;
}

// Trace CSV: fixed header, one row per record
inline void emit_csv(const SolverTrace& trace, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("emit_csv: cannot open " + path);
    os << csv_header() << "\n";
    for (const TraceRow& r : trace.rows)
        os << r.iter << "," << detail::fmt_g17(r.wall_ms) << ","
           << detail::fmt_g17(r.f) << "," << detail::fmt_g17(r.marginal_error)
           << "," << detail::fmt_g17(r.duality_gap) << "\n";
    os.flush();
    if (!os)
        throw IoError("emit_csv: write failed for " + path);
}

// Report CSV: same schema; algorithms are separated by comment lines of the
// form "# algo=<name> ...", one row per checkpoint with iter = checkpoint
inline void emit_csv(const BenchReport& report, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("emit_csv: cannot open " + path);
    os << csv_header() << "\n";
    for (const AlgoReport& ar : report.algos)
    {
        os << "# algo=" << ar.algo << " problem=" << report.problem
           << " eta=" << detail::fmt_g17(report.eta)
           << " config=" << ar.config_hash << "\n";
        for (const CheckpointStat& r : ar.rows)
            os << r.iter << "," << detail::fmt_g17(r.wall_ms) << ","
               << detail::fmt_g17(r.f) << "," << detail::fmt_g17(r.marginal_error)
               << "," << detail::fmt_g17(r.duality_gap) << "\n";
    }
    os.flush();
    if (!os)
        throw IoError("emit_csv: write failed for " + path);
}

struct PlotSeries
{
    std::string algo;
    std::vector<TraceRow> rows;
};

// Reads trace or report CSVs; "# algo=" comments open a new series, rows
// before any comment go to a series named "trace"
inline std::vector<PlotSeries> parse_report_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("parse_report_csv: cannot open " + path);
    std::string line;
    if (!std::getline(is, line))
        throw FormatError("parse_report_csv: empty file");
    if (detail::trim(line) != csv_header())
        throw FormatError("parse_report_csv: unexpected header");

    std::vector<PlotSeries> series;
    while (std::getline(is, line))
    {
        const std::string t = detail::trim(line);
        if (t.empty())
            continue;
        if (t[0] == '#')
        {
            const std::size_t pos = t.find("algo=");
            if (pos != std::string::npos)
            {
                std::size_t end = t.find(' ', pos);
                if (end == std::string::npos)
                    end = t.size();
                series.push_back({t.substr(pos + 5, end - pos - 5), {}});
            }
            continue;
        }
        const std::vector<std::string> parts = detail::split(t, ',');
        if (parts.size() != 5)
            throw FormatError("parse_report_csv: malformed row '" + t + "'");
        if (series.empty())
            series.push_back({"trace", {}});
        TraceRow r;
        try
        {
            r.iter = std::stol(parts[0]);
        }
        catch (const std::exception&)
        {
            throw FormatError("parse_report_csv: bad iteration field '" + parts[0] + "'");
        }
        r.wall_ms = std::strtod(parts[1].c_str(), nullptr);
        r.f = std::strtod(parts[2].c_str(), nullptr);
        r.marginal_error = std::strtod(parts[3].c_str(), nullptr);
        r.duality_gap = std::strtod(parts[4].c_str(), nullptr);
        series.back().rows.push_back(r);
    }
    return series;
}

enum class PlotMetric { marginal, dgap };

// Self-contained SVG: wall time (seconds) against log10 of the chosen error
// metric, one polyline plus point markers per algorithm, log-scale y ticks at
// integer powers of ten, legend top right. Each marker carries its log10
// value in a data-log10 attribute.
inline void emit_svg_plot(const std::vector<PlotSeries>& series, const std::string& path,
                          PlotMetric metric = PlotMetric::marginal)
{
    struct Pt
    {
        double x, y;
    };
    std::vector<std::vector<Pt>> pts(series.size());
    double xmax = 0.0;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t s = 0; s < series.size(); s++)
    {
        for (const TraceRow& r : series[s].rows)
        {
            const double v = (metric == PlotMetric::marginal)
                ? r.marginal_error : std::abs(r.duality_gap);
            const double xsec = r.wall_ms / 1000.0;
            if (!std::isfinite(v) || !std::isfinite(xsec))
                continue;
            const double y = std::log10(std::max(v, 1e-300));
            pts[s].push_back({xsec, y});
            xmax = std::max(xmax, xsec);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
            any = true;
        }
    }
    if (!any)
        throw PlotError("emit_svg_plot: no plottable points");

    if (xmax <= 0.0)
        xmax = 1.0;
    xmax *= 1.05;
    if (ymax - ymin < 1e-9)
    {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double W = 800.0, H = 600.0;
    const double left = 70.0, right = 25.0, top = 20.0, bottom = 55.0;
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double x) { return left + x / xmax * pw; };
    auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
    auto f3 = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
    const int ncolor = 6;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
           "width=\"800\" height=\"600\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";

    // axes
    svg << "<line x1=\"" << f3(left) << "\" y1=\"" << f3(top) << "\" x2=\""
        << f3(left) << "\" y2=\"" << f3(top + ph)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << f3(left) << "\" y1=\"" << f3(top + ph) << "\" x2=\""
        << f3(left + pw) << "\" y2=\"" << f3(top + ph)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // y ticks at integer powers of ten
    for (int e = static_cast<int>(std::ceil(ymin)); e <= static_cast<int>(std::floor(ymax)); e++)
    {
        const double yy = py(static_cast<double>(e));
        svg << "<line class=\"ytick\" x1=\"" << f3(left - 5.0) << "\" y1=\"" << f3(yy)
            << "\" x2=\"" << f3(left) << "\" y2=\"" << f3(yy)
            << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg << "<line x1=\"" << f3(left) << "\" y1=\"" << f3(yy) << "\" x2=\""
            << f3(left + pw) << "\" y2=\"" << f3(yy)
            << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
        svg << "<text class=\"yticklabel\" x=\"" << f3(left - 8.0) << "\" y=\""
            << f3(yy + 4.0)
            << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">1e"
            << e << "</text>\n";
    }
    // x ticks
    for (int t = 0; t <= 5; t++)
    {
        const double xv = xmax * t / 5.0;
        const double xx = px(xv);
        svg << "<line x1=\"" << f3(xx) << "\" y1=\"" << f3(top + ph) << "\" x2=\""
            << f3(xx) << "\" y2=\"" << f3(top + ph + 5.0)
            << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        char lbl[40];
        std::snprintf(lbl, sizeof(lbl), "%.3g", xv);
        svg << "<text x=\"" << f3(xx) << "\" y=\"" << f3(top + ph + 18.0)
            << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
            << lbl << "</text>\n";
    }

    // axis labels
    svg << "<text x=\"" << f3(left + pw / 2.0) << "\" y=\"" << f3(H - 12.0)
        << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\">"
           "wall time (s)</text>\n";
    const char* ylabel = (metric == PlotMetric::marginal)
        ? "log10(marginal error)" : "log10|duality gap|";
    svg << "<text x=\"18\" y=\"" << f3(top + ph / 2.0)
        << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 18 " << f3(top + ph / 2.0) << ")\">"
        << ylabel << "</text>\n";

    // series
    for (std::size_t s = 0; s < series.size(); s++)
    {
        const char* color = palette[s % ncolor];
        svg << "<g class=\"series\" data-algo=\"" << series[s].algo << "\">\n";
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (const Pt& q : pts[s])
            svg << f3(px(q.x)) << "," << f3(py(q.y)) << " ";
        svg << "\"/>\n";
        for (const Pt& q : pts[s])
            svg << "<circle class=\"pt\" cx=\"" << f3(px(q.x)) << "\" cy=\""
                << f3(py(q.y)) << "\" r=\"3\" fill=\"" << color
                << "\" data-log10=\"" << detail::fmt_g17(q.y) << "\"/>\n";
        svg << "</g>\n";
    }

    // legend
    {
        const double lx = left + pw - 170.0, ly = top + 10.0;
        svg << "<g class=\"legend\">\n<rect x=\"" << f3(lx) << "\" y=\"" << f3(ly)
            << "\" width=\"160\" height=\""
            << f3(10.0 + 18.0 * static_cast<double>(series.size()))
            << "\" fill=\"white\" stroke=\"#999999\"/>\n";
        for (std::size_t s = 0; s < series.size(); s++)
        {
            const double yy = ly + 14.0 + 18.0 * static_cast<double>(s);
            svg << "<line x1=\"" << f3(lx + 8.0) << "\" y1=\"" << f3(yy) << "\" x2=\""
                << f3(lx + 34.0) << "\" y2=\"" << f3(yy) << "\" stroke=\""
                << palette[s % ncolor] << "\" stroke-width=\"2\"/>\n";
            svg << "<text x=\"" << f3(lx + 40.0) << "\" y=\"" << f3(yy + 4.0)
                << "\" font-size=\"12\" font-family=\"sans-serif\">"
                << series[s].algo << "</text>\n";
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";

    std::ofstream os(path);
    if (!os)
        throw IoError("emit_svg_plot: cannot open " + path);
    os << svg.str();
    os.flush();
    if (!os)
        throw IoError("emit_svg_plot: write failed for " + path);
}

// Flat "key = value" configuration file, keys matching the CLI flags
inline BenchSpec parse_bench_spec(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("parse_bench_spec: cannot open " + path);

    BenchSpec spec;
    spec.algos.clear();
    bool have_eta = false;

    std::string line;
    long lineno = 0;
    while (std::getline(is, line))
    {
        lineno++;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("parse_bench_spec: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));

        if (key == "problem")
        {
            if (val == "synth1-iid" || val == "synth1-diff" || val == "synth2")
                spec.gen.kind = val;
            else
            {
                spec.gen.kind = "file";
                spec.gen.path = val;
            }
        }
        else if (key == "n") spec.gen.n = std::stol(val);
        else if (key == "m") spec.gen.m = std::stol(val);
        else if (key == "d") spec.gen.d = std::stol(val);
        else if (key == "seed") spec.gen.seed = std::stoull(val);
        else if (key == "eta")
        {
            spec.eta = std::strtod(val.c_str(), nullptr);
            have_eta = true;
        }
        else if (key == "algo")
        {
            for (const auto& a : detail::split(val, ','))
                if (!a.empty())
                    spec.algos.push_back(a);
        }
        else if (key == "checkpoints")
        {
            spec.checkpoints.clear();
            for (const auto& c : detail::split(val, ','))
                if (!c.empty())
                    spec.checkpoints.push_back(std::stol(c));
        }
        else if (key == "repeats") spec.repeats = std::stol(val);
        else if (key == "warmup") spec.warmup = std::stol(val);
        else if (key == "tau-max") spec.splr.tau_max = std::strtod(val.c_str(), nullptr);
        else if (key == "S") spec.splr.S = std::stol(val);
        else if (key == "J") spec.splr.J = std::stol(val);
        else if (key == "density") spec.splr.density = std::strtod(val.c_str(), nullptr);
        else if (key == "c1") spec.splr.c1 = std::strtod(val.c_str(), nullptr);
        else if (key == "c2") spec.splr.c2 = std::strtod(val.c_str(), nullptr);
        else if (key == "max-ls-trials") spec.splr.max_ls_trials = std::stol(val);
        else if (key == "overlap") spec.splr.overlap = (val == "1" || val == "true");
        else if (key == "parallel-repeats") spec.parallel_repeats = (val == "1" || val == "true");
        else
            throw ValidationError("parse_bench_spec: unknown key '" + key + "'");
    }
    if (spec.algos.empty())
        spec.algos = {"sinkhorn", "splr"};
    if (spec.gen.kind == "file" && !have_eta)
        spec.eta = 0.0;  // keep the eta stored in the file
    spec.validate();
    return spec;
}

}  // namespace regot

#endif  // REGOT_BENCH_H
