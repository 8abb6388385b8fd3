// regot: entropic optimal transport solvers (Sinkhorn and SPLR) with a
// benchmarking harness. Subcommands: gen, solve, bench, plot.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "regot/regot.h"

namespace {

regot::GeneratorSpec make_gen_spec(const std::string& problem, long n, long m,
                                   long d, unsigned long long seed)
{
    regot::GeneratorSpec spec;
    if (problem == "synth1-iid" || problem == "synth1-diff" || problem == "synth2")
    {
        spec.kind = problem;
    } else {
        spec.kind = "file";
        spec.path = problem;
    }
    spec.n = n;
    spec.m = m;
    spec.d = d;
    spec.seed = seed;
    return spec;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Entropic-regularized optimal transport solvers and benchmarks"};
    app.require_subcommand(1);

    // ---- gen ----
    std::string gen_kind;
    long gen_n = 64, gen_m = 64, gen_d = 2;
    unsigned long long gen_seed = 0;
    double gen_eta = 0.001;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a problem instance and save it");
    gen->add_option("kind", gen_kind, "synth1-iid | synth1-diff | synth2")->required();
    gen->add_option("--n", gen_n, "source size");
    gen->add_option("--m", gen_m, "target size");
    gen->add_option("--d", gen_d, "point dimension (synth1)");
    gen->add_option("--seed", gen_seed, "RNG seed (synth1)");
    gen->add_option("--eta", gen_eta, "regularization strength");
    gen->add_option("-o,--output", gen_out, "output .rotb file")->required();

    // ---- solve ----
    std::string sol_problem, sol_algo = "splr", sol_trace;
    long sol_n = 64, sol_m = 64, sol_d = 2, sol_max_iter = 1000, sol_record = 1;
    unsigned long long sol_seed = 0;
    double sol_eta = 0.001, sol_tol = 1e-8;
    regot::SplrConfig sol_splr;
    bool sol_overlap = false;
    auto* solve = app.add_subcommand("solve", "Run a solver on a problem");
    solve->add_option("--problem", sol_problem,
                      "file path or synth1-iid | synth1-diff | synth2")->required();
    solve->add_option("--n", sol_n, "source size (generated problems)");
    solve->add_option("--m", sol_m, "target size (generated problems)");
    solve->add_option("--d", sol_d, "point dimension (synth1)");
    solve->add_option("--seed", sol_seed, "RNG seed (synth1)");
    auto* sol_eta_opt = solve->add_option(
        "--eta", sol_eta, "regularization strength (overrides a file's eta)");
    solve->add_option("--algo", sol_algo, "sinkhorn | splr")
        ->check(CLI::IsMember({"sinkhorn", "splr"}));
    solve->add_option("--max-iter", sol_max_iter, "iteration budget");
    solve->add_option("--tol", sol_tol, "marginal-error stopping threshold");
    solve->add_option("--record-every", sol_record, "trace stride");
    solve->add_option("--tau-max", sol_splr.tau_max, "cap for the diagonal shift");
    solve->add_option("--S", sol_splr.S, "symbolic reuse period");
    solve->add_option("--J", sol_splr.J, "Sinkhorn candidate steps per refresh");
    solve->add_option("--density", sol_splr.density, "top-k density rho");
    solve->add_option("--c1", sol_splr.c1, "Wolfe sufficient-decrease constant");
    solve->add_option("--c2", sol_splr.c2, "Wolfe curvature constant");
    solve->add_flag("--overlap", sol_overlap,
                    "overlap symbolic analysis with candidate generation");
    solve->add_option("--trace", sol_trace, "write the iteration trace CSV here");

    // ---- bench ----
    std::string bench_spec_path, bench_out;
    bool bench_parallel = false;
    auto* bench = app.add_subcommand("bench", "Run the benchmark protocol from a spec file");
    bench->add_option("--spec", bench_spec_path, "flat key = value spec file")->required();
    bench->add_option("-o,--output", bench_out, "report CSV path")->required();
    bench->add_flag("--parallel-repeats", bench_parallel,
                    "run repeats concurrently (property runs only; timings not comparable)");

    // ---- plot ----
    std::string plot_in, plot_out, plot_metric = "marginal";
    auto* plot = app.add_subcommand("plot", "Render a report CSV as an SVG plot");
    plot->add_option("input", plot_in, "report CSV")->required();
    plot->add_option("--metric", plot_metric, "marginal | dgap")
        ->check(CLI::IsMember({"marginal", "dgap"}));
    plot->add_option("-o,--output", plot_out, "output SVG path")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (gen->parsed())
        {
            regot::GeneratorSpec spec = make_gen_spec(gen_kind, gen_n, gen_m, gen_d, gen_seed);
            if (spec.kind == "file")
                throw regot::ValidationError("gen: kind must be a synthetic generator");
            const regot::ProblemInstance p = regot::make_problem(spec, gen_eta);
            regot::save_problem(p, gen_out);
            std::cout << "wrote " << regot::describe(spec) << " eta=" << p.eta
                      << " to " << gen_out << "\n";
        }
        else if (solve->parsed())
        {
            regot::GeneratorSpec spec =
                make_gen_spec(sol_problem, sol_n, sol_m, sol_d, sol_seed);
            // a file's stored eta wins unless --eta was given explicitly
            const double eta = (spec.kind == "file" && sol_eta_opt->count() == 0)
                ? 0.0 : sol_eta;
            const regot::ProblemInstance p = regot::make_problem(spec, eta);
            const regot::DualPoint x0 = regot::DualPoint::zeros(p.n, p.m);

            regot::SolverTrace trace;
            regot::DualPoint x;
            if (sol_algo == "sinkhorn")
            {
                regot::SinkhornConfig cfg;
                cfg.max_iter = sol_max_iter;
                cfg.tol = sol_tol;
                cfg.record_every = sol_record;
                auto res = regot::run_sinkhorn(x0, p, cfg);
                x = std::move(res.x);
                trace = std::move(res.trace);
            } else {
                regot::SplrConfig cfg = sol_splr;
                cfg.max_iter = sol_max_iter;
                cfg.tol = sol_tol;
                cfg.record_every = sol_record;
                cfg.overlap = sol_overlap;
                auto res = regot::run_splr(x0, p, cfg);
                x = std::move(res.x);
                trace = std::move(res.trace);
            }
            trace.problem = regot::describe(spec);

            const regot::GradientResult gr = regot::fused_gradient(x, p);
            const regot::TraceRow& last = trace.rows.back();
            std::printf("%s on %s: iter=%ld wall=%.3f ms f=%.10g "
                        "marginal_error=%.3e duality_gap=%.3e\n",
                        sol_algo.c_str(), trace.problem.c_str(), last.iter,
                        last.wall_ms, gr.f, regot::marginal_error(gr, p),
                        regot::duality_gap(x, gr, p));
            if (!sol_trace.empty())
            {
                regot::emit_csv(trace, sol_trace);
                std::cout << "trace written to " << sol_trace << "\n";
            }
        }
        else if (bench->parsed())
        {
            regot::BenchSpec spec = regot::parse_bench_spec(bench_spec_path);
            if (bench_parallel)
                spec.parallel_repeats = true;
            const regot::BenchReport report = regot::run_benchmark(spec);
            regot::emit_csv(report, bench_out);
            std::cout << "report written to " << bench_out << "\n";
            for (const auto& ar : report.algos)
                for (const auto& row : ar.rows)
                    std::printf("  %-10s iter=%-6ld wall=%10.3f ms  error=%.3e%s\n",
                                ar.algo.c_str(), row.iter, row.wall_ms,
                                row.marginal_error, row.failed ? "  [failed]" : "");
        }
        else if (plot->parsed())
        {
            const auto series = regot::parse_report_csv(plot_in);
            const auto metric = (plot_metric == "dgap")
                ? regot::PlotMetric::dgap : regot::PlotMetric::marginal;
            regot::emit_svg_plot(series, plot_out, metric);
            std::cout << "plot written to " << plot_out << "\n";
        }
    }
    catch (const regot::Error& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
