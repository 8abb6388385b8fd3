#ifndef REGOT_SINKHORN_H
#define REGOT_SINKHORN_H

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "core.h"
#include "dual.h"
#include "problem.h"
#include "trace.h"

namespace regot {

struct SinkhornConfig
{
    long max_iter = 1000;
    long record_every = 1;
    double tol = 0.0;  // 0 disables the convergence test

    void validate() const
    {
        if (max_iter < 1)
            throw ValidationError("SinkhornConfig: max_iter must be >= 1");
        if (record_every < 1)
            throw ValidationError("SinkhornConfig: record_every must be >= 1");
        if (tol < 0.0)
            throw ValidationError("SinkhornConfig: tol must be >= 0");
    }
};

inline std::string sinkhorn_config_hash(const SinkhornConfig& c)
{
    std::ostringstream os;
    os << "max_iter=" << c.max_iter << ";tol=" << c.tol;
    const std::string s = os.str();
    return detail::hash_hex(detail::fnv1a(s.data(), s.size()));
}

// alpha_i = eta * (log a_i - logsumexp_j((beta_j - M_ij) / eta)),
// the exact maximizer of the dual over alpha with beta held fixed.
// Max-subtracted logsumexp; two column sweeps over M.
inline Vector optimal_alpha(const DualPoint& x, const ProblemInstance& p)
{
    detail::check_dims(x, p, "optimal_alpha");
    const Index n = p.n, m = p.m;
    const double eta = p.eta;

    Vector rowmax = Vector::Constant(n, -std::numeric_limits<double>::infinity());
    for (Index j = 0; j < m; j++)
    {
        const double bj = x.beta[j];
        const double* Mcol = p.M.data() + j * n;
        for (Index i = 0; i < n; i++)
        {
            const double v = (bj - Mcol[i]) / eta;
            if (v > rowmax[i])
                rowmax[i] = v;
        }
    }
    Vector acc = Vector::Zero(n);
    for (Index j = 0; j < m; j++)
    {
        const double bj = x.beta[j];
        const double* Mcol = p.M.data() + j * n;
        for (Index i = 0; i < n; i++)
            acc[i] += std::exp((bj - Mcol[i]) / eta - rowmax[i]);
    }
    Vector alpha(n);
    for (Index i = 0; i < n; i++)
        alpha[i] = eta * (std::log(p.a[i]) - (rowmax[i] + std::log(acc[i])));
    return alpha;
}

// beta_j = eta * (log b_j - logsumexp_i((alpha_i - M_ij) / eta))
inline Vector optimal_beta(const Vector& alpha, const ProblemInstance& p)
{
    if (alpha.size() != p.n)
        throw ValidationError("optimal_beta: alpha length mismatch");
    const Index n = p.n, m = p.m;
    const double eta = p.eta;

    Vector beta(m);
    for (Index j = 0; j < m; j++)
    {
        const double* Mcol = p.M.data() + j * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < n; i++)
        {
            const double v = (alpha[i] - Mcol[i]) / eta;
            if (v > mx)
                mx = v;
        }
        double s = 0.0;
        for (Index i = 0; i < n; i++)
            s += std::exp((alpha[i] - Mcol[i]) / eta - mx);
        beta[j] = eta * (std::log(p.b[j]) - (mx + std::log(s)));
    }
    return beta;
}

// One full block-coordinate ascent sweep in the log domain, followed by the
// gauge shift that moves beta_m back to zero (a no-op on the objective).
inline DualPoint sinkhorn_step(const DualPoint& x, const ProblemInstance& p)
{
    DualPoint next;
    next.alpha = optimal_alpha(x, p);
    next.beta = optimal_beta(next.alpha, p);
    const double c = next.beta[p.m - 1];
    next.alpha.array() += c;
    next.beta.array() -= c;
    next.beta[p.m - 1] = 0.0;
    return next;
}

struct SinkhornResult
{
    DualPoint x;
    SolverTrace trace;
};

inline SinkhornResult run_sinkhorn(const DualPoint& x0, const ProblemInstance& p,
                                   const SinkhornConfig& cfg)
{
    cfg.validate();
    detail::check_dims(x0, p, "run_sinkhorn");

    SinkhornResult out;
    out.trace.algo = "sinkhorn";
    out.trace.eta = p.eta;
    out.trace.config_hash = sinkhorn_config_hash(cfg);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed_ms = [&]() {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    DualPoint x = x0;
    GradientResult gr = fused_gradient(x, p);
    auto record = [&](long iter) {
        out.trace.append({iter, elapsed_ms(), gr.f,
                          marginal_error(gr, p), duality_gap(x, gr, p)});
    };
    record(0);

    long iter = 0;
    bool gr_fresh = true;
    while (iter < cfg.max_iter)
    {
        if (cfg.tol > 0.0 && marginal_error(gr, p) <= cfg.tol)
            break;
        x = sinkhorn_step(x, p);
        iter++;
        gr_fresh = false;
        if (cfg.tol > 0.0 || iter % cfg.record_every == 0 || iter == cfg.max_iter)
        {
            gr = fused_gradient(x, p);
            gr_fresh = true;
            if (iter % cfg.record_every == 0 || iter == cfg.max_iter)
                record(iter);
        }
    }
    if (!gr_fresh)
        gr = fused_gradient(x, p);
    if (out.trace.rows.back().iter != iter)
        record(iter);
    out.x = std::move(x);
    return out;
}

}  // namespace regot

#endif  // REGOT_SINKHORN_H
