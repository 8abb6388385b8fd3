#ifndef REGOT_SPLR_H
#define REGOT_SPLR_H

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <sstream>
#include <utility>

#include "core.h"
#include "dual.h"
#include "problem.h"
#include "sinkhorn.h"
#include "sparse_chol.h"
#include "sparsity.h"
#include "trace.h"

namespace regot {

struct SplrConfig
{
    double tau_max = 1.0;
    long S = 10;        // symbolic reuse period
    long J = 5;         // Sinkhorn candidate steps per refresh; 0 disables the hybrid
    double density = 0.01;
    double c1 = 1e-4;
    double c2 = 0.9;
    long max_iter = 1000;
    double tol = 1e-8;
    long max_ls_trials = 30;
    long record_every = 1;
    bool overlap = false;  // run symbolic analysis and the candidate chain on two threads
    FusedTiling tiling;

    void validate() const
    {
        if (!(c1 > 0.0 && c1 < 0.5))
            throw ValidationError("SplrConfig: need 0 < c1 < 1/2");
        if (!(c2 > c1 && c2 < 1.0))
            throw ValidationError("SplrConfig: need c1 < c2 < 1");
        if (S < 1)
            throw ValidationError("SplrConfig: need S >= 1");
        if (J < 0)
            throw ValidationError("SplrConfig: need J >= 0");
        if (!(tau_max > 0.0))
            throw ValidationError("SplrConfig: need tau_max > 0");
        if (!(density > 0.0 && density <= 1.0))
            throw ValidationError("SplrConfig: need 0 < density <= 1");
        if (max_iter < 1)
            throw ValidationError("SplrConfig: need max_iter >= 1");
        if (tol < 0.0)
            throw ValidationError("SplrConfig: need tol >= 0");
        if (max_ls_trials < 1)
            throw ValidationError("SplrConfig: need max_ls_trials >= 1");
        if (record_every < 1)
            throw ValidationError("SplrConfig: need record_every >= 1");
    }
};

inline std::string splr_config_hash(const SplrConfig& c)
{
    std::ostringstream os;
    os << "tau_max=" << c.tau_max << ";S=" << c.S << ";J=" << c.J
       << ";density=" << c.density << ";c1=" << c.c1 << ";c2=" << c.c2
       << ";tile=" << c.tiling.rows << "x" << c.tiling.cols;
    const std::string s = os.str();
    return detail::hash_hex(detail::fnv1a(s.data(), s.size()));
}

// Rank-two BFGS-style correction R = xi uu' + zeta vv'; R = 0 when inactive
struct LowRankTerm
{
    bool active = false;
    Vector u;
    Vector v;
    double xi = 0.0;
    double zeta = 0.0;
};

struct SplrState
{
    DualPoint x_prev;
    Vector g_prev;
    DualPoint x;
    GradientResult cur;  // f, grad, row/col sums at x
    bool has_prev = false;

    SparsityPattern omega;
    SparseSym A;  // H_Omega + tau I at the frozen pattern
    std::shared_ptr<const SymbolicFactor> symbolic;
    long iter = 0;

    Vector s_minus() const { return x.to_free() - x_prev.to_free(); }
    Vector y_minus() const { return cur.grad - g_prev; }
};

// u = y-, v = (H_Omega + tau I) s-, xi = 1/(y-'s-), zeta = -1/(v's-).
// Inactive on the first iteration, when the curvature guard
// (y-'s- > 1e-6 ||y-||^2) fails, or when v's- is numerically degenerate.
inline LowRankTerm build_low_rank(const SplrState& state, const SparseSym& A)
{
    LowRankTerm R;
    if (!state.has_prev)
        return R;
    const Vector s = state.s_minus();
    const Vector y = state.y_minus();
    const double ys = y.dot(s);
    if (!(ys > 1e-6 * y.squaredNorm()))
        return R;
    Vector v = A.matvec(s);
    const double vs = v.dot(s);
    if (std::abs(vs) <= 1e-12 * v.norm() * s.norm())
        return R;
    R.active = true;
    R.u = y;
    R.v = std::move(v);
    R.xi = 1.0 / ys;
    R.zeta = -1.0 / vs;
    return R;
}

// d = -B^{-1} g for B = A + xi uu' + zeta vv', via the rank-two inverse
// identity: B^{-1}g = A^{-1}g - A^{-1}W (C^{-1} + W'A^{-1}W)^{-1} W'A^{-1}g
// with W = [u v], C = diag(xi, zeta). Falls back to d = -A^{-1}g when the
// 2x2 core is singular or the result is not a descent direction.
inline Vector compute_direction(const NumericFactor& F, const LowRankTerm& R,
                                const Vector& g)
{
    if (g.lpNorm<Eigen::Infinity>() == 0.0)
        return Vector::Zero(g.size());

    const Vector ag = solve(F, g);
    Vector d;
    bool used_woodbury = false;
    if (R.active)
    {
        const Vector au = solve(F, R.u);
        const Vector av = solve(F, R.v);
        const double k11 = 1.0 / R.xi + R.u.dot(au);
        const double k12 = R.u.dot(av);
        const double k22 = 1.0 / R.zeta + R.v.dot(av);
        const double det = k11 * k22 - k12 * k12;
        const double scale = std::max({std::abs(k11), std::abs(k12), std::abs(k22)});
        if (std::abs(det) > 1e-14 * scale * scale && scale > 0.0)
        {
            const double t1 = R.u.dot(ag);
            const double t2 = R.v.dot(ag);
            const double z1 = (k22 * t1 - k12 * t2) / det;
            const double z2 = (-k12 * t1 + k11 * t2) / det;
            d = -(ag - au * z1 - av * z2);
            used_woodbury = true;
        }
    }
    if (!used_woodbury)
        d = -ag;
    if (g.dot(d) < 0.0)
        return d;
    if (used_woodbury)
    {
        d = -ag;
        if (g.dot(d) < 0.0)
            return d;
    }
    throw DirectionError("compute_direction: no descent direction");
}

struct LineSearchResult
{
    double gamma = 0.0;
    Vector x_new;             // free-variable iterate x + gamma d
    GradientResult gr_new;
    double g0_dot_d = 0.0;    // phi'(0)
    double gnew_dot_d = 0.0;  // phi'(gamma)
    bool curvature_ok = false;
    int evals = 0;
};

// Wolfe line search: sufficient decrease f(x+gd) <= f(x) + c1 g g'd and
// curvature grad(x+gd)'d >= c2 g'd, found by bracketing from gamma = 1 with
// doubling, then bisection zoom. When the curvature condition cannot be
// certified at machine precision, the best sufficient-decrease point seen is
// returned with curvature_ok = false.
template <typename Oracle>
LineSearchResult line_search(Oracle&& oracle, const Vector& x0, const Vector& d,
                             double f0, const Vector& g0, const SplrConfig& cfg)
{
    const double dphi0 = g0.dot(d);
    if (!(dphi0 < 0.0))
        throw ValidationError("line_search: g'd must be negative");
    const double c1 = cfg.c1, c2 = cfg.c2;

    LineSearchResult best;
    bool have_best = false;
    int evals = 0;

    struct Eval
    {
        double gamma, f, dphi;
        Vector x;
        GradientResult gr;
    };
    auto eval_at = [&](double gamma) {
        Eval e;
        e.gamma = gamma;
        e.x = x0 + gamma * d;
        e.gr = oracle(e.x);
        e.f = e.gr.f;
        e.dphi = e.gr.grad.dot(d);
        evals++;
        return e;
    };
    auto sufficient = [&](const Eval& e) {
        return std::isfinite(e.f) && e.f <= f0 + c1 * e.gamma * dphi0;
    };
    auto note_best = [&](Eval& e) {
        if (!have_best || e.f < best.gr_new.f)
        {
            best.gamma = e.gamma;
            best.x_new = std::move(e.x);
            best.gr_new = std::move(e.gr);
            best.g0_dot_d = dphi0;
            best.gnew_dot_d = e.dphi;
            best.curvature_ok = false;
            have_best = true;
        }
    };
    auto accept = [&](Eval& e) {
        LineSearchResult r;
        r.gamma = e.gamma;
        r.x_new = std::move(e.x);
        r.gr_new = std::move(e.gr);
        r.g0_dot_d = dphi0;
        r.gnew_dot_d = e.dphi;
        r.curvature_ok = true;
        r.evals = evals;
        return r;
    };
    auto fallback = [&]() {
        if (!have_best)
            throw LineSearchError("line_search: no sufficient-decrease point in " +
                                  std::to_string(evals) + " trials");
        best.evals = evals;
        return best;
    };

    // zoom on a bracket [lo, hi]; lo satisfies sufficient decrease and has
    // the lowest f seen, the Wolfe point lies in between
    auto zoom = [&](double lo, double f_lo, double hi) {
        while (evals < cfg.max_ls_trials)
        {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi)
                break;  // bracket collapsed at machine precision
            Eval e = eval_at(mid);
            if (!sufficient(e) || e.f >= f_lo)
            {
                hi = mid;
                continue;
            }
            const double dphi = e.dphi;
            if (dphi >= c2 * dphi0)
                return accept(e);
            note_best(e);
            if (dphi * (hi - lo) >= 0.0)
                hi = lo;
            lo = mid;
            f_lo = e.f;
        }
        return fallback();
    };

    double g_prev = 0.0, f_prev = f0;
    double gamma = 1.0;
    while (evals < cfg.max_ls_trials)
    {
        Eval e = eval_at(gamma);
        if (!sufficient(e) || (g_prev > 0.0 && e.f >= f_prev))
            return zoom(g_prev, f_prev, gamma);
        const double dphi = e.dphi;
        if (dphi >= c2 * dphi0)
            return accept(e);
        note_best(e);
        g_prev = gamma;
        f_prev = e.f;
        gamma *= 2.0;
    }
    return fallback();
}

// Per-step log: candidate objectives at refresh steps plus the Wolfe
// certificate of the quasi-Newton candidate
struct SplrStepRecord
{
    long iter = 0;
    bool refresh = false;
    bool sinkhorn_selected = false;
    double f_before = 0.0;
    double f_after = 0.0;
    double f_cand_sinkhorn = std::numeric_limits<double>::quiet_NaN();
    double f_cand_qn = 0.0;
    double gamma = 0.0;
    double g_dot_d = 0.0;
    double gnew_dot_d = 0.0;
    bool curvature_ok = false;
    bool ls_failed = false;
    bool lowrank_active = false;
    double tau = 0.0;
    int factor_retries = 0;
    int ls_evals = 0;
};

// Step error carrying the trace collected so far
class StepError : public Error
{
public:
    StepError(const std::string& msg, SolverTrace trace)
        : Error(msg), m_trace(std::move(trace)) {}
    const SolverTrace& trace() const { return m_trace; }

private:
    SolverTrace m_trace;
};

inline SplrState splr_init(const DualPoint& x0, const ProblemInstance& p,
                           const SplrConfig& cfg)
{
    detail::check_dims(x0, p, "splr_init");
    SplrState st;
    st.x = x0;
    st.cur = fused_gradient(x0, p, cfg.tiling);
    return st;
}

inline long topk_budget(const ProblemInstance& p, double density)
{
    const double cells = static_cast<double>(p.n) * static_cast<double>(p.m - 1);
    return static_cast<long>(std::ceil(density * cells));
}

// One iteration. Refresh steps (iter % S == 0) recompute Omega, redo the
// symbolic analysis, and run the J-step Sinkhorn chain from the same snapshot
// (concurrently when cfg.overlap is set); the next iterate is whichever
// candidate has the smaller objective, the Sinkhorn one on ties. Reuse steps
// only refresh numeric values at the frozen pattern. A failed factorization
// doubles tau and retries up to 8 times.
inline SplrState splr_step(SplrState st, const ProblemInstance& p,
                           const SplrConfig& cfg, SplrStepRecord* rec = nullptr)
{
    const long k = st.iter;
    const bool refresh = (k % cfg.S == 0);
    double tau = std::min(cfg.tau_max, st.cur.grad.norm());

    DualPoint x_s;
    GradientResult gr_s;
    bool have_s = false;

    if (refresh)
    {
        const Matrix T = plan(st.x, p);
        SparsityPattern omega = select_topk(T, topk_budget(p, cfg.density));
        st.A = assemble(st.x, p, omega, tau, st.cur);
        st.omega = std::move(omega);

        auto candidate_chain = [&st, &p, &cfg]() {
            DualPoint xc = st.x;
            for (long j = 0; j < cfg.J; j++)
                xc = sinkhorn_step(xc, p);
            GradientResult gr = fused_gradient(xc, p, cfg.tiling);
            return std::make_pair(std::move(xc), std::move(gr));
        };
        if (cfg.J > 0 && cfg.overlap)
        {
            auto fut = std::async(std::launch::async, candidate_chain);
            st.symbolic = std::make_shared<const SymbolicFactor>(symbolic_analyze(st.A));
            std::tie(x_s, gr_s) = fut.get();
            have_s = true;
        } else {
            st.symbolic = std::make_shared<const SymbolicFactor>(symbolic_analyze(st.A));
            if (cfg.J > 0)
            {
                std::tie(x_s, gr_s) = candidate_chain();
                have_s = true;
            }
        }
    } else {
        update_values(st.A, st.x, p, tau, st.cur);
    }

    NumericFactor F;
    int retries = 0;
    for (;;)
    {
        try
        {
            F = numeric_factorize(st.symbolic, st.A);
            break;
        }
        catch (const NotPositiveDefiniteError&)
        {
            if (retries >= 8)
                throw;
            tau = (tau > 0.0) ? 2.0 * tau : 1e-8;
            update_values(st.A, st.x, p, tau, st.cur);
            retries++;
        }
    }

    const LowRankTerm R = build_low_rank(st, st.A);
    const Vector d = compute_direction(F, R, st.cur.grad);

    const Index n = p.n, m = p.m;
    auto oracle = [&p, &cfg, n, m](const Vector& xf) {
        return fused_gradient(DualPoint::from_free(xf, n, m), p, cfg.tiling);
    };
    LineSearchResult ls;
    bool ls_failed = false;
    try
    {
        ls = line_search(oracle, st.x.to_free(), d, st.cur.f, st.cur.grad, cfg);
    }
    catch (const LineSearchError&)
    {
        // No measurable decrease at machine precision: the quasi-Newton
        // candidate degenerates to the current point and the step relies on
        // the Sinkhorn candidate (or stalls until the next refresh).
        ls_failed = true;
        ls.gamma = 0.0;
        ls.x_new = st.x.to_free();
        ls.gr_new = st.cur;
        ls.g0_dot_d = st.cur.grad.dot(d);
        ls.gnew_dot_d = ls.g0_dot_d;
        ls.curvature_ok = false;
        ls.evals = static_cast<int>(cfg.max_ls_trials);
    }

    // Selection per the hybrid rule, ties to the Sinkhorn candidate. When the
    // quasi-Newton candidate degenerated to a zero step, f(x_s) <= f(x) holds
    // exactly (block ascent cannot increase f), so the comparison is decided
    // by that identity rather than by sub-ulp objective noise.
    const bool pick_s = have_s && std::isfinite(gr_s.f) &&
        (ls_failed || gr_s.f <= ls.gr_new.f);
    if (rec != nullptr)
    {
        rec->iter = k;
        rec->refresh = refresh;
        rec->sinkhorn_selected = pick_s;
        rec->f_before = st.cur.f;
        rec->f_cand_qn = ls.gr_new.f;
        rec->f_cand_sinkhorn = have_s ? gr_s.f : std::numeric_limits<double>::quiet_NaN();
        rec->gamma = ls.gamma;
        rec->g_dot_d = ls.g0_dot_d;
        rec->gnew_dot_d = ls.gnew_dot_d;
        rec->curvature_ok = ls.curvature_ok;
        rec->ls_failed = ls_failed;
        rec->lowrank_active = R.active;
        rec->tau = tau;
        rec->factor_retries = retries;
        rec->ls_evals = ls.evals;
    }

    st.x_prev = std::move(st.x);
    st.g_prev = std::move(st.cur.grad);
    st.has_prev = true;
    if (pick_s)
    {
        st.x = std::move(x_s);
        st.cur = std::move(gr_s);
    } else {
        st.x = DualPoint::from_free(ls.x_new, n, m);
        st.cur = std::move(ls.gr_new);
    }
    if (rec != nullptr)
        rec->f_after = st.cur.f;
    st.iter = k + 1;
    return st;
}

struct SplrResult
{
    DualPoint x;
    SolverTrace trace;
    std::vector<SplrStepRecord> steps;
};

inline SplrResult run_splr(const DualPoint& x0, const ProblemInstance& p,
                           const SplrConfig& cfg)
{
    cfg.validate();
    detail::check_dims(x0, p, "run_splr");

    SplrResult out;
    out.trace.algo = "splr";
    out.trace.eta = p.eta;
    out.trace.config_hash = splr_config_hash(cfg);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed_ms = [&]() {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    SplrState st = splr_init(x0, p, cfg);
    auto record = [&]() {
        out.trace.append({st.iter, elapsed_ms(), st.cur.f,
                          marginal_error(st.cur, p), duality_gap(st.x, st.cur, p)});
    };
    record();

    while (st.iter < cfg.max_iter)
    {
        if (marginal_error(st.cur, p) <= cfg.tol)
            break;
        SplrStepRecord rec;
        try
        {
            st = splr_step(std::move(st), p, cfg, &rec);
        }
        catch (const Error& e)
        {
            throw StepError(std::string("run_splr: step ") +
                            std::to_string(st.iter) + " failed: " + e.what(),
                            out.trace);
        }
        out.steps.push_back(rec);
        if (st.iter % cfg.record_every == 0 || st.iter == cfg.max_iter)
            record();
    }
    if (out.trace.rows.back().iter != st.iter)
        record();
    out.x = std::move(st.x);
    return out;
}

}  // namespace regot

#endif  // REGOT_SPLR_H
