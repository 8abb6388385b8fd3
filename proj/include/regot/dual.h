#ifndef REGOT_DUAL_H
#define REGOT_DUAL_H

#include <cmath>
#include <vector>

#include "core.h"
#include "problem.h"

namespace regot {

// Dual variables (alpha, beta) with the gauge beta[m-1] = 0; equivalently the
// free vector x = (alpha, beta_{1..m-1}) of length n + m - 1.
struct DualPoint
{
    Vector alpha;  // length n
    Vector beta;   // length m, beta[m-1] == 0

    static DualPoint zeros(Index n, Index m)
    {
        DualPoint x;
        x.alpha = Vector::Zero(n);
        x.beta = Vector::Zero(m);
        return x;
    }

    static DualPoint from_free(const Vector& xf, Index n, Index m)
    {
        if (xf.size() != n + m - 1)
            throw ValidationError("DualPoint::from_free: length mismatch");
        DualPoint x;
        x.alpha = xf.head(n);
        x.beta.resize(m);
        x.beta.head(m - 1) = xf.tail(m - 1);
        x.beta[m - 1] = 0.0;
        return x;
    }

    Vector to_free() const
    {
        const Index n = alpha.size(), m = beta.size();
        Vector xf(n + m - 1);
        xf.head(n) = alpha;
        xf.tail(m - 1) = beta.head(m - 1);
        return xf;
    }
};

// f, grad, and the row/column sums of T the gradient is assembled from
struct GradientResult
{
    double f = 0.0;
    Vector grad;      // length n + m - 1
    Vector row_sums;  // T * 1m, length n
    Vector col_sums;  // T' * 1n, length m (all m columns)
};

namespace detail {

// T_ij = exp((alpha_i + beta_j - M_ij) / eta), exponent clamped to +-700.
// Single shared definition so plan/objective/gradient/Hessian agree bitwise.
inline double plan_entry(double alpha_i, double beta_j, double M_ij, double eta)
{
    double t = (alpha_i + beta_j - M_ij) / eta;
    if (t > 700.0)
        t = 700.0;
    else if (t < -700.0)
        t = -700.0;
    return std::exp(t);
}

inline void check_dims(const DualPoint& x, const ProblemInstance& p, const char* who)
{
    if (x.alpha.size() != p.n || x.beta.size() != p.m)
        throw ValidationError(std::string(who) + ": dual point/problem dimension mismatch");
    if (x.beta[p.m - 1] != 0.0)
        throw ValidationError(std::string(who) + ": gauge violated, beta[m-1] must be 0");
}

}  // namespace detail

// Transport plan T(x)
inline Matrix plan(const DualPoint& x, const ProblemInstance& p)
{
    detail::check_dims(x, p, "plan");
    Matrix T(p.n, p.m);
    for (Index j = 0; j < p.m; j++)
    {
        const double bj = x.beta[j];
        for (Index i = 0; i < p.n; i++)
            T(i, j) = detail::plan_entry(x.alpha[i], bj, p.M(i, j), p.eta);
    }
    return T;
}

// Cache tile for the fused pass; 8x32 by default
struct FusedTiling
{
    int rows = 8;
    int cols = 32;
};

// One pass over M: per tile, T values are formed in registers, row/column
// partials are reduced with plain sums inside the tile, and tile partials are
// merged pairwise across tiles. f is accumulated from the same pass.
inline GradientResult fused_gradient(const DualPoint& x, const ProblemInstance& p,
                                     const FusedTiling& tile = FusedTiling())
{
    detail::check_dims(x, p, "fused_gradient");
    if (tile.rows < 1 || tile.cols < 1)
        throw ValidationError("fused_gradient: invalid tile shape");

    const Index n = p.n, m = p.m;
    const double eta = p.eta;
    const Index tr = tile.rows, tc = tile.cols;

    GradientResult out;
    out.row_sums.resize(n);
    out.col_sums.resize(m);

    detail::PairwiseAcc col_acc(static_cast<std::size_t>(m));
    std::vector<double> bandcol(static_cast<std::size_t>(m));
    std::vector<double> rowpart(static_cast<std::size_t>(tr));

    for (Index i0 = 0; i0 < n; i0 += tr)
    {
        const Index h = std::min(tr, n - i0);
        detail::PairwiseAcc row_acc(static_cast<std::size_t>(h));
        std::fill(bandcol.begin(), bandcol.end(), 0.0);

        for (Index j0 = 0; j0 < m; j0 += tc)
        {
            const Index w = std::min(tc, m - j0);
            std::fill(rowpart.begin(), rowpart.begin() + h, 0.0);
            for (Index dj = 0; dj < w; dj++)
            {
                const Index j = j0 + dj;
                const double bj = x.beta[j];
                const double* Mcol = p.M.data() + j * n + i0;
                double csum = 0.0;
                for (Index di = 0; di < h; di++)
                {
                    const double t = detail::plan_entry(
                        x.alpha[i0 + di], bj, Mcol[di], eta);
                    rowpart[static_cast<std::size_t>(di)] += t;
                    csum += t;
                }
                bandcol[static_cast<std::size_t>(j)] = csum;
            }
            row_acc.add(rowpart.data());
        }
        row_acc.finish(out.row_sums.data() + i0);
        col_acc.add(bandcol.data());
    }
    col_acc.finish(out.col_sums.data());

    const double total = detail::pairwise_sum(out.row_sums.data(), n);
    out.f = eta * total - x.alpha.dot(p.a) - x.beta.head(m - 1).dot(p.b.head(m - 1));

    out.grad.resize(n + m - 1);
    out.grad.head(n) = out.row_sums - p.a;
    out.grad.tail(m - 1) = out.col_sums.head(m - 1) - p.b.head(m - 1);
    return out;
}

// Two-pass reference: materialize T, then reduce with Eigen. Kept as an
// independent path for checking the fused kernel.
inline GradientResult naive_gradient(const DualPoint& x, const ProblemInstance& p)
{
    detail::check_dims(x, p, "naive_gradient");
    const Index n = p.n, m = p.m;
    const Matrix T = plan(x, p);
    GradientResult out;
    out.row_sums = T.rowwise().sum();
    out.col_sums = T.colwise().sum().transpose();
    out.f = p.eta * T.sum() - x.alpha.dot(p.a) - x.beta.head(m - 1).dot(p.b.head(m - 1));
    out.grad.resize(n + m - 1);
    out.grad.head(n) = out.row_sums - p.a;
    out.grad.tail(m - 1) = out.col_sums.head(m - 1) - p.b.head(m - 1);
    return out;
}

// f(x) = eta * sum(T) - a' alpha - b' beta
inline double objective(const DualPoint& x, const ProblemInstance& p)
{
    return fused_gradient(x, p).f;
}

// Dense Hessian eta^{-1} [diag(T 1m), T_{-m}; T_{-m}', diag(T_{-m}' 1n)].
// Test oracle at modest sizes; symmetric by explicit mirrored assembly.
inline Matrix hessian_dense(const DualPoint& x, const ProblemInstance& p)
{
    detail::check_dims(x, p, "hessian_dense");
    if (p.n + p.m > 4096)
        throw OracleSizeError("hessian_dense: n + m exceeds the oracle cap 4096");
    const Index n = p.n, m = p.m;
    const GradientResult gr = fused_gradient(x, p);
    const Matrix T = plan(x, p);

    Matrix H = Matrix::Zero(n + m - 1, n + m - 1);
    H.diagonal().head(n) = gr.row_sums / p.eta;
    H.diagonal().tail(m - 1) = gr.col_sums.head(m - 1) / p.eta;
    const Matrix B = T.leftCols(m - 1) / p.eta;
    H.topRightCorner(n, m - 1) = B;
    H.bottomLeftCorner(m - 1, n) = B.transpose();
    return H;
}

// ||T 1m - a||_1 + ||T' 1n - b||_1
inline double marginal_error(const Matrix& T, const Vector& a, const Vector& b)
{
    if (T.rows() != a.size() || T.cols() != b.size())
        throw ValidationError("marginal_error: dimension mismatch");
    const Vector r = T.rowwise().sum() - a;
    const Vector c = T.colwise().sum().transpose() - b;
    return r.lpNorm<1>() + c.lpNorm<1>();
}

inline double marginal_error(const GradientResult& gr, const ProblemInstance& p)
{
    return (gr.row_sums - p.a).lpNorm<1>() + (gr.col_sums - p.b).lpNorm<1>();
}

// Closed form of the gap: alpha'(T 1m - a) + beta'(T' 1n - b)
inline double duality_gap(const DualPoint& x, const GradientResult& gr,
                          const ProblemInstance& p)
{
    return x.alpha.dot(gr.row_sums - p.a) + x.beta.dot(gr.col_sums - p.b);
}

inline double duality_gap(const DualPoint& x, const ProblemInstance& p)
{
    return duality_gap(x, fused_gradient(x, p), p);
}

// Direct route: L_p - L_d with
//   L_p = <T, M> + eta * sum(T log T) - eta * sum(T)
//   L_d = -eta * sum(T) + a' alpha + b' beta
inline double duality_gap_direct(const DualPoint& x, const ProblemInstance& p)
{
    detail::check_dims(x, p, "duality_gap_direct");
    const Matrix T = plan(x, p);
    double tm = 0.0, tlogt = 0.0, tsum = 0.0;
    for (Index j = 0; j < p.m; j++)
        for (Index i = 0; i < p.n; i++)
        {
            const double t = T(i, j);
            tm += t * p.M(i, j);
            tlogt += t * std::log(t);
            tsum += t;
        }
    const double lp = tm + p.eta * tlogt - p.eta * tsum;
    const double ld = -p.eta * tsum + x.alpha.dot(p.a) + x.beta.dot(p.b);
    return lp - ld;
}

}  // namespace regot

#endif  // REGOT_DUAL_H
