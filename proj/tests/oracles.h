// Test-only oracles: independent routes used to cross-check the library.
#ifndef REGOT_TESTS_ORACLES_H
#define REGOT_TESTS_ORACLES_H

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "regot/regot.h"

namespace oracles {

using regot::DualPoint;
using regot::Index;
using regot::Matrix;
using regot::ProblemInstance;
using regot::Vector;

// Random problem with entries drawn from the library RNG. a, b are random
// positive vectors; M is uniform [0, 1] scaled so max = 1.
inline ProblemInstance rand_instance(Index n, Index m, double eta, std::uint64_t seed)
{
    regot::Rng rng(seed);
    ProblemInstance p;
    p.n = n;
    p.m = m;
    p.eta = eta;
    p.M.resize(n, m);
    for (Index j = 0; j < m; j++)
        for (Index i = 0; i < n; i++)
            p.M(i, j) = rng.uniform();
    p.M = regot::normalize_cost(p.M);
    p.a.resize(n);
    p.b.resize(m);
    for (Index i = 0; i < n; i++)
        p.a[i] = 0.2 + rng.uniform();
    for (Index j = 0; j < m; j++)
        p.b[j] = 0.2 + rng.uniform();
    p.a /= p.a.sum();
    p.b /= p.b.sum();
    regot::validate_problem(p);
    return p;
}

// Dual point with alpha, beta uniform in [-scale, scale], gauge kept
inline DualPoint rand_dual(Index n, Index m, double scale, std::uint64_t seed)
{
    regot::Rng rng(seed);
    DualPoint x = DualPoint::zeros(n, m);
    for (Index i = 0; i < n; i++)
        x.alpha[i] = scale * (2.0 * rng.uniform() - 1.0);
    for (Index j = 0; j + 1 < m; j++)
        x.beta[j] = scale * (2.0 * rng.uniform() - 1.0);
    return x;
}

// Duplicate-formula evaluation of -L(alpha, beta) with plain loops; an
// independent route for the objective. No clamping: callers keep exponents
// moderate.
inline double neg_dual_objective_direct(const Vector& alpha, const Vector& beta,
                                        const ProblemInstance& p)
{
    double s = 0.0;
    for (Index i = 0; i < p.n; i++)
        for (Index j = 0; j < p.m; j++)
            s += std::exp((alpha[i] + beta[j] - p.M(i, j)) / p.eta);
    return p.eta * s - alpha.dot(p.a) - beta.dot(p.b);
}

// Central finite differences of the objective
inline Vector fd_gradient(const DualPoint& x, const ProblemInstance& p, double h)
{
    const Vector x0 = x.to_free();
    Vector g(x0.size());
    for (Index k = 0; k < x0.size(); k++)
    {
        Vector xp = x0, xm = x0;
        xp[k] += h;
        xm[k] -= h;
        const double fp = regot::objective(DualPoint::from_free(xp, p.n, p.m), p);
        const double fm = regot::objective(DualPoint::from_free(xm, p.n, p.m), p);
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Central finite differences of the fused gradient (row k of the Hessian)
inline Matrix fd_hessian(const DualPoint& x, const ProblemInstance& p, double h)
{
    const Vector x0 = x.to_free();
    Matrix H(x0.size(), x0.size());
    for (Index k = 0; k < x0.size(); k++)
    {
        Vector xp = x0, xm = x0;
        xp[k] += h;
        xm[k] -= h;
        const Vector gp = regot::fused_gradient(DualPoint::from_free(xp, p.n, p.m), p).grad;
        const Vector gm = regot::fused_gradient(DualPoint::from_free(xm, p.n, p.m), p).grad;
        H.col(k) = (gp - gm) / (2.0 * h);
    }
    return H;
}

inline std::pair<double, double> eig_range(const Matrix& A)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace oracles

#endif  // REGOT_TESTS_ORACLES_H
