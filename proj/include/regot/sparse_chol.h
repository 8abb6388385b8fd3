#ifndef REGOT_SPARSE_CHOL_H
#define REGOT_SPARSE_CHOL_H

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "core.h"
#include "sparsity.h"

namespace regot {

namespace detail {

// Minimum-degree ordering on the quotient graph: element absorption, exact
// external degrees, ties broken by smallest index. Deterministic for a given
// pattern.
inline std::vector<int> amd_order(int dim, const std::vector<int>& Ap,
                                  const std::vector<int>& Ai)
{
    std::vector<std::vector<int>> edges(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; c++)
        for (int p = Ap[static_cast<std::size_t>(c)];
             p < Ap[static_cast<std::size_t>(c) + 1]; p++)
        {
            const int r = Ai[static_cast<std::size_t>(p)];
            if (r != c)
                edges[static_cast<std::size_t>(c)].push_back(r);
        }

    std::vector<std::vector<int>> velems(static_cast<std::size_t>(dim));
    std::vector<std::vector<int>> ebound;
    std::vector<char> edead;
    std::vector<char> eliminated(static_cast<std::size_t>(dim), 0);
    std::vector<int> degree(static_cast<std::size_t>(dim));
    std::vector<int> mark(static_cast<std::size_t>(dim), -1);
    int stamp = 0;

    std::set<std::pair<int, int>> pq;  // (degree, index)
    for (int v = 0; v < dim; v++)
    {
        degree[static_cast<std::size_t>(v)] =
            static_cast<int>(edges[static_cast<std::size_t>(v)].size());
        pq.insert({degree[static_cast<std::size_t>(v)], v});
    }

    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(dim));
    std::vector<int> bnd;

    while (!pq.empty())
    {
        const int piv = pq.begin()->second;
        pq.erase(pq.begin());
        eliminated[static_cast<std::size_t>(piv)] = 1;
        perm.push_back(piv);

        // boundary of the new element: live neighbors reachable through
        // direct edges or through absorbed elements
        const int s0 = ++stamp;
        mark[static_cast<std::size_t>(piv)] = s0;
        bnd.clear();
        for (const int v : edges[static_cast<std::size_t>(piv)])
            if (!eliminated[static_cast<std::size_t>(v)] &&
                mark[static_cast<std::size_t>(v)] != s0)
            {
                mark[static_cast<std::size_t>(v)] = s0;
                bnd.push_back(v);
            }
        for (const int e : velems[static_cast<std::size_t>(piv)])
        {
            if (edead[static_cast<std::size_t>(e)])
                continue;
            for (const int v : ebound[static_cast<std::size_t>(e)])
                if (!eliminated[static_cast<std::size_t>(v)] &&
                    mark[static_cast<std::size_t>(v)] != s0)
                {
                    mark[static_cast<std::size_t>(v)] = s0;
                    bnd.push_back(v);
                }
            edead[static_cast<std::size_t>(e)] = 1;  // absorbed
        }
        if (bnd.empty())
            continue;
        std::sort(bnd.begin(), bnd.end());

        const int enew = static_cast<int>(ebound.size());
        ebound.push_back(bnd);
        edead.push_back(0);

        // prune edges now covered by the new element, drop dead elements
        for (const int v : bnd)
        {
            auto& ev = edges[static_cast<std::size_t>(v)];
            ev.erase(std::remove_if(ev.begin(), ev.end(),
                                    [&](int u) {
                                        return eliminated[static_cast<std::size_t>(u)] ||
                                               mark[static_cast<std::size_t>(u)] == s0;
                                    }),
                     ev.end());
            auto& el = velems[static_cast<std::size_t>(v)];
            el.erase(std::remove_if(el.begin(), el.end(),
                                    [&](int e) { return edead[static_cast<std::size_t>(e)] != 0; }),
                     el.end());
            el.push_back(enew);
        }

        // exact external degree of every boundary variable
        for (const int v : bnd)
        {
            const int sv = ++stamp;
            mark[static_cast<std::size_t>(v)] = sv;
            int deg = 0;
            for (const int u : edges[static_cast<std::size_t>(v)])
                if (!eliminated[static_cast<std::size_t>(u)] &&
                    mark[static_cast<std::size_t>(u)] != sv)
                {
                    mark[static_cast<std::size_t>(u)] = sv;
                    deg++;
                }
            for (const int e : velems[static_cast<std::size_t>(v)])
                for (const int u : ebound[static_cast<std::size_t>(e)])
                    if (!eliminated[static_cast<std::size_t>(u)] &&
                        mark[static_cast<std::size_t>(u)] != sv)
                    {
                        mark[static_cast<std::size_t>(u)] = sv;
                        deg++;
                    }
            pq.erase({degree[static_cast<std::size_t>(v)], v});
            degree[static_cast<std::size_t>(v)] = deg;
            pq.insert({deg, v});
        }
    }
    return perm;
}

}  // namespace detail

// Structure-only phase of the factorization: fill-reducing permutation,
// elimination tree, and the exact pattern of L. Reusable for any matrix with
// the same pattern; source_pattern_id records which pattern it was built for.
struct SymbolicFactor
{
    int dim = 0;
    std::vector<int> perm;   // C = P'AP with C(i,j) = A(perm[i], perm[j])
    std::vector<int> iperm;
    std::vector<int> etree;  // parent array over permuted columns

    std::vector<int> Lp;     // L pattern, CSC, diagonal first in each column
    std::vector<int> Li;

    // caches: permuted upper triangle of the source pattern plus the gather
    // map into the source value array, and per-row patterns of L in the
    // topological order the numeric phase consumes them
    std::vector<int> Cp;
    std::vector<int> Ci;
    std::vector<int> Cmap;
    std::vector<int> rp_ptr;
    std::vector<int> rp_idx;

    std::uint64_t source_pattern_id = 0;

    long nnz_L() const { return Lp.empty() ? 0 : static_cast<long>(Lp.back()); }
};

struct NumericFactor
{
    std::shared_ptr<const SymbolicFactor> symbolic;
    std::vector<double> L_values;  // aligned to symbolic->Li
};

inline SymbolicFactor symbolic_analyze(const SparseSym& A)
{
    const int dim = A.dim;
    if (dim < 1)
        throw StructureError("symbolic_analyze: empty matrix");

    // validate: sorted columns, full diagonal, structurally symmetric
    for (int c = 0; c < dim; c++)
    {
        bool has_diag = false;
        for (int p = A.colptr[static_cast<std::size_t>(c)];
             p < A.colptr[static_cast<std::size_t>(c) + 1]; p++)
        {
            const int r = A.rowidx[static_cast<std::size_t>(p)];
            if (r < 0 || r >= dim)
                throw StructureError("symbolic_analyze: row index out of range");
            if (p > A.colptr[static_cast<std::size_t>(c)] &&
                r <= A.rowidx[static_cast<std::size_t>(p) - 1])
                throw StructureError("symbolic_analyze: column rows not strictly ascending");
            if (r == c)
                has_diag = true;
        }
        if (!has_diag)
            throw StructureError("symbolic_analyze: missing diagonal entry");
    }
    {
        // the transpose of a symmetric pattern reproduces the same arrays
        std::vector<int> tptr(static_cast<std::size_t>(dim) + 1, 0);
        std::vector<int> tidx(A.rowidx.size());
        for (const int r : A.rowidx)
            tptr[static_cast<std::size_t>(r) + 1]++;
        for (int c = 0; c < dim; c++)
            tptr[static_cast<std::size_t>(c) + 1] += tptr[static_cast<std::size_t>(c)];
        std::vector<int> next(tptr.begin(), tptr.end() - 1);
        for (int c = 0; c < dim; c++)
            for (int p = A.colptr[static_cast<std::size_t>(c)];
                 p < A.colptr[static_cast<std::size_t>(c) + 1]; p++)
            {
                const int r = A.rowidx[static_cast<std::size_t>(p)];
                tidx[static_cast<std::size_t>(next[static_cast<std::size_t>(r)]++)] = c;
            }
        if (tptr != A.colptr || tidx != A.rowidx)
            throw StructureError("symbolic_analyze: pattern is not structurally symmetric");
    }

    SymbolicFactor S;
    S.dim = dim;
    S.source_pattern_id = A.pattern_id;
    S.perm = detail::amd_order(dim, A.colptr, A.rowidx);
    S.iperm.assign(static_cast<std::size_t>(dim), 0);
    for (int k = 0; k < dim; k++)
        S.iperm[static_cast<std::size_t>(S.perm[static_cast<std::size_t>(k)])] = k;

    // permuted upper triangle with gather map, rows ascending
    S.Cp.assign(static_cast<std::size_t>(dim) + 1, 0);
    std::vector<std::pair<int, int>> colbuf;  // (permuted row, source slot)
    for (int k = 0; k < dim; k++)
    {
        const int oc = S.perm[static_cast<std::size_t>(k)];
        colbuf.clear();
        for (int p = A.colptr[static_cast<std::size_t>(oc)];
             p < A.colptr[static_cast<std::size_t>(oc) + 1]; p++)
        {
            const int rn = S.iperm[static_cast<std::size_t>(A.rowidx[static_cast<std::size_t>(p)])];
            if (rn <= k)
                colbuf.emplace_back(rn, p);
        }
        std::sort(colbuf.begin(), colbuf.end());
        for (const auto& [rn, p] : colbuf)
        {
            S.Ci.push_back(rn);
            S.Cmap.push_back(p);
        }
        S.Cp[static_cast<std::size_t>(k) + 1] = static_cast<int>(S.Ci.size());
    }

    // elimination tree (ancestor path compression)
    S.etree.assign(static_cast<std::size_t>(dim), -1);
    {
        std::vector<int> ancestor(static_cast<std::size_t>(dim), -1);
        for (int k = 0; k < dim; k++)
            for (int p = S.Cp[static_cast<std::size_t>(k)];
                 p < S.Cp[static_cast<std::size_t>(k) + 1]; p++)
            {
                int i = S.Ci[static_cast<std::size_t>(p)];
                while (i != -1 && i < k)
                {
                    const int nxt = ancestor[static_cast<std::size_t>(i)];
                    ancestor[static_cast<std::size_t>(i)] = k;
                    if (nxt == -1)
                        S.etree[static_cast<std::size_t>(i)] = k;
                    i = nxt;
                }
            }
    }

    // per-row patterns of L via etree traversal, kept in the topological
    // order the numeric phase uses; column counts fall out of the same sweep
    S.rp_ptr.assign(static_cast<std::size_t>(dim) + 1, 0);
    std::vector<int> w(static_cast<std::size_t>(dim), -1);
    std::vector<int> sbuf(static_cast<std::size_t>(dim));
    std::vector<int> stk(static_cast<std::size_t>(dim));
    std::vector<int> count(static_cast<std::size_t>(dim), 1);  // diagonal
    for (int k = 0; k < dim; k++)
    {
        int top = dim;
        w[static_cast<std::size_t>(k)] = k;
        for (int p = S.Cp[static_cast<std::size_t>(k)];
             p < S.Cp[static_cast<std::size_t>(k) + 1]; p++)
        {
            int i = S.Ci[static_cast<std::size_t>(p)];
            if (i >= k)
                continue;
            int len = 0;
            while (i != -1 && w[static_cast<std::size_t>(i)] != k)
            {
                sbuf[static_cast<std::size_t>(len++)] = i;
                w[static_cast<std::size_t>(i)] = k;
                i = S.etree[static_cast<std::size_t>(i)];
            }
            while (len > 0)
                stk[static_cast<std::size_t>(--top)] = sbuf[static_cast<std::size_t>(--len)];
        }
        for (int t = top; t < dim; t++)
        {
            S.rp_idx.push_back(stk[static_cast<std::size_t>(t)]);
            count[static_cast<std::size_t>(stk[static_cast<std::size_t>(t)])]++;
        }
        S.rp_ptr[static_cast<std::size_t>(k) + 1] = static_cast<int>(S.rp_idx.size());
    }

    S.Lp.assign(static_cast<std::size_t>(dim) + 1, 0);
    for (int c = 0; c < dim; c++)
        S.Lp[static_cast<std::size_t>(c) + 1] =
            S.Lp[static_cast<std::size_t>(c)] + count[static_cast<std::size_t>(c)];
    S.Li.assign(static_cast<std::size_t>(S.Lp.back()), 0);
    {
        std::vector<int> next(S.Lp.begin(), S.Lp.end() - 1);
        for (int k = 0; k < dim; k++)
        {
            S.Li[static_cast<std::size_t>(next[static_cast<std::size_t>(k)]++)] = k;
            for (int t = S.rp_ptr[static_cast<std::size_t>(k)];
                 t < S.rp_ptr[static_cast<std::size_t>(k) + 1]; t++)
            {
                const int j = S.rp_idx[static_cast<std::size_t>(t)];
                S.Li[static_cast<std::size_t>(next[static_cast<std::size_t>(j)]++)] = k;
            }
        }
    }
    return S;
}

// Up-looking simplicial factorization of P'AP = LL' over the precomputed
// pattern. Throws NotPositiveDefiniteError when a pivot falls at or below
// 1e-13 times the largest diagonal entry.
inline NumericFactor numeric_factorize(const std::shared_ptr<const SymbolicFactor>& sym,
                                       const SparseSym& A)
{
    if (!sym)
        throw ValidationError("numeric_factorize: null symbolic factor");
    const SymbolicFactor& S = *sym;
    if (S.dim != A.dim || S.source_pattern_id != A.pattern_id)
        throw ValidationError("numeric_factorize: matrix pattern does not match the symbolic factor");

    const int dim = S.dim;
    std::vector<double> Cx(S.Cmap.size());
    double maxdiag = 0.0;
    for (std::size_t p = 0; p < S.Cmap.size(); p++)
        Cx[p] = A.values[static_cast<std::size_t>(S.Cmap[p])];
    for (int k = 0; k < dim; k++)
    {
        // diagonal is the last entry of the ascending upper column
        const double d = Cx[static_cast<std::size_t>(S.Cp[static_cast<std::size_t>(k) + 1] - 1)];
        if (d > maxdiag)
            maxdiag = d;
    }
    const double pivot_tol = 1e-13 * maxdiag;

    NumericFactor F;
    F.symbolic = sym;
    F.L_values.assign(static_cast<std::size_t>(S.Lp.back()), 0.0);
    std::vector<double>& Lv = F.L_values;

    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    std::vector<int> c(S.Lp.begin(), S.Lp.end() - 1);

    for (int k = 0; k < dim; k++)
    {
        for (int p = S.Cp[static_cast<std::size_t>(k)];
             p < S.Cp[static_cast<std::size_t>(k) + 1]; p++)
            x[static_cast<std::size_t>(S.Ci[static_cast<std::size_t>(p)])] =
                Cx[static_cast<std::size_t>(p)];
        double d = x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(k)] = 0.0;

        for (int t = S.rp_ptr[static_cast<std::size_t>(k)];
             t < S.rp_ptr[static_cast<std::size_t>(k) + 1]; t++)
        {
            const int j = S.rp_idx[static_cast<std::size_t>(t)];
            const double lkj = x[static_cast<std::size_t>(j)] /
                Lv[static_cast<std::size_t>(S.Lp[static_cast<std::size_t>(j)])];
            x[static_cast<std::size_t>(j)] = 0.0;
            for (int p = S.Lp[static_cast<std::size_t>(j)] + 1;
                 p < c[static_cast<std::size_t>(j)]; p++)
                x[static_cast<std::size_t>(S.Li[static_cast<std::size_t>(p)])] -=
                    Lv[static_cast<std::size_t>(p)] * lkj;
            d -= lkj * lkj;
            Lv[static_cast<std::size_t>(c[static_cast<std::size_t>(j)]++)] = lkj;
        }
        if (d <= pivot_tol)
            throw NotPositiveDefiniteError("numeric_factorize: nonpositive pivot at column " +
                                           std::to_string(k));
        Lv[static_cast<std::size_t>(c[static_cast<std::size_t>(k)]++)] = std::sqrt(d);
    }
    return F;
}

// x = P (L')^{-1} L^{-1} P' rhs
inline Vector solve(const NumericFactor& F, const Vector& rhs)
{
    if (!F.symbolic)
        throw ValidationError("solve: empty factor");
    const SymbolicFactor& S = *F.symbolic;
    if (rhs.size() != S.dim)
        throw ValidationError("solve: rhs length mismatch");
    const std::vector<double>& Lv = F.L_values;
    const int dim = S.dim;

    Vector w(dim);
    for (int k = 0; k < dim; k++)
        w[k] = rhs[S.perm[static_cast<std::size_t>(k)]];

    for (int j = 0; j < dim; j++)
    {
        w[j] /= Lv[static_cast<std::size_t>(S.Lp[static_cast<std::size_t>(j)])];
        for (int p = S.Lp[static_cast<std::size_t>(j)] + 1;
             p < S.Lp[static_cast<std::size_t>(j) + 1]; p++)
            w[S.Li[static_cast<std::size_t>(p)]] -= Lv[static_cast<std::size_t>(p)] * w[j];
    }
    for (int j = dim - 1; j >= 0; j--)
    {
        double s = w[j];
        for (int p = S.Lp[static_cast<std::size_t>(j)] + 1;
             p < S.Lp[static_cast<std::size_t>(j) + 1]; p++)
            s -= Lv[static_cast<std::size_t>(p)] * w[S.Li[static_cast<std::size_t>(p)]];
        w[j] = s / Lv[static_cast<std::size_t>(S.Lp[static_cast<std::size_t>(j)])];
    }

    Vector out(dim);
    for (int k = 0; k < dim; k++)
        out[S.perm[static_cast<std::size_t>(k)]] = w[k];
    return out;
}

}  // namespace regot

#endif  // REGOT_SPARSE_CHOL_H
