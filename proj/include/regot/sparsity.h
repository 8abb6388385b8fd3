#ifndef REGOT_SPARSITY_H
#define REGOT_SPARSITY_H

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "core.h"
#include "dual.h"
#include "problem.h"

namespace regot {

// Index set Omega over the n x (m-1) block of T, stored 0-based and sorted
// lexicographically. Always contains the minimum set Omega* (first row and
// first column of the block).
struct SparsityPattern
{
    Index n = 0;
    Index mm1 = 0;  // m - 1
    std::vector<std::pair<int, int>> coords;
    long k_requested = 0;

    bool contains_minimum_set() const
    {
        std::vector<char> row0(static_cast<std::size_t>(mm1), 0);
        std::vector<char> col0(static_cast<std::size_t>(n), 0);
        for (const auto& [i, j] : coords)
        {
            if (i == 0)
                row0[static_cast<std::size_t>(j)] = 1;
            if (j == 0)
                col0[static_cast<std::size_t>(i)] = 1;
        }
        return std::all_of(row0.begin(), row0.end(), [](char c) { return c != 0; }) &&
               std::all_of(col0.begin(), col0.end(), [](char c) { return c != 0; });
    }
};

// Largest k entries of T with the last column excluded, ties broken by
// lexicographic (i, j); result is the union with Omega*.
inline SparsityPattern select_topk(const Matrix& T, long k)
{
    if (k < 0)
        throw ValidationError("select_topk: k must be >= 0");
    const Index n = T.rows();
    const Index mm1 = T.cols() - 1;

    SparsityPattern out;
    out.n = n;
    out.mm1 = mm1;
    out.k_requested = k;
    if (mm1 <= 0)
        return out;

    struct Entry
    {
        double value;
        long idx;  // row-major i * mm1 + j, so ascending idx is lexicographic
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(n * mm1));
    for (Index i = 0; i < n; i++)
        for (Index j = 0; j < mm1; j++)
            entries.push_back({T(i, j), i * mm1 + j});

    auto cmp = [](const Entry& a, const Entry& b) {
        return a.value > b.value || (a.value == b.value && a.idx < b.idx);
    };
    const long total = static_cast<long>(entries.size());
    const long take = std::min(k, total);
    if (take > 0 && take < total)
        std::nth_element(entries.begin(), entries.begin() + take, entries.end(), cmp);

    out.coords.reserve(static_cast<std::size_t>(take + n + mm1));
    for (long t = 0; t < take; t++)
    {
        const long idx = entries[static_cast<std::size_t>(t)].idx;
        out.coords.emplace_back(static_cast<int>(idx / mm1), static_cast<int>(idx % mm1));
    }
    for (Index i = 0; i < n; i++)
        out.coords.emplace_back(static_cast<int>(i), 0);
    for (Index j = 1; j < mm1; j++)
        out.coords.emplace_back(0, static_cast<int>(j));

    std::sort(out.coords.begin(), out.coords.end());
    out.coords.erase(std::unique(out.coords.begin(), out.coords.end()), out.coords.end());
    return out;
}

// Symmetric sparse matrix in CSC, both triangles stored, rows ascending in
// each column, diagonal always structurally present. When assembled from a
// transport problem it also keeps the generating coordinates so the values
// can be refreshed at a frozen pattern.
struct SparseSym
{
    int dim = 0;
    std::vector<int> colptr;
    std::vector<int> rowidx;
    std::vector<double> values;
    std::uint64_t pattern_id = 0;

    // set when assembled from (x, problem, Omega)
    bool is_transport = false;
    Index ot_n = 0, ot_m = 0;
    std::vector<std::pair<int, int>> coords;
    std::vector<int> slot_a;  // coord -> slot in the alpha-block column
    std::vector<int> slot_b;  // coord -> slot in the beta-block column

    Vector matvec(const Vector& v) const
    {
        if (v.size() != dim)
            throw ValidationError("SparseSym::matvec: length mismatch");
        Vector y = Vector::Zero(dim);
        for (int c = 0; c < dim; c++)
        {
            const double vc = v[c];
            for (int p = colptr[c]; p < colptr[c + 1]; p++)
                y[rowidx[static_cast<std::size_t>(p)]] +=
                    values[static_cast<std::size_t>(p)] * vc;
        }
        return y;
    }

    Matrix to_dense() const
    {
        Matrix D = Matrix::Zero(dim, dim);
        for (int c = 0; c < dim; c++)
            for (int p = colptr[c]; p < colptr[c + 1]; p++)
                D(rowidx[static_cast<std::size_t>(p)], c) =
                    values[static_cast<std::size_t>(p)];
        return D;
    }

    // Lower-triangle pattern/values (diagonal included), CSC
    void lower_view(std::vector<int>& lp, std::vector<int>& li,
                    std::vector<double>& lv) const
    {
        lp.assign(static_cast<std::size_t>(dim) + 1, 0);
        li.clear();
        lv.clear();
        for (int c = 0; c < dim; c++)
        {
            lp[static_cast<std::size_t>(c)] = static_cast<int>(li.size());
            for (int p = colptr[c]; p < colptr[c + 1]; p++)
            {
                const int r = rowidx[static_cast<std::size_t>(p)];
                if (r >= c)
                {
                    li.push_back(r);
                    lv.push_back(values[static_cast<std::size_t>(p)]);
                }
            }
        }
        lp[static_cast<std::size_t>(dim)] = static_cast<int>(li.size());
    }

    void compute_pattern_id()
    {
        std::uint64_t h = detail::fnv1a(&dim, sizeof(dim));
        h = detail::fnv1a_span(colptr, h);
        h = detail::fnv1a_span(rowidx, h);
        pattern_id = h;
    }

    // Build from a dense symmetric matrix, keeping |v| > drop_tol plus the
    // full diagonal. Intended for tests and small utilities.
    static SparseSym from_dense(const Matrix& A, double drop_tol = 0.0)
    {
        if (A.rows() != A.cols())
            throw ValidationError("SparseSym::from_dense: matrix not square");
        SparseSym S;
        S.dim = static_cast<int>(A.rows());
        S.colptr.assign(static_cast<std::size_t>(S.dim) + 1, 0);
        for (int c = 0; c < S.dim; c++)
        {
            S.colptr[static_cast<std::size_t>(c)] = static_cast<int>(S.rowidx.size());
            for (int r = 0; r < S.dim; r++)
            {
                const double v = A(r, c);
                const double w = A(c, r);
                if (r == c || std::abs(v) > drop_tol || std::abs(w) > drop_tol)
                {
                    S.rowidx.push_back(r);
                    S.values.push_back(v);
                }
            }
        }
        S.colptr[static_cast<std::size_t>(S.dim)] = static_cast<int>(S.rowidx.size());
        S.compute_pattern_id();
        return S;
    }
};

namespace detail {

// Shared value fill: diagonal from full row/column sums plus tau, off-diagonal
// entries T_ij / eta at the frozen coordinates. Used by assemble and
// update_values so a refresh reproduces a fresh assembly bitwise.
inline void fill_transport_values(SparseSym& A, const DualPoint& x,
                                  const ProblemInstance& p, double tau,
                                  const GradientResult& gr)
{
    const Index n = p.n;
    const double eta = p.eta;
    for (Index i = 0; i < n; i++)
        A.values[static_cast<std::size_t>(A.colptr[i])] = gr.row_sums[i] / eta + tau;
    for (Index j = 0; j + 1 < p.m; j++)
        A.values[static_cast<std::size_t>(A.colptr[n + j + 1] - 1)] =
            gr.col_sums[j] / eta + tau;
    for (std::size_t t = 0; t < A.coords.size(); t++)
    {
        const auto [i, j] = A.coords[t];
        const double v = plan_entry(x.alpha[i], x.beta[j], p.M(i, j), eta) / eta;
        A.values[static_cast<std::size_t>(A.slot_a[t])] = v;
        A.values[static_cast<std::size_t>(A.slot_b[t])] = v;
    }
}

}  // namespace detail

// H_Omega + tau I in CSC form. Diagonals carry the full (unsparsified)
// row/column sums of T; off-diagonals exist only at Omega.
inline SparseSym assemble(const DualPoint& x, const ProblemInstance& p,
                          const SparsityPattern& omega, double tau,
                          const GradientResult& gr)
{
    detail::check_dims(x, p, "assemble");
    if (tau < 0.0)
        throw ValidationError("assemble: tau must be >= 0");
    if (omega.n != p.n || omega.mm1 != p.m - 1)
        throw ValidationError("assemble: pattern/problem shape mismatch");

    const Index n = p.n, m = p.m;
    const int dim = static_cast<int>(n + m - 1);
    const std::size_t nnz_off = omega.coords.size();

    SparseSym A;
    A.dim = dim;
    A.is_transport = true;
    A.ot_n = n;
    A.ot_m = m;
    A.coords = omega.coords;
    A.slot_a.resize(nnz_off);
    A.slot_b.resize(nnz_off);

    // column counts: alpha column i has 1 + |{j : (i,j) in Omega}| entries,
    // beta column n+j has |{i : (i,j) in Omega}| + 1.
    std::vector<int> count(static_cast<std::size_t>(dim), 1);
    for (const auto& [i, j] : A.coords)
    {
        count[static_cast<std::size_t>(i)]++;
        count[static_cast<std::size_t>(n + j)]++;
    }
    A.colptr.assign(static_cast<std::size_t>(dim) + 1, 0);
    for (int c = 0; c < dim; c++)
        A.colptr[static_cast<std::size_t>(c + 1)] =
            A.colptr[static_cast<std::size_t>(c)] + count[static_cast<std::size_t>(c)];
    A.rowidx.assign(static_cast<std::size_t>(A.colptr.back()), 0);
    A.values.assign(static_cast<std::size_t>(A.colptr.back()), 0.0);

    // alpha-block columns: diagonal first, then rows n+j with j ascending.
    // beta-block columns: rows i ascending, diagonal last. Lexicographic
    // coords give ascending j per i and ascending i per j directly.
    std::vector<int> next_a(static_cast<std::size_t>(n));
    std::vector<int> next_b(static_cast<std::size_t>(m - 1));
    for (Index i = 0; i < n; i++)
    {
        A.rowidx[static_cast<std::size_t>(A.colptr[i])] = static_cast<int>(i);
        next_a[static_cast<std::size_t>(i)] = A.colptr[i] + 1;
    }
    for (Index j = 0; j + 1 < m; j++)
    {
        A.rowidx[static_cast<std::size_t>(A.colptr[n + j + 1] - 1)] =
            static_cast<int>(n + j);
        next_b[static_cast<std::size_t>(j)] = A.colptr[n + j];
    }
    for (std::size_t t = 0; t < nnz_off; t++)
    {
        const auto [i, j] = A.coords[t];
        const int pa = next_a[static_cast<std::size_t>(i)]++;
        A.rowidx[static_cast<std::size_t>(pa)] = static_cast<int>(n) + j;
        A.slot_a[t] = pa;
        const int pb = next_b[static_cast<std::size_t>(j)]++;
        A.rowidx[static_cast<std::size_t>(pb)] = i;
        A.slot_b[t] = pb;
    }

    A.compute_pattern_id();
    detail::fill_transport_values(A, x, p, tau, gr);
    return A;
}

inline SparseSym assemble(const DualPoint& x, const ProblemInstance& p,
                          const SparsityPattern& omega, double tau)
{
    return assemble(x, p, omega, tau, fused_gradient(x, p));
}

// Refresh every stored value at the frozen pattern: fresh full row/column
// sums on the diagonal, fresh T entries at Omega, fresh tau. The structure
// arrays are untouched.
inline void update_values(SparseSym& A, const DualPoint& x,
                          const ProblemInstance& p, double tau,
                          const GradientResult& gr)
{
    if (!A.is_transport)
        throw ValidationError("update_values: matrix was not assembled from a problem");
    if (A.ot_n != p.n || A.ot_m != p.m)
        throw ValidationError("update_values: problem shape mismatch");
    if (tau < 0.0)
        throw ValidationError("update_values: tau must be >= 0");
    detail::check_dims(x, p, "update_values");
    detail::fill_transport_values(A, x, p, tau, gr);
}

inline void update_values(SparseSym& A, const DualPoint& x,
                          const ProblemInstance& p, double tau)
{
    update_values(A, x, p, tau, fused_gradient(x, p));
}

}  // namespace regot

#endif  // REGOT_SPARSITY_H
