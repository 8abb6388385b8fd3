#ifndef REGOT_PROBLEM_H
#define REGOT_PROBLEM_H

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "core.h"

namespace regot {

// A discrete transport problem: cost matrix M (n x m), marginals a (n) and
// b (m) summing to one, and regularization strength eta > 0.
struct ProblemInstance
{
    Index n = 0;
    Index m = 0;
    Matrix M;
    Vector a;
    Vector b;
    double eta = 0.0;
};

inline void validate_problem(const ProblemInstance& p)
{
    if (p.n < 1 || p.m < 1)
        throw ValidationError("problem: n and m must be at least 1");
    if (p.M.rows() != p.n || p.M.cols() != p.m)
        throw ValidationError("problem: cost matrix shape mismatch");
    if (p.a.size() != p.n || p.b.size() != p.m)
        throw ValidationError("problem: marginal length mismatch");
    if (!(p.eta > 0.0) || !std::isfinite(p.eta))
        throw ValidationError("problem: eta must be positive and finite");
    if (!p.M.allFinite() || !p.a.allFinite() || !p.b.allFinite())
        throw ValidationError("problem: non-finite entries");
    if (!(p.a.minCoeff() > 0.0))
        throw ValidationError("problem: a must be elementwise positive");
    if (!(p.b.minCoeff() > 0.0))
        throw ValidationError("problem: b must be elementwise positive");
    if (std::abs(p.a.sum() - 1.0) > 1e-12)
        throw ValidationError("problem: a must sum to 1 within 1e-12");
    if (std::abs(p.b.sum() - 1.0) > 1e-12)
        throw ValidationError("problem: b must sum to 1 within 1e-12");
}

// M <- M / max(M), so the largest entry becomes exactly 1
inline Matrix normalize_cost(const Matrix& M)
{
    if (M.size() == 0)
        throw DegenerateCostError("normalize_cost: empty cost matrix");
    const double mx = M.maxCoeff();
    if (!(mx > 0.0))
        throw DegenerateCostError("normalize_cost: no strictly positive entry");
    return M / mx;
}

// Seedable generator with a fixed sampling recipe (mt19937_64 + Box-Muller)
// so that a given seed reproduces the same instance everywhere.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : m_gen(seed) {}

    // uniform on [0, 1), 53-bit resolution
    double uniform()
    {
        return static_cast<double>(m_gen() >> 11) * 0x1.0p-53;
    }

    double normal()
    {
        if (m_have_spare)
        {
            m_have_spare = false;
            return m_spare;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        m_spare = r * std::sin(th);
        m_have_spare = true;
        return r * std::cos(th);
    }

private:
    std::mt19937_64 m_gen;
    double m_spare = 0.0;
    bool m_have_spare = false;
};

enum class Synth1Variant { iid, diff };

// Gaussian point clouds; squared Euclidean costs; uniform marginals.
// iid: both samples N(0,1) per coordinate.
// diff: source N(0,1), target mean 1 / variance 0.25 per coordinate.
inline ProblemInstance gen_synthetic1(Index n, Index m, Synth1Variant variant,
                                      Index d, std::uint64_t seed,
                                      double eta = 0.001)
{
    if (n < 2 || m < 2)
        throw ValidationError("gen_synthetic1: need n >= 2 and m >= 2");
    if (d < 1)
        throw ValidationError("gen_synthetic1: need d >= 1");

    Rng rng(seed);
    Matrix src(n, d), tgt(m, d);
    for (Index i = 0; i < n; i++)
        for (Index k = 0; k < d; k++)
            src(i, k) = rng.normal();
    for (Index j = 0; j < m; j++)
        for (Index k = 0; k < d; k++)
        {
            const double z = rng.normal();
            tgt(j, k) = (variant == Synth1Variant::iid) ? z : 1.0 + 0.5 * z;
        }

    Matrix M(n, m);
    for (Index j = 0; j < m; j++)
        for (Index i = 0; i < n; i++)
            M(i, j) = (src.row(i) - tgt.row(j)).squaredNorm();

    ProblemInstance p;
    p.n = n;
    p.m = m;
    p.M = normalize_cost(M);
    p.a = Vector::Constant(n, 1.0 / static_cast<double>(n));
    p.b = Vector::Constant(m, 1.0 / static_cast<double>(m));
    p.eta = eta;
    validate_problem(p);
    return p;
}

// Exponential source density against a two-component Gaussian mixture target,
// both discretized pointwise on uniform grids over [0, 5] (endpoints included).
inline ProblemInstance gen_synthetic2(Index n, Index m, double eta = 0.001)
{
    if (n < 2 || m < 2)
        throw ValidationError("gen_synthetic2: need n >= 2 and m >= 2");

    Vector x(n), y(m);
    for (Index i = 0; i < n; i++)
        x[i] = 5.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    for (Index j = 0; j < m; j++)
        y[j] = 5.0 * static_cast<double>(j) / static_cast<double>(m - 1);

    auto gauss = [](double t, double mu, double var) {
        return std::exp(-(t - mu) * (t - mu) / (2.0 * var)) /
            std::sqrt(2.0 * std::numbers::pi * var);
    };

    Vector a(n), b(m);
    for (Index i = 0; i < n; i++)
        a[i] = std::exp(-x[i]);
    for (Index j = 0; j < m; j++)
        b[j] = 0.2 * gauss(y[j], 1.0, 0.04) + 0.8 * gauss(y[j], 3.0, 0.25);
    a /= a.sum();
    b /= b.sum();

    Matrix M(n, m);
    for (Index j = 0; j < m; j++)
        for (Index i = 0; i < n; i++)
            M(i, j) = (x[i] - y[j]) * (x[i] - y[j]);

    ProblemInstance p;
    p.n = n;
    p.m = m;
    p.M = normalize_cost(M);
    p.a = std::move(a);
    p.b = std::move(b);
    p.eta = eta;
    validate_problem(p);
    return p;
}

namespace detail {

// Little-endian primitives for the ROTB container

inline void put_u64(std::ostream& os, std::uint64_t v)
{
    char buf[8];
    for (int i = 0; i < 8; i++)
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, 8);
}

inline void put_f64(std::ostream& os, double v)
{
    put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t get_u64(std::istream& is)
{
    char buf[8];
    is.read(buf, 8);
    if (!is)
        throw TruncationError("load_problem: truncated payload");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; i++)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is)
{
    return std::bit_cast<double>(get_u64(is));
}

}  // namespace detail

// ROTB container: magic "ROTB", version byte 1, then little-endian
// u64 n, u64 m, f64 eta, n doubles (a), m doubles (b), n*m doubles (M,
// row-major). Round trips are bit exact.
inline void save_problem(const ProblemInstance& p, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("save_problem: cannot open " + path);
    os.write("ROTB", 4);
    os.put(static_cast<char>(1));
    detail::put_u64(os, static_cast<std::uint64_t>(p.n));
    detail::put_u64(os, static_cast<std::uint64_t>(p.m));
    detail::put_f64(os, p.eta);
    for (Index i = 0; i < p.n; i++)
        detail::put_f64(os, p.a[i]);
    for (Index j = 0; j < p.m; j++)
        detail::put_f64(os, p.b[j]);
    for (Index i = 0; i < p.n; i++)
        for (Index j = 0; j < p.m; j++)
            detail::put_f64(os, p.M(i, j));
    os.flush();
    if (!os)
        throw IoError("save_problem: write failed for " + path);
}

inline ProblemInstance load_problem(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("load_problem: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is)
        throw TruncationError("load_problem: truncated header");
    if (std::string(magic, 4) != "ROTB")
        throw FormatError("load_problem: bad magic");
    const int version = is.get();
    if (version == std::char_traits<char>::eof())
        throw TruncationError("load_problem: truncated header");
    if (version != 1)
        throw FormatError("load_problem: unsupported version");

    ProblemInstance p;
    const std::uint64_t n = detail::get_u64(is);
    const std::uint64_t m = detail::get_u64(is);
    if (n == 0 || m == 0 || n > (1u << 24) || m > (1u << 24))
        throw FormatError("load_problem: implausible dimensions");
    p.n = static_cast<Index>(n);
    p.m = static_cast<Index>(m);
    p.eta = detail::get_f64(is);
    p.a.resize(p.n);
    p.b.resize(p.m);
    p.M.resize(p.n, p.m);
    for (Index i = 0; i < p.n; i++)
        p.a[i] = detail::get_f64(is);
    for (Index j = 0; j < p.m; j++)
        p.b[j] = detail::get_f64(is);
    for (Index i = 0; i < p.n; i++)
        for (Index j = 0; j < p.m; j++)
            p.M(i, j) = detail::get_f64(is);
    validate_problem(p);
    return p;
}

// Generator selector used by the CLI and the benchmark harness
struct GeneratorSpec
{
    std::string kind = "synth2";  // synth1-iid | synth1-diff | synth2 | file
    Index n = 64;
    Index m = 64;
    Index d = 2;
    std::uint64_t seed = 0;
    std::string path;  // kind == file
};

inline ProblemInstance make_problem(const GeneratorSpec& spec, double eta)
{
    if (spec.kind == "synth1-iid")
        return gen_synthetic1(spec.n, spec.m, Synth1Variant::iid, spec.d, spec.seed, eta);
    if (spec.kind == "synth1-diff")
        return gen_synthetic1(spec.n, spec.m, Synth1Variant::diff, spec.d, spec.seed, eta);
    if (spec.kind == "synth2")
        return gen_synthetic2(spec.n, spec.m, eta);
    if (spec.kind == "file")
    {
        ProblemInstance p = load_problem(spec.path);
        if (eta > 0.0)
            p.eta = eta;
        validate_problem(p);
        return p;
    }
    throw ValidationError("make_problem: unknown generator kind '" + spec.kind + "'");
}

inline std::string describe(const GeneratorSpec& spec)
{
    std::ostringstream os;
    if (spec.kind == "file")
    {
        os << "file:" << spec.path;
        return os.str();
    }
    os << spec.kind << " " << spec.n << "x" << spec.m;
    if (spec.kind != "synth2")
        os << " d=" << spec.d << " seed=" << spec.seed;
    return os.str();
}

}  // namespace regot

#endif  // REGOT_PROBLEM_H
