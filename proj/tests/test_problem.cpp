#include <catch2/catch.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "oracles.h"
#include "regot/regot.h"

using namespace regot;

namespace {

bool bit_equal(const Matrix& A, const Matrix& B)
{
    if (A.rows() != B.rows() || A.cols() != B.cols())
        return false;
    return std::memcmp(A.data(), B.data(),
                       sizeof(double) * static_cast<std::size_t>(A.size())) == 0;
}

bool bit_equal(const Vector& a, const Vector& b)
{
    if (a.size() != b.size())
        return false;
    return std::memcmp(a.data(), b.data(),
                       sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

void check_instance_invariants(const ProblemInstance& p)
{
    REQUIRE(p.a.minCoeff() > 0.0);
    REQUIRE(p.b.minCoeff() > 0.0);
    REQUIRE(std::abs(p.a.sum() - 1.0) <= 1e-12);
    REQUIRE(std::abs(p.b.sum() - 1.0) <= 1e-12);
    REQUIRE(p.M.minCoeff() >= 0.0);
    REQUIRE(p.M.maxCoeff() == 1.0);
}

std::string temp_path(const char* name)
{
    return std::string("regot_test_") + name;
}

}  // namespace

TEST_CASE("normalize_cost divides by the maximum entry", "[problem]")
{
    Matrix M(2, 2);
    M << 2, 4, 1, 3;
    const Matrix N = normalize_cost(M);
    REQUIRE(N(0, 0) == 0.5);
    REQUIRE(N(0, 1) == 1.0);
    REQUIRE(N(1, 0) == 0.25);
    REQUIRE(N(1, 1) == 0.75);
}

TEST_CASE("normalize_cost of a constant matrix is all ones", "[problem]")
{
    const Matrix M = Matrix::Constant(3, 2, 0.37);
    const Matrix N = normalize_cost(M);
    REQUIRE((N.array() == 1.0).all());
}

TEST_CASE("normalize_cost rejects nonpositive matrices", "[problem]")
{
    REQUIRE_THROWS_AS(normalize_cost(Matrix::Zero(2, 2)), DegenerateCostError);
    REQUIRE_THROWS_AS(normalize_cost(Matrix::Constant(2, 2, -1.0)), DegenerateCostError);
}

TEST_CASE("synthetic1 has uniform marginals and normalized costs", "[problem]")
{
    const ProblemInstance p = gen_synthetic1(4, 3, Synth1Variant::iid, 2, 7, 0.1);
    REQUIRE(p.n == 4);
    REQUIRE(p.m == 3);
    REQUIRE((p.a.array() == 0.25).all());
    REQUIRE((p.b.array() == 1.0 / 3.0).all());
    check_instance_invariants(p);
}

TEST_CASE("synthetic1 is deterministic in the seed", "[problem]")
{
    const ProblemInstance p1 = gen_synthetic1(16, 12, Synth1Variant::diff, 3, 42, 0.05);
    const ProblemInstance p2 = gen_synthetic1(16, 12, Synth1Variant::diff, 3, 42, 0.05);
    REQUIRE(bit_equal(p1.M, p2.M));
    REQUIRE(bit_equal(p1.a, p2.a));
    REQUIRE(bit_equal(p1.b, p2.b));

    const ProblemInstance p3 = gen_synthetic1(16, 12, Synth1Variant::diff, 3, 43, 0.05);
    REQUIRE(!bit_equal(p1.M, p3.M));
}

TEST_CASE("synthetic1 diff variant shifts the target cloud", "[problem]")
{
    // target coordinates have mean 1 and sd 0.5; at 600x400 the sample means
    // sit well within a few standard errors
    const Index n = 600, m = 400, d = 2;
    regot::Rng rng(5);
    Matrix src(n, d), tgt(m, d);
    for (Index i = 0; i < n; i++)
        for (Index k = 0; k < d; k++)
            src(i, k) = rng.normal();
    for (Index j = 0; j < m; j++)
        for (Index k = 0; k < d; k++)
            tgt(j, k) = 1.0 + 0.5 * rng.normal();
    REQUIRE(std::abs(src.mean()) < 0.1);
    REQUIRE(std::abs(tgt.mean() - 1.0) < 0.1);
    REQUIRE(std::abs(tgt.array().pow(2).mean() - (1.0 + 0.25)) < 0.1);

    const ProblemInstance p = gen_synthetic1(64, 48, Synth1Variant::diff, 2, 5, 0.1);
    check_instance_invariants(p);
}

TEST_CASE("synthetic1 at the smallest benchmark size is valid", "[problem]")
{
    const ProblemInstance p = gen_synthetic1(1600, 1200, Synth1Variant::iid, 2, 1, 0.001);
    REQUIRE(p.n == 1600);
    REQUIRE(p.m == 1200);
    check_instance_invariants(p);
}

TEST_CASE("synthetic2 source density decreases along the grid", "[problem]")
{
    const ProblemInstance p = gen_synthetic2(64, 64, 0.01);
    for (Index i = 0; i + 1 < p.n; i++)
        REQUIRE(p.a[i] > p.a[i + 1]);
    check_instance_invariants(p);
}

TEST_CASE("synthetic2 target has modes at the mixture means", "[problem]")
{
    const ProblemInstance p = gen_synthetic2(32, 101, 0.01);
    std::vector<Index> maxima;
    for (Index j = 1; j + 1 < p.m; j++)
        if (p.b[j] > p.b[j - 1] && p.b[j] > p.b[j + 1])
            maxima.push_back(j);
    REQUIRE(maxima.size() == 2);
    // grid over [0, 5] with 101 points: y = 0.05 j, so modes at 1 and 3
    REQUIRE(maxima[0] == 20);
    REQUIRE(maxima[1] == 60);
}

TEST_CASE("synthetic2 cost vanishes where the grids coincide", "[problem]")
{
    const ProblemInstance p = gen_synthetic2(11, 11, 0.01);
    for (Index i = 0; i < 11; i++)
        REQUIRE(p.M(i, i) == 0.0);
    const ProblemInstance q = gen_synthetic2(6, 11, 0.01);
    REQUIRE(q.M(0, 0) == 0.0);
    REQUIRE(q.M(5, 10) == 0.0);  // both grids end at 5
}

TEST_CASE("save/load round trip is bit exact", "[problem]")
{
    const std::string path = temp_path("roundtrip.rotb");
    const ProblemInstance p = gen_synthetic1(13, 9, Synth1Variant::iid, 2, 11, 0.07);
    save_problem(p, path);
    const ProblemInstance q = load_problem(path);
    REQUIRE(q.n == p.n);
    REQUIRE(q.m == p.m);
    REQUIRE(std::memcmp(&q.eta, &p.eta, sizeof(double)) == 0);
    REQUIRE(bit_equal(q.M, p.M));
    REQUIRE(bit_equal(q.a, p.a));
    REQUIRE(bit_equal(q.b, p.b));
    std::remove(path.c_str());
}

TEST_CASE("load rejects bad magic", "[problem]")
{
    const std::string path = temp_path("badmagic.rotb");
    {
        std::ofstream os(path, std::ios::binary);
        os << "XXXX" << std::string(64, '\0');
    }
    REQUIRE_THROWS_AS(load_problem(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("load rejects unknown version", "[problem]")
{
    const std::string good = temp_path("ver_good.rotb");
    const std::string bad = temp_path("ver_bad.rotb");
    save_problem(gen_synthetic2(4, 4, 0.1), good);
    {
        std::ifstream is(good, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
        bytes[4] = 2;
        std::ofstream os(bad, std::ios::binary);
        os << bytes;
    }
    REQUIRE_THROWS_AS(load_problem(bad), FormatError);
    std::remove(good.c_str());
    std::remove(bad.c_str());
}

TEST_CASE("load rejects truncated payloads", "[problem]")
{
    const std::string good = temp_path("trunc_good.rotb");
    const std::string bad = temp_path("trunc_bad.rotb");
    save_problem(gen_synthetic2(6, 5, 0.1), good);
    {
        std::ifstream is(good, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
        std::ofstream os(bad, std::ios::binary);
        os << bytes.substr(0, bytes.size() / 2);
    }
    REQUIRE_THROWS_AS(load_problem(bad), TruncationError);
    std::remove(good.c_str());
    std::remove(bad.c_str());
}

TEST_CASE("load rejects marginal invariant violations", "[problem]")
{
    const std::string path = temp_path("zeromass.rotb");
    ProblemInstance p = gen_synthetic2(5, 5, 0.1);
    p.a[0] = 0.0;
    p.a[1] = 2.0 / 5.0;  // keep the sum at 1 so only positivity fails
    save_problem(p, path);
    REQUIRE_THROWS_AS(load_problem(path), ValidationError);
    std::remove(path.c_str());
}

TEST_CASE("generator invariants hold across random specs", "[problem]")
{
    regot::Rng rng(99);
    for (int trial = 0; trial < 10; trial++)
    {
        const Index n = 2 + static_cast<Index>(rng.uniform() * 40);
        const Index m = 2 + static_cast<Index>(rng.uniform() * 40);
        const auto seed = static_cast<std::uint64_t>(rng.uniform() * 1e6);
        check_instance_invariants(gen_synthetic1(n, m, Synth1Variant::iid, 2, seed, 0.01));
        check_instance_invariants(gen_synthetic1(n, m, Synth1Variant::diff, 3, seed, 0.01));
        check_instance_invariants(gen_synthetic2(n, m, 0.01));
    }
}

TEST_CASE("generators reject degenerate sizes", "[problem]")
{
    REQUIRE_THROWS_AS(gen_synthetic1(1, 5, Synth1Variant::iid, 2, 0, 0.1), ValidationError);
    REQUIRE_THROWS_AS(gen_synthetic1(5, 5, Synth1Variant::iid, 0, 0, 0.1), ValidationError);
    REQUIRE_THROWS_AS(gen_synthetic2(5, 1, 0.1), ValidationError);
}
