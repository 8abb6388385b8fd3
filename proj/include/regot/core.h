#ifndef REGOT_CORE_H
#define REGOT_CORE_H

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// One exception type per failure class so callers can dispatch on the kind
// of failure without parsing messages.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DegenerateCostError : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class TruncationError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class OracleSizeError : public Error { public: using Error::Error; };
class StructureError : public Error { public: using Error::Error; };
class NotPositiveDefiniteError : public Error { public: using Error::Error; };
class DirectionError : public Error { public: using Error::Error; };
class LineSearchError : public Error { public: using Error::Error; };
class PlotError : public Error { public: using Error::Error; };

namespace detail {

// FNV-1a, used for pattern/config fingerprints
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL)
{
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; i++)
    {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a_span(const std::vector<int>& v, std::uint64_t h)
{
    return v.empty() ? h : fnv1a(v.data(), v.size() * sizeof(int), h);
}

inline std::string hash_hex(std::uint64_t h)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; i--, h >>= 4)
        s[i] = digits[h & 0xf];
    return s;
}

// Pairwise sum by recursive halving; deterministic and O(log n) error growth
inline double pairwise_sum(const double* x, std::ptrdiff_t n)
{
    if (n <= 32)
    {
        double s = 0.0;
        for (std::ptrdiff_t i = 0; i < n; i++)
            s += x[i];
        return s;
    }
    const std::ptrdiff_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

// Binary-counter accumulator over fixed-width blocks. Feeding N blocks and
// folding produces the pairwise-tree sum of the blocks, independent of N's
// factorization. Level L holds the sum of 2^L consecutive blocks.
class PairwiseAcc
{
public:
    explicit PairwiseAcc(std::size_t width) : m_width(width) {}

    void add(const double* block)
    {
        std::vector<double> cur(block, block + m_width);
        std::size_t level = 0;
        while (level < m_levels.size() && m_occupied[level])
        {
            std::vector<double>& lv = m_levels[level];
            for (std::size_t i = 0; i < m_width; i++)
                cur[i] += lv[i];
            m_occupied[level] = false;
            level++;
        }
        if (level == m_levels.size())
        {
            m_levels.push_back(std::move(cur));
            m_occupied.push_back(true);
        } else {
            m_levels[level] = std::move(cur);
            m_occupied[level] = true;
        }
    }

    // Fold remaining levels low-to-high into out[0..width)
    void finish(double* out) const
    {
        for (std::size_t i = 0; i < m_width; i++)
            out[i] = 0.0;
        for (std::size_t level = 0; level < m_levels.size(); level++)
        {
            if (!m_occupied[level])
                continue;
            const std::vector<double>& lv = m_levels[level];
            for (std::size_t i = 0; i < m_width; i++)
                out[i] += lv[i];
        }
    }

private:
    std::size_t m_width;
    std::vector<std::vector<double>> m_levels;
    std::vector<bool> m_occupied;
};

}  // namespace detail

}  // namespace regot

#endif  // REGOT_CORE_H
