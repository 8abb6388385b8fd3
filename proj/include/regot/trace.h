#ifndef REGOT_TRACE_H
#define REGOT_TRACE_H

#include <string>
#include <vector>

#include "core.h"

namespace regot {

struct TraceRow
{
    long iter = 0;
    double wall_ms = 0.0;
    double f = 0.0;
    double marginal_error = 0.0;
    double duality_gap = 0.0;
};

// Per-iteration record of a solver run. append() enforces the ordering
// invariants: iter strictly increasing, wall_ms nondecreasing.
struct SolverTrace
{
    std::string algo;
    std::string problem;
    double eta = 0.0;
    std::string config_hash;
    std::vector<TraceRow> rows;

    void append(const TraceRow& r)
    {
        if (!rows.empty())
        {
            if (r.iter <= rows.back().iter)
                throw ValidationError("SolverTrace: iter must be strictly increasing");
            if (r.wall_ms < rows.back().wall_ms)
                throw ValidationError("SolverTrace: wall_ms must be nondecreasing");
        }
        rows.push_back(r);
    }
};

}  // namespace regot

#endif  // REGOT_TRACE_H
