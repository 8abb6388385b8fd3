#ifndef REGOT_REGOT_H
#define REGOT_REGOT_H

#include "core.h"
#include "problem.h"
#include "dual.h"
#include "trace.h"
#include "sinkhorn.h"
#include "sparsity.h"
#include "sparse_chol.h"
#include "splr.h"
#include "bench.h"

#endif  // REGOT_REGOT_H
