#pragma once

// Serial, straightforward versions of the parallel kernels. They go through
// the single-pair public API (squared_distance, h_term) instead of the fused
// feature-matrix paths and exist to check those paths in tests and
// benchmarks.

#include <span>

#include "kccsd/kernels.hpp"
#include "kccsd/statistics.hpp"

namespace kccsd::reference {

/// Gram values of a resolved kernel (sigma, ground and frozen base set).
/// Sampled MMD is not supported: its draws are tied to the fast path.
Matrix gram_values(const DistributionKernel& resolved, std::span<const ScoredDensity> models);

Matrix kccsd_matrix(const Matrix& k_gram, const ScalarKernel& l, std::span<const Observation> data);

/// Average over all ordered pairs i != j.
double u_statistic(const Matrix& m);

/// Same replicate streams as the parallel version, evaluated one after the
/// other with a full double sum.
BootstrapResult wild_bootstrap(const Matrix& m, std::size_t n_bootstrap, double alpha,
                               RandomStream& stream);

}  // namespace kccsd::reference
