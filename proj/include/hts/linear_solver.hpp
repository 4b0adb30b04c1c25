// SPDX-License-Identifier: Apache-2.0

#pragma once

// The Newton Jacobian A + W(E) is symmetric positive definite: psi is
// pointwise PSD and symmetric (the rank-one term couples e with the parallel
// vector Lambda(e)), so a sparse direct Cholesky factorization applies.
// CHOLMOD's supernodal LLT is used when available, with Eigen's simplicial
// LDLT as the portable fallback. Both are deterministic for a fixed ordering.

#include <Eigen/SparseCholesky>
#if defined(HTS_USE_CHOLMOD)
#include <Eigen/CholmodSupport>
#endif

#include "hts/types.hpp"

namespace hts {

#if defined(HTS_USE_CHOLMOD)
using DirectSolver = Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower>;
#else
using DirectSolver = Eigen::SimplicialLDLT<SpMat, Eigen::Lower>;
#endif

} // namespace hts
