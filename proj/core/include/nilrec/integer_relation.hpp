#pragma once

#include <optional>
#include <vector>

#include "nilrec/exact_real.hpp"

namespace nilrec {

// Kernel of the coefficient matrix of xs, as primitive integer vectors.
std::vector<IntVec> integer_kernel_basis(const std::vector<ExactReal>& xs);

// Exact inputs: decided by the rational kernel; `bound` is ignored.
std::optional<IntVec> integer_relation(const std::vector<ExactReal>& xs, Int bound);
// Floating inputs: smallest max-norm relation with |sum k_i x_i| <= tol.
std::optional<IntVec> integer_relation(const std::vector<double>& xs, Int bound, double tol);
// Dispatches on the mode; mixing exact and floating values throws MixedModeError.
std::optional<IntVec> integer_relation(const std::vector<Scalar>& xs, Int bound,
                                       double tol = 1e-12);

}  // namespace nilrec
