#pragma once

#include "loglearn/tensor.hpp"

namespace loglearn {

struct SvdResult {
    Tensor u;  // [m, r] with r = min(m, n)
    Tensor s;  // [r], descending, all >= 0
    Tensor v;  // [n, r]
};

// Thin SVD of a rank-2 tensor via one-sided Jacobi. Throws NumericError on
// non-finite input or non-convergence after a bounded number of sweeps.
SvdResult svd(const Tensor& a);

}  // namespace loglearn
