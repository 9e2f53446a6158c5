#include "loglearn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace loglearn {

namespace {

// One-sided Jacobi on the columns of a (m >= n assumed by the caller).
SvdResult svd_tall(const Tensor& a) {
    int64_t m = a.rows(), n = a.cols();
    std::vector<double> b(a.values());   // working copy, m x n
    std::vector<double> v(static_cast<size_t>(n * n), 0.0);
    for (int64_t i = 0; i < n; ++i) v[static_cast<size_t>(i * n + i)] = 1.0;

    const double tol = 1e-14;
    const int max_sweeps = 60;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (int64_t p = 0; p < n - 1; ++p)
            for (int64_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int64_t i = 0; i < m; ++i) {
                    double bp = b[static_cast<size_t>(i * n + p)];
                    double bq = b[static_cast<size_t>(i * n + q)];
                    alpha += bp * bp;
                    beta += bq * bq;
                    gamma += bp * bq;
                }
                if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                converged = false;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = std::copysign(1.0, zeta) /
                           (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (int64_t i = 0; i < m; ++i) {
                    double bp = b[static_cast<size_t>(i * n + p)];
                    double bq = b[static_cast<size_t>(i * n + q)];
                    b[static_cast<size_t>(i * n + p)] = c * bp - s * bq;
                    b[static_cast<size_t>(i * n + q)] = s * bp + c * bq;
                }
                for (int64_t i = 0; i < n; ++i) {
                    double vp = v[static_cast<size_t>(i * n + p)];
                    double vq = v[static_cast<size_t>(i * n + q)];
                    v[static_cast<size_t>(i * n + p)] = c * vp - s * vq;
                    v[static_cast<size_t>(i * n + q)] = s * vp + c * vq;
                }
            }
    }
    if (!converged) throw NumericError("svd: Jacobi sweeps did not converge");

    std::vector<double> sigma(static_cast<size_t>(n));
    for (int64_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int64_t i = 0; i < m; ++i) {
            double bv = b[static_cast<size_t>(i * n + j)];
            acc += bv * bv;
        }
        sigma[static_cast<size_t>(j)] = std::sqrt(acc);
    }

    // Sort descending; stable on ties so results are deterministic.
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int64_t x, int64_t y) {
        return sigma[static_cast<size_t>(x)] > sigma[static_cast<size_t>(y)];
    });

    SvdResult out;
    out.u = Tensor({m, n});
    out.s = Tensor({n});
    out.v = Tensor({n, n});
    for (int64_t jj = 0; jj < n; ++jj) {
        int64_t j = order[static_cast<size_t>(jj)];
        double sg = sigma[static_cast<size_t>(j)];
        out.s[jj] = sg;
        for (int64_t i = 0; i < m; ++i)
            out.u.at(i, jj) = sg > 0.0 ? b[static_cast<size_t>(i * n + j)] / sg : 0.0;
        for (int64_t i = 0; i < n; ++i) out.v.at(i, jj) = v[static_cast<size_t>(i * n + j)];
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    Tensor out({a.cols(), a.rows()});
    for (int64_t i = 0; i < a.rows(); ++i)
        for (int64_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

}  // namespace

SvdResult svd(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("svd: input must be rank 2");
    if (!a.all_finite()) throw NumericError("svd: non-finite input");
    if (a.rows() >= a.cols()) return svd_tall(a);
    SvdResult t = svd_tall(transpose(a));
    return SvdResult{t.v, t.s, t.u};
}

}  // namespace loglearn
