#pragma once

#include <vector>

#include "isac/types.hpp"

namespace isac::linalg {

/// Leading singular triplets of a matrix, singular values descending.
struct TruncatedSvd {
    MatrixXcd u;     // rows x rank
    VectorXd sigma;  // rank
    MatrixXcd v;     // cols x rank
    /// Leading part of the spectrum that was resolved (at least `rank` values).
    VectorXd spectrum;
    int iterations = 0;  // 0 when the dense fallback was used
};

struct TruncatedSvdOptions {
    int oversampling = 10;
    int max_iterations = 200;
    double tolerance = 1e-13;  // residual relative to sigma_1
};

/// Rank-`rank` truncated SVD by block subspace iteration with Rayleigh-Ritz
/// extraction. Iterates until every retained triplet satisfies
/// ||A v - sigma u|| <= tol * sigma_1, so the result agrees with a dense SVD
/// up to that tolerance. The starting block is fixed, so the output is a
/// deterministic function of `a`. Falls back to a dense BDCSVD when the
/// block would cover most of the matrix or iteration does not converge.
TruncatedSvd truncated_svd(const MatrixXcd& a, int rank, const TruncatedSvdOptions& opts = {});

/// Dense reference implementation (BDCSVD); used as the fallback.
TruncatedSvd dense_truncated_svd(const MatrixXcd& a, int rank);

/// Phase unwrapping of a sequence: successive differences mapped to [-pi, pi).
std::vector<double> unwrap(const std::vector<double>& phase);

/// Principal value in (-pi, pi].
double wrap_to_pi(double x);

/// Least-squares line fit y = intercept + slope * x.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace isac::linalg
