#include "isac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace isac::linalg {

namespace {

MatrixXcd orthonormal_basis(const MatrixXcd& x) {
    Eigen::HouseholderQR<MatrixXcd> qr(x);
    return qr.householderQ() * MatrixXcd::Identity(x.rows(), x.cols());
}

MatrixXcd start_block(Eigen::Index rows, Eigen::Index cols) {
    // Fixed seed: the start block is part of the algorithm, not of the data.
    std::mt19937_64 rng(0x15AC5E45EULL);
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXcd omega(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = g(rng);
            omega(i, j) = cd(re, g(rng));
        }
    }
    return omega;
}

void check_rank(const MatrixXcd& a, int rank) {
    const Eigen::Index min_dim = std::min(a.rows(), a.cols());
    if (rank < 1 || rank > min_dim) {
        throw ConfigError("truncation rank " + std::to_string(rank) + " outside 1.." +
                          std::to_string(min_dim));
    }
}

}  // namespace

TruncatedSvd dense_truncated_svd(const MatrixXcd& a, int rank) {
    check_rank(a, rank);
    Eigen::BDCSVD<MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    TruncatedSvd out;
    out.u = svd.matrixU().leftCols(rank);
    out.v = svd.matrixV().leftCols(rank);
    out.sigma = svd.singularValues().head(rank);
    out.spectrum = svd.singularValues();
    return out;
}

TruncatedSvd truncated_svd(const MatrixXcd& a, int rank, const TruncatedSvdOptions& opts) {
    check_rank(a, rank);
    const Eigen::Index min_dim = std::min(a.rows(), a.cols());
    const Eigen::Index block = std::min<Eigen::Index>(rank + opts.oversampling, min_dim);
    if (2 * block >= min_dim) {
        return dense_truncated_svd(a, rank);
    }

    MatrixXcd q = orthonormal_basis(a * start_block(a.cols(), block));
    for (int it = 1; it <= opts.max_iterations; ++it) {
        // bh = B^H with B = Q^H A; its SVD gives the Ritz triplets.
        const MatrixXcd bh = a.adjoint() * q;
        Eigen::BDCSVD<MatrixXcd> small(bh, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const VectorXd& s = small.singularValues();

        TruncatedSvd out;
        out.sigma = s.head(rank);
        out.v = small.matrixU().leftCols(rank);
        out.u = q * small.matrixV().leftCols(rank);
        out.spectrum = s;
        out.iterations = it;

        const double scale = s(0);
        if (!(scale > 0.0)) {
            return out;  // zero matrix; every triplet is as good as any other
        }
        const MatrixXcd residual = a * out.v - out.u * out.sigma.asDiagonal();
        const double worst = residual.colwise().norm().maxCoeff();
        if (worst <= opts.tolerance * scale) {
            return out;
        }
        q = orthonormal_basis(a * orthonormal_basis(bh));
    }
    return dense_truncated_svd(a, rank);
}

double wrap_to_pi(double x) {
    double r = std::remainder(x, 2.0 * kPi);  // [-pi, pi]
    if (r <= -kPi) {
        r += 2.0 * kPi;
    }
    return r;
}

std::vector<double> unwrap(const std::vector<double>& phase) {
    std::vector<double> out(phase.size());
    if (phase.empty()) {
        return out;
    }
    out[0] = phase[0];
    for (std::size_t i = 1; i < phase.size(); ++i) {
        double d = phase[i] - phase[i - 1];
        d = d - 2.0 * kPi * std::floor((d + kPi) / (2.0 * kPi));
        out[i] = out[i - 1] + d;
    }
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ConfigError("line fit needs at least two paired samples");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw ConfigError("line fit needs distinct abscissae");
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

}  // namespace isac::linalg
