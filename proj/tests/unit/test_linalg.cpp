#include <doctest.h>

#include <random>

#include "isac/linalg.hpp"

using namespace isac;

namespace {

MatrixXcd low_rank(int rows, int cols, const std::vector<double>& sv, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    auto random = [&](int r, int c) {
        MatrixXcd m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = cd(g(rng), g(rng));
        return m;
    };
    const int k = static_cast<int>(sv.size());
    const MatrixXcd u = Eigen::HouseholderQR<MatrixXcd>(random(rows, k)).householderQ() *
                        MatrixXcd::Identity(rows, k);
    const MatrixXcd v = Eigen::HouseholderQR<MatrixXcd>(random(cols, k)).householderQ() *
                        MatrixXcd::Identity(cols, k);
    VectorXd s(k);
    for (int i = 0; i < k; ++i) s(i) = sv[i];
    return u * s.asDiagonal() * v.adjoint();
}

// Principal angle between the two column spaces, via singular values of U1^H U2.
double subspace_gap(const MatrixXcd& a, const MatrixXcd& b) {
    const VectorXd c = Eigen::JacobiSVD<MatrixXcd>(a.adjoint() * b).singularValues();
    return 1.0 - c.minCoeff();
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("truncated SVD agrees with the dense decomposition") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int rank : {1, 2, 3}) {
        MatrixXcd a = low_rank(200, 300, {5.0, 2.0, 1.0, 0.3}, rng);
        MatrixXcd noise(200, 300);
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = 1e-3 * cd(g(rng), g(rng));
        a += noise;
        const auto t = linalg::truncated_svd(a, rank);
        const Eigen::BDCSVD<MatrixXcd> ref(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        REQUIRE(t.sigma.size() == rank);
        CHECK(t.u.cols() == rank);
        CHECK(t.v.cols() == rank);
        for (int i = 0; i < rank; ++i) {
            CHECK(std::abs(t.sigma(i) - ref.singularValues()(i)) < 1e-10 * ref.singularValues()(0));
        }
        CHECK(subspace_gap(t.u, ref.matrixU().leftCols(rank)) < 1e-10);
        CHECK(subspace_gap(t.v, ref.matrixV().leftCols(rank)) < 1e-10);
        CHECK((a * t.v - t.u * t.sigma.asDiagonal()).norm() < 1e-10 * t.sigma(0) * rank);
        CHECK((t.u.adjoint() * t.u - MatrixXcd::Identity(rank, rank)).norm() < 1e-12);
        CHECK(t.spectrum.size() >= rank);
    }
}

TEST_CASE("truncated SVD is deterministic") {
    std::mt19937_64 rng(2);
    const MatrixXcd a = low_rank(120, 90, {3.0, 1.0}, rng);
    const auto x = linalg::truncated_svd(a, 2);
    const auto y = linalg::truncated_svd(a, 2);
    CHECK(x.sigma == y.sigma);
    CHECK(x.u == y.u);
}

TEST_CASE("dense fallback on small matrices") {
    std::mt19937_64 rng(3);
    const MatrixXcd a = low_rank(6, 5, {2.0, 1.0, 0.5}, rng);
    const auto t = linalg::truncated_svd(a, 3);
    CHECK(t.iterations == 0);
    CHECK(std::abs(t.sigma(2) - 0.5) < 1e-12);
    CHECK_THROWS_AS(linalg::truncated_svd(a, 6), ConfigError);
    CHECK_THROWS_AS(linalg::truncated_svd(a, 0), ConfigError);
}

TEST_CASE("phase unwrapping") {
    std::vector<double> truth;
    std::vector<double> wrapped;
    for (int i = 0; i < 40; ++i) {
        truth.push_back(0.3 - 2.9 * i);
        wrapped.push_back(linalg::wrap_to_pi(truth.back()));
    }
    const auto u = linalg::unwrap(wrapped);
    for (int i = 0; i < 40; ++i) {
        CHECK(std::abs(u[i] - truth[i]) < 1e-9);
    }
    CHECK(linalg::unwrap({}).empty());
}

TEST_CASE("wrap to the principal value") {
    CHECK(linalg::wrap_to_pi(kPi) == doctest::Approx(kPi));
    CHECK(linalg::wrap_to_pi(-kPi) == doctest::Approx(kPi));
    CHECK(linalg::wrap_to_pi(3.0 * kPi + 0.1) == doctest::Approx(-kPi + 0.1));
    CHECK(linalg::wrap_to_pi(0.0) == 0.0);
}

TEST_CASE("least-squares line") {
    const auto f = linalg::fit_line({0, 1, 2, 3}, {1.0, 3.0, 5.0, 7.0});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK_THROWS_AS(linalg::fit_line({1.0}, {2.0}), ConfigError);
    CHECK_THROWS_AS(linalg::fit_line({1.0, 2.0}, {2.0}), ConfigError);
}

}
