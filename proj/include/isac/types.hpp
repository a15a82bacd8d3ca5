#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace isac {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr cd kJ{0.0, 1.0};

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Error taxonomy. Everything derives from Error so callers that only care
// about "estimation failed" can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// LS pilot Gram matrix is singular on some subcarrier.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, int subcarrier)
        : Error(what), subcarrier_(subcarrier) {}
    int subcarrier() const { return subcarrier_; }

private:
    int subcarrier_;
};

/// Truncated SVD found fewer than M usable singular values.
class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(const std::string& what, VectorXd spectrum)
        : Error(what), spectrum_(std::move(spectrum)) {}
    const VectorXd& spectrum() const { return spectrum_; }

private:
    VectorXd spectrum_;
};

class IllConditionedError : public Error {
public:
    using Error::Error;
};

class TrackingError : public Error {
public:
    using Error::Error;
};

class DegenerateSceneError : public Error {
public:
    DegenerateSceneError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

class GridTooLargeError : public Error {
public:
    GridTooLargeError(const std::string& what, double log10_ops)
        : Error(what), log10_ops_(log10_ops) {}
    double log10_operations() const { return log10_ops_; }

private:
    double log10_ops_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace isac
