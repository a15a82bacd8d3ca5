#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isac/chanest.hpp"
#include "isac/linalg.hpp"

namespace isac {

/// Sub-array (transmit, receive) and sub-symbol (subcarrier) sizes of the
/// three-level Hankel tensorization.
struct HankelParams {
    int sub_tx = 0;
    int sub_rx = 0;
    int sub_sc = 0;

    /// Nearest integer to half of each dimension.
    static HankelParams defaults(const ArrayConfig& arr, const OfdmConfig& ofdm);

    int count_tx(const ArrayConfig& arr) const { return arr.num_tx - sub_tx + 1; }
    int count_rx(const ArrayConfig& arr) const { return arr.num_rx - sub_rx + 1; }
    int count_sc(const OfdmConfig& ofdm) const { return ofdm.num_subcarriers - sub_sc + 1; }
    int rows() const { return sub_tx * sub_sc * sub_rx; }

    /// Throws ConfigError. When `num_paths` > 0, also checks the rank budget.
    void validate(const ArrayConfig& arr, const OfdmConfig& ofdm, int num_paths = 0) const;
};

struct PathEstimate {
    double delay = 0.0;         // s
    double aoa = 0.0;           // rad
    double aod = 0.0;           // rad
    double magnitude = 0.0;     // |alpha|
    double phase_offset = 0.0;  // rad
    std::optional<double> doppler;  // Hz
    bool inconsistent_phase = false;
};

struct EstimateSet {
    std::vector<PathEstimate> paths;  // ascending delay
    std::vector<std::string> warnings;

    int size() const { return static_cast<int>(paths.size()); }
};

namespace paraming {

/// Hankel-block-Hankel-block-Hankel matrix, (M_t M_P M_r) x (K_t K_N K_r).
/// Row ((a*M_P + c)*M_r + e) and column ((b*K_N + d)*K_r + f) hold
/// h-bar_{a+b, c+d, e+f} (0-based transmit, subcarrier, receive).
MatrixXcd build_hankel(const CsiStack& csi, const HankelParams& hp);

/// 0-based column sets S1 and S2 = S1 + K_r.
std::pair<std::vector<int>, std::vector<int>> shift_column_sets(int count_tx, int count_rx,
                                                                int count_sc);

/// (H1, H2): the Hankel columns before and after a one-subcarrier shift.
std::pair<MatrixXcd, MatrixXcd> select_submatrices(const MatrixXcd& hcal, const HankelParams& hp,
                                                   const ArrayConfig& arr,
                                                   const OfdmConfig& ofdm);

struct ToaResult {
    std::vector<double> delays;  // ascending
    VectorXcd eigenvalues;       // same order as delays
    linalg::TruncatedSvd svd;
    std::vector<std::string> warnings;
};

inline constexpr double kRankTolerance = 1e-12;
inline constexpr double kRankWarning = 1e-3;
/// Eigenvalue phases this close below zero are treated as zero delay.
inline constexpr double kPhaseSnap = 1e-12;

ToaResult estimate_toa(const MatrixXcd& h1, const MatrixXcd& h2, int num_paths,
                       const OfdmConfig& ofdm);

struct SpatialFit {
    MatrixXcd yhat;        // N_tN_r x M, LS estimate of B G
    MatrixXcd directions;  // unit columns b-hat
    VectorXd magnitudes;   // |alpha-hat|
};

SpatialFit fit_spatial(const CsiStack& csi, const std::vector<double>& delays,
                       const OfdmConfig& ofdm);

struct AngleFit {
    double aoa = 0.0;
    double aod = 0.0;
    double phase_offset = 0.0;
    double rx_slope = 0.0;  // rad per receive element
    double tx_slope = 0.0;  // rad per transmit element
    bool inconsistent_phase = false;
};

/// Unwrapped-phase plane fit of a receive-fastest spatial signature.
AngleFit regress_angles(const VectorXcd& direction, const ArrayConfig& arr,
                        const OfdmConfig& ofdm);

/// Full joint ToA/AoA/AoD chain.
EstimateSet estimate(const CsiStack& csi, const HankelParams& hp, int num_paths,
                     const ArrayConfig& arr, const OfdmConfig& ofdm);

struct DopplerOptions {
    /// Association radius in (tau/delta_t, theta, phi [rad]) space.
    double association_radius = 0.5;
};

/// Runs the estimator per sub-frame, tracks paths and regresses the
/// unwrapped phase offsets against the sub-frame index.
EstimateSet estimate_doppler(const std::vector<CsiStack>& subframes, const HankelParams& hp,
                             int num_paths, const ArrayConfig& arr, const OfdmConfig& ofdm,
                             const DopplerOptions& opts = {});

}  // namespace paraming
}  // namespace isac
