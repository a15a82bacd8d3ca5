#pragma once

#include <string>
#include <vector>

#include "isac/scene.hpp"

namespace isac {

/// Fisher information for xi = [sigma, theta(M), phi(M), tau(M), Re alpha(M),
/// Im alpha(M)], static single-sub-frame model.
struct FimMatrix {
    MatrixXd gamma;
    int num_paths = 0;
};

struct CrbValues {
    VectorXd theta;  // rad^2
    VectorXd phi;    // rad^2
    VectorXd tau;    // s^2
    double condition = 0.0;  // of the diagonally scaled FIM
};

struct CrbPoint {
    double snr_db = 0.0;
    double crb_theta = 0.0;           // deg^2, mean over paths
    double crb_phi = 0.0;             // deg^2, mean over paths
    double crb_tau_normalized = 0.0;  // sqrt(mean CRB(tau)) / delta_t
};

namespace crb {

inline constexpr double kMaxCondition = 1e14;

/// dH_n/dxi for every non-sigma parameter, in xi order (5M matrices N_r x N_t).
std::vector<MatrixXcd> model_derivatives(const Scene& scene, const ArrayConfig& arr,
                                         const OfdmConfig& ofdm, int n);

FimMatrix fim_assemble(const Scene& scene, const PilotBlock& pilots, double sigma2,
                       const ArrayConfig& arr, const OfdmConfig& ofdm);

/// Throws DegenerateSceneError when the scaled FIM is numerically singular.
CrbValues crb_extract(const FimMatrix& fim);

/// Mean noiseless received power per element, the reference for SNR.
double signal_power(const Scene& scene, const PilotBlock& pilots, const ArrayConfig& arr,
                    const OfdmConfig& ofdm);

std::vector<CrbPoint> crb_curve(const Scene& scene, const PilotBlock& pilots,
                                const std::vector<double>& snr_db, const ArrayConfig& arr,
                                const OfdmConfig& ofdm);

std::string crb_csv(const std::vector<CrbPoint>& points);

}  // namespace crb
}  // namespace isac
