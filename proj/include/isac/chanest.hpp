#pragma once

#include <vector>

#include "isac/scene.hpp"

namespace isac {

/// Vectorized CSI. Row k + i*N_r (0-based) holds receive element k and
/// transmit element i; column j holds subcarrier j+1.
struct CsiStack {
    MatrixXcd matrix;  // (N_t*N_r) x N_P
    int num_tx = 0;
    int num_rx = 0;
    /// Per sub-frame estimates, same layout as `matrix`; empty for static runs.
    std::vector<MatrixXcd> per_subframe;

    int num_subcarriers() const { return static_cast<int>(matrix.cols()); }
    int num_subframes() const {
        return per_subframe.empty() ? 1 : static_cast<int>(per_subframe.size());
    }
    /// h-bar_{i,j,k} with 0-based transmit i, subcarrier j, receive k.
    cd entry(int tx, int subcarrier, int rx) const { return matrix(rx + tx * num_rx, subcarrier); }
    /// Sub-frame p as a standalone static stack.
    CsiStack subframe(int p) const;
};

/// Y S^H (S S^H)^{-1}. `subcarrier` only labels the error.
MatrixXcd ls_estimate(const MatrixXcd& y, const MatrixXcd& s, int subcarrier = 0);

/// LS estimates for every subcarrier of sub-frame `p` (0-based).
std::vector<MatrixXcd> ls_estimate_subframe(const RxBlock& rx, const PilotBlock& pilots, int p);

/// Pools every received symbol of the frame into one estimate per subcarrier.
std::vector<MatrixXcd> ls_estimate_frame(const RxBlock& rx, const PilotBlock& pilots);

CsiStack assemble_csi(const std::vector<MatrixXcd>& estimates);

/// Whole-frame CSI; when `keep_subframes` is set the per-sub-frame
/// estimates are attached as well.
CsiStack estimate_csi(const RxBlock& rx, const PilotBlock& pilots, bool keep_subframes = false);

/// Noiseless B G C^T, the reference the LS estimate should reproduce.
MatrixXcd model_csi(const Scene& scene, const ArrayConfig& arr, const OfdmConfig& ofdm);

}  // namespace isac
