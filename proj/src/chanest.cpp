#include "isac/chanest.hpp"

#include <string>

namespace isac {

CsiStack CsiStack::subframe(int p) const {
    if (per_subframe.empty()) {
        if (p != 0) {
            throw ConfigError("CSI stack has a single sub-frame");
        }
        return CsiStack{matrix, num_tx, num_rx, {}};
    }
    if (p < 0 || p >= static_cast<int>(per_subframe.size())) {
        throw ConfigError("sub-frame index " + std::to_string(p) + " out of range");
    }
    return CsiStack{per_subframe[p], num_tx, num_rx, {}};
}

MatrixXcd ls_estimate(const MatrixXcd& y, const MatrixXcd& s, int subcarrier) {
    if (y.cols() != s.cols()) {
        throw ConfigError("received and pilot blocks disagree on the symbol count");
    }
    if (s.cols() < s.rows()) {
        throw SingularityError("subcarrier " + std::to_string(subcarrier) +
                                   ": fewer pilot symbols than transmit antennas",
                               subcarrier);
    }
    const MatrixXcd gram = s * s.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
    const VectorXd& ev = eig.eigenvalues();
    if (!(ev(0) > 1e-12 * ev(ev.size() - 1))) {
        throw SingularityError("subcarrier " + std::to_string(subcarrier) +
                                   ": pilot block is rank deficient",
                               subcarrier);
    }
    // H = Y S^H G^{-1}  <=>  G H^H = S Y^H  (G Hermitian).
    return gram.ldlt().solve(s * y.adjoint()).adjoint();
}

std::vector<MatrixXcd> ls_estimate_subframe(const RxBlock& rx, const PilotBlock& pilots, int p) {
    if (p < 0 || p >= rx.num_subframes()) {
        throw ConfigError("sub-frame index " + std::to_string(p) + " out of range");
    }
    const auto& frame = rx.symbols[p];
    if (frame.size() != pilots.symbols.size()) {
        throw ConfigError("received block and pilots disagree on the subcarrier count");
    }
    std::vector<MatrixXcd> out;
    out.reserve(frame.size());
    for (std::size_t n = 0; n < frame.size(); ++n) {
        out.push_back(ls_estimate(frame[n], pilots.symbols[n], static_cast<int>(n) + 1));
    }
    return out;
}

std::vector<MatrixXcd> ls_estimate_frame(const RxBlock& rx, const PilotBlock& pilots) {
    if (rx.num_subframes() == 1) {
        return ls_estimate_subframe(rx, pilots, 0);
    }
    const int subframes = rx.num_subframes();
    std::vector<MatrixXcd> out;
    out.reserve(pilots.symbols.size());
    for (std::size_t n = 0; n < pilots.symbols.size(); ++n) {
        const MatrixXcd& s = pilots.symbols[n];
        const Eigen::Index kp = s.cols();
        MatrixXcd y_all(rx.symbols[0][n].rows(), kp * subframes);
        MatrixXcd s_all(s.rows(), kp * subframes);
        for (int p = 0; p < subframes; ++p) {
            y_all.middleCols(p * kp, kp) = rx.symbols[p][n];
            s_all.middleCols(p * kp, kp) = s;
        }
        out.push_back(ls_estimate(y_all, s_all, static_cast<int>(n) + 1));
    }
    return out;
}

CsiStack assemble_csi(const std::vector<MatrixXcd>& estimates) {
    if (estimates.empty()) {
        throw ConfigError("no per-subcarrier estimates to assemble");
    }
    const Eigen::Index nr = estimates.front().rows();
    const Eigen::Index nt = estimates.front().cols();
    CsiStack csi;
    csi.num_rx = static_cast<int>(nr);
    csi.num_tx = static_cast<int>(nt);
    csi.matrix.resize(nr * nt, static_cast<Eigen::Index>(estimates.size()));
    for (std::size_t j = 0; j < estimates.size(); ++j) {
        const MatrixXcd& h = estimates[j];
        if (h.rows() != nr || h.cols() != nt) {
            throw ConfigError("estimate " + std::to_string(j + 1) + " has shape " +
                              std::to_string(h.rows()) + "x" + std::to_string(h.cols()) +
                              ", expected " + std::to_string(nr) + "x" + std::to_string(nt));
        }
        // Column-major storage makes this the column-stacked vec(H_j).
        csi.matrix.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<const VectorXcd>(h.data(), nr * nt);
    }
    return csi;
}

CsiStack estimate_csi(const RxBlock& rx, const PilotBlock& pilots, bool keep_subframes) {
    CsiStack csi = assemble_csi(ls_estimate_frame(rx, pilots));
    if (keep_subframes) {
        for (int p = 0; p < rx.num_subframes(); ++p) {
            csi.per_subframe.push_back(assemble_csi(ls_estimate_subframe(rx, pilots, p)).matrix);
        }
    }
    return csi;
}

MatrixXcd model_csi(const Scene& scene, const ArrayConfig& arr, const OfdmConfig& ofdm) {
    const int m = scene.size();
    MatrixXcd b(arr.num_pairs(), m);
    MatrixXcd c(ofdm.num_subcarriers, m);
    VectorXcd g(m);
    for (int i = 0; i < m; ++i) {
        const auto& s = scene.scatterers[i];
        const VectorXcd at = steering_vector(Side::Tx, s.aod, arr, ofdm);
        const VectorXcd ar = steering_vector(Side::Rx, s.aoa, arr, ofdm);
        for (int t = 0; t < arr.num_tx; ++t) {
            b.col(i).segment(t * arr.num_rx, arr.num_rx) = at(t) * ar;
        }
        c.col(i) = delay_vector(s.delay, ofdm);
        g(i) = s.gain;
    }
    return b * g.asDiagonal() * c.transpose();
}

}  // namespace isac
