#include "isac/paraming.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace isac {

HankelParams HankelParams::defaults(const ArrayConfig& arr, const OfdmConfig& ofdm) {
    auto half = [](int n) { return static_cast<int>(std::lround(n / 2.0)); };
    return HankelParams{half(arr.num_tx), half(arr.num_rx), half(ofdm.num_subcarriers)};
}

void HankelParams::validate(const ArrayConfig& arr, const OfdmConfig& ofdm, int num_paths) const {
    auto check = [](int sub, int full, const char* what) {
        if (sub <= 1 || sub > full) {
            throw ConfigError(std::string(what) + " size " + std::to_string(sub) +
                              " outside (1, " + std::to_string(full) + "]");
        }
    };
    check(sub_tx, arr.num_tx, "transmit sub-array");
    check(sub_rx, arr.num_rx, "receive sub-array");
    check(sub_sc, ofdm.num_subcarriers, "sub-symbol");
    if (count_sc(ofdm) < 2) {
        throw ConfigError("sub-symbol size leaves fewer than 2 subcarrier shifts (K_N < 2)");
    }
    if (num_paths > 0) {
        const int budget =
            std::min(rows(), count_tx(arr) * count_rx(arr) * (count_sc(ofdm) - 1));
        if (num_paths > budget) {
            throw ConfigError("path count " + std::to_string(num_paths) +
                              " exceeds the Hankel rank budget " + std::to_string(budget));
        }
    }
}

namespace paraming {

MatrixXcd build_hankel(const CsiStack& csi, const HankelParams& hp) {
    const int nt = csi.num_tx;
    const int nr = csi.num_rx;
    const int np = csi.num_subcarriers();
    if (hp.sub_tx <= 1 || hp.sub_tx > nt || hp.sub_rx <= 1 || hp.sub_rx > nr ||
        hp.sub_sc <= 1 || hp.sub_sc > np) {
        throw ConfigError("Hankel sub-sizes do not fit the CSI dimensions");
    }
    const int kt = nt - hp.sub_tx + 1;
    const int kr = nr - hp.sub_rx + 1;
    const int kn = np - hp.sub_sc + 1;
    if (kn < 2) {
        throw ConfigError("sub-symbol size leaves fewer than 2 subcarrier shifts (K_N < 2)");
    }

    MatrixXcd hcal(hp.sub_tx * hp.sub_sc * hp.sub_rx, kt * kn * kr);
    for (int b = 0; b < kt; ++b) {
        for (int d = 0; d < kn; ++d) {
            for (int f = 0; f < kr; ++f) {
                const int col = (b * kn + d) * kr + f;
                for (int a = 0; a < hp.sub_tx; ++a) {
                    for (int c = 0; c < hp.sub_sc; ++c) {
                        const int row0 = (a * hp.sub_sc + c) * hp.sub_rx;
                        // Receive index e+f runs contiguously down the CSI column.
                        hcal.col(col).segment(row0, hp.sub_rx) =
                            csi.matrix.col(c + d).segment((a + b) * nr + f, hp.sub_rx);
                    }
                }
            }
        }
    }
    return hcal;
}

std::pair<std::vector<int>, std::vector<int>> shift_column_sets(int count_tx, int count_rx,
                                                                int count_sc) {
    if (count_sc < 2) {
        throw ConfigError("need K_N >= 2 to form shifted column sets");
    }
    std::vector<int> s1;
    s1.reserve(static_cast<std::size_t>(count_tx) * count_rx * (count_sc - 1));
    for (int k = 0; k < count_tx; ++k) {
        for (int s = 0; s < count_rx * (count_sc - 1); ++s) {
            s1.push_back(s + k * count_rx * count_sc);
        }
    }
    std::vector<int> s2(s1);
    for (int& c : s2) {
        c += count_rx;
    }
    return {std::move(s1), std::move(s2)};
}

std::pair<MatrixXcd, MatrixXcd> select_submatrices(const MatrixXcd& hcal, const HankelParams& hp,
                                                   const ArrayConfig& arr,
                                                   const OfdmConfig& ofdm) {
    const auto [s1, s2] = shift_column_sets(hp.count_tx(arr), hp.count_rx(arr), hp.count_sc(ofdm));
    if (hcal.cols() != static_cast<Eigen::Index>(hp.count_tx(arr)) * hp.count_rx(arr) *
                           hp.count_sc(ofdm)) {
        throw ConfigError("Hankel matrix width does not match the sub-array parameters");
    }
    return {hcal(Eigen::all, s1), hcal(Eigen::all, s2)};
}

ToaResult estimate_toa(const MatrixXcd& h1, const MatrixXcd& h2, int num_paths,
                       const OfdmConfig& ofdm) {
    if (h1.rows() != h2.rows() || h1.cols() != h2.cols()) {
        throw ConfigError("shifted Hankel submatrices differ in shape");
    }
    if (num_paths < 1 || num_paths > std::min(h1.rows(), h1.cols())) {
        throw ConfigError("path count " + std::to_string(num_paths) +
                          " does not fit the Hankel submatrix");
    }
    ToaResult out;
    out.svd = linalg::truncated_svd(h1, num_paths);
    const VectorXd& sigma = out.svd.sigma;
    const double ratio = sigma(0) > 0.0 ? sigma(num_paths - 1) / sigma(0) : 0.0;
    if (!(ratio >= kRankTolerance)) {
        std::ostringstream msg;
        msg << "Hankel submatrix has fewer than " << num_paths
            << " significant singular values; sigma_M/sigma_1 = " << ratio << "; spectrum:";
        for (Eigen::Index i = 0; i < out.svd.spectrum.size(); ++i) {
            msg << ' ' << out.svd.spectrum(i);
        }
        throw RankDeficiencyError(msg.str(), out.svd.spectrum);
    }
    if (ratio < kRankWarning) {
        out.warnings.push_back("weak rank: sigma_M/sigma_1 = " + std::to_string(ratio));
    }

    const MatrixXcd t = sigma.cwiseInverse().asDiagonal() *
                        (out.svd.u.adjoint() * (h2 * out.svd.v));
    Eigen::ComplexEigenSolver<MatrixXcd> eig(t, /*computeEigenvectors=*/false);
    if (eig.info() != Eigen::Success) {
        throw Error("eigen-decomposition of the shift matrix did not converge");
    }
    const VectorXcd& gamma = eig.eigenvalues();

    const double period = ofdm.max_unambiguous_delay();
    std::vector<double> tau(num_paths);
    for (int m = 0; m < num_paths; ++m) {
        double phase = -std::arg(gamma(m));
        if (phase < 0.0 && phase > -kPhaseSnap) {
            phase = 0.0;  // rounding noise around tau = 0
        }
        if (phase < 0.0) {
            phase += 2.0 * kPi;
        }
        const double t_m = phase / (2.0 * kPi * ofdm.subcarrier_spacing_hz);
        tau[m] = std::min(t_m, std::nextafter(period, 0.0));
    }
    std::vector<int> order(num_paths);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return tau[a] < tau[b]; });
    out.eigenvalues.resize(num_paths);
    for (int m = 0; m < num_paths; ++m) {
        out.delays.push_back(tau[order[m]]);
        out.eigenvalues(m) = gamma(order[m]);
    }
    return out;
}

SpatialFit fit_spatial(const CsiStack& csi, const std::vector<double>& delays,
                       const OfdmConfig& ofdm) {
    const int m = static_cast<int>(delays.size());
    if (m < 1) {
        throw ConfigError("no delays to fit");
    }
    if (csi.num_subcarriers() != ofdm.num_subcarriers) {
        throw ConfigError("CSI subcarrier count does not match the OFDM configuration");
    }
    const double period = ofdm.max_unambiguous_delay();
    const double min_gap = 1e-3 * ofdm.delay_resolution();
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const double d = std::abs(delays[i] - delays[j]);
            if (std::min(d, period - d) < min_gap) {
                throw IllConditionedError("delays " + std::to_string(i + 1) + " and " +
                                          std::to_string(j + 1) +
                                          " coincide; delay matrix is ill-conditioned");
            }
        }
    }
    MatrixXcd c(ofdm.num_subcarriers, m);
    for (int i = 0; i < m; ++i) {
        c.col(i) = delay_vector(delays[i], ofdm);
    }
    const MatrixXcd cc = c.conjugate();
    const MatrixXcd gram = c.transpose() * cc;

    SpatialFit fit;
    // Y = H C* (C^T C*)^{-1}; gram is Hermitian so solve G^T Y^T = (H C*)^T.
    fit.yhat = gram.transpose().partialPivLu().solve((csi.matrix * cc).transpose()).transpose();
    fit.magnitudes.resize(m);
    fit.directions.resize(fit.yhat.rows(), m);
    const double scale = std::sqrt(static_cast<double>(csi.num_tx) * csi.num_rx);
    for (int i = 0; i < m; ++i) {
        const double norm = fit.yhat.col(i).norm();
        fit.magnitudes(i) = norm / scale;
        fit.directions.col(i) = norm > 0.0 ? VectorXcd(fit.yhat.col(i) / norm)
                                           : VectorXcd::Zero(fit.yhat.rows());
    }
    return fit;
}

AngleFit regress_angles(const VectorXcd& direction, const ArrayConfig& arr,
                        const OfdmConfig& ofdm) {
    const int nr = arr.num_rx;
    const int nt = arr.num_tx;
    if (direction.size() != static_cast<Eigen::Index>(nr) * nt) {
        throw ConfigError("spatial signature length does not match N_t*N_r");
    }

    // Unwrap down each receive column, then align the columns through their
    // unwrapped first-row intercepts.
    MatrixXd psi(nr, nt);
    std::vector<double> heads(nt);
    for (int i = 0; i < nt; ++i) {
        std::vector<double> col(nr);
        for (int k = 0; k < nr; ++k) {
            col[k] = std::arg(direction(k + i * nr));
        }
        col = linalg::unwrap(col);
        for (int k = 0; k < nr; ++k) {
            psi(k, i) = col[k];
        }
        heads[i] = col[0];
    }
    const std::vector<double> aligned = linalg::unwrap(heads);
    for (int i = 0; i < nt; ++i) {
        psi.col(i).array() += aligned[i] - heads[i];
    }

    MatrixXd xi(nr * nt, 3);
    VectorXd rhs(nr * nt);
    for (int i = 0; i < nt; ++i) {
        for (int k = 0; k < nr; ++k) {
            const int r = k + i * nr;
            xi(r, 0) = k;
            xi(r, 1) = i;
            xi(r, 2) = 1.0;
            rhs(r) = psi(k, i);
        }
    }
    const Eigen::Vector3d coef = xi.colPivHouseholderQr().solve(rhs);

    AngleFit fit;
    fit.rx_slope = coef(0);
    fit.tx_slope = coef(1);
    fit.phase_offset = coef(2);
    const double lambda = ofdm.wavelength();
    const double arg_rx = -fit.rx_slope * lambda / (2.0 * kPi * arr.rx_spacing_m);
    const double arg_tx = -fit.tx_slope * lambda / (2.0 * kPi * arr.tx_spacing_m);
    fit.inconsistent_phase = std::abs(arg_rx) > 1.05 || std::abs(arg_tx) > 1.05;
    fit.aoa = std::asin(std::clamp(arg_rx, -1.0, 1.0));
    fit.aod = std::asin(std::clamp(arg_tx, -1.0, 1.0));
    return fit;
}

EstimateSet estimate(const CsiStack& csi, const HankelParams& hp, int num_paths,
                     const ArrayConfig& arr, const OfdmConfig& ofdm) {
    if (csi.num_tx != arr.num_tx || csi.num_rx != arr.num_rx) {
        throw ConfigError("CSI array dimensions do not match the array configuration");
    }
    hp.validate(arr, ofdm, num_paths);

    const MatrixXcd hcal = build_hankel(csi, hp);
    const auto [h1, h2] = select_submatrices(hcal, hp, arr, ofdm);
    ToaResult toa = estimate_toa(h1, h2, num_paths, ofdm);
    const SpatialFit fit = fit_spatial(csi, toa.delays, ofdm);

    EstimateSet out;
    out.warnings = std::move(toa.warnings);
    for (int m = 0; m < num_paths; ++m) {
        const AngleFit ang = regress_angles(fit.directions.col(m), arr, ofdm);
        PathEstimate p;
        p.delay = toa.delays[m];
        p.aoa = ang.aoa;
        p.aod = ang.aod;
        p.magnitude = fit.magnitudes(m);
        p.phase_offset = ang.phase_offset;
        p.inconsistent_phase = ang.inconsistent_phase;
        if (ang.inconsistent_phase) {
            out.warnings.push_back("path " + std::to_string(m + 1) +
                                   ": phase slope exceeds the array's unambiguous range");
        }
        out.paths.push_back(p);
    }
    return out;
}

EstimateSet estimate_doppler(const std::vector<CsiStack>& subframes, const HankelParams& hp,
                             int num_paths, const ArrayConfig& arr, const OfdmConfig& ofdm,
                             const DopplerOptions& opts) {
    const int count = static_cast<int>(subframes.size());
    if (count < 2) {
        throw ConfigError("Doppler estimation needs at least 2 sub-frames");
    }
    std::vector<EstimateSet> per;
    per.reserve(count);
    for (const auto& csi : subframes) {
        per.push_back(estimate(csi, hp, num_paths, arr, ofdm));
    }

    const double dt = ofdm.delay_resolution();
    auto distance = [dt](const PathEstimate& a, const PathEstimate& b) {
        const double dtau = (a.delay - b.delay) / dt;
        const double dth = a.aoa - b.aoa;
        const double dph = a.aod - b.aod;
        return std::sqrt(dtau * dtau + dth * dth + dph * dph);
    };

    // track[m][p] = index of sub-frame p's path that continues reference path m.
    std::vector<std::vector<int>> track(num_paths, std::vector<int>(count, -1));
    for (int m = 0; m < num_paths; ++m) {
        track[m][0] = m;
    }
    for (int p = 1; p < count; ++p) {
        std::vector<int> claimed(num_paths, -1);
        for (int m = 0; m < num_paths; ++m) {
            const PathEstimate& ref = per[0].paths[m];
            int best = -1;
            int inside = 0;
            double best_d = 0.0;
            for (int c = 0; c < num_paths; ++c) {
                const double d = distance(ref, per[p].paths[c]);
                if (d <= opts.association_radius) {
                    ++inside;
                }
                if (best < 0 || d < best_d) {
                    best = c;
                    best_d = d;
                }
            }
            if (inside > 1) {
                throw TrackingError("sub-frame " + std::to_string(p + 1) + ": path " +
                                    std::to_string(m + 1) + " has " + std::to_string(inside) +
                                    " candidates inside the association radius");
            }
            if (inside == 0) {
                throw TrackingError("sub-frame " + std::to_string(p + 1) + ": path " +
                                    std::to_string(m + 1) + " lost (nearest candidate at " +
                                    std::to_string(best_d) + ")");
            }
            if (claimed[best] >= 0) {
                throw TrackingError("sub-frame " + std::to_string(p + 1) +
                                    ": two reference paths claim the same candidate");
            }
            claimed[best] = m;
            track[m][p] = best;
        }
    }

    const double slot = 2.0 * kPi * ofdm.symbols_per_subframe * ofdm.total_symbol_time();
    EstimateSet out;
    for (const auto& e : per) {
        out.warnings.insert(out.warnings.end(), e.warnings.begin(), e.warnings.end());
    }
    std::vector<double> index(count);
    std::iota(index.begin(), index.end(), 0.0);
    for (int m = 0; m < num_paths; ++m) {
        PathEstimate avg;
        std::vector<double> phases(count);
        for (int p = 0; p < count; ++p) {
            const PathEstimate& e = per[p].paths[track[m][p]];
            avg.delay += e.delay / count;
            avg.aoa += e.aoa / count;
            avg.aod += e.aod / count;
            avg.magnitude += e.magnitude / count;
            avg.inconsistent_phase = avg.inconsistent_phase || e.inconsistent_phase;
            phases[p] = e.phase_offset;
        }
        const linalg::LineFit line = linalg::fit_line(index, linalg::unwrap(phases));
        avg.phase_offset = line.intercept;
        avg.doppler = line.slope / slot;
        out.paths.push_back(avg);
    }
    std::stable_sort(out.paths.begin(), out.paths.end(),
                     [](const PathEstimate& a, const PathEstimate& b) { return a.delay < b.delay; });
    return out;
}

}  // namespace paraming
}  // namespace isac
