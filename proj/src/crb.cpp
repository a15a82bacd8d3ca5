#include "isac/crb.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace isac::crb {

std::vector<MatrixXcd> model_derivatives(const Scene& scene, const ArrayConfig& arr,
                                         const OfdmConfig& ofdm, int n) {
    const int m = scene.size();
    std::vector<MatrixXcd> d(static_cast<std::size_t>(5 * m));
    const double dphase = -2.0 * kPi * n * ofdm.subcarrier_spacing_hz;
    for (int i = 0; i < m; ++i) {
        const Scatterer& sc = scene.scatterers[i];
        const VectorXcd ar = steering_vector(Side::Rx, sc.aoa, arr, ofdm);
        const VectorXcd at = steering_vector(Side::Tx, sc.aod, arr, ofdm);
        const VectorXcd dr = steering_derivative(Side::Rx, sc.aoa, arr, ofdm);
        const VectorXcd dt = steering_derivative(Side::Tx, sc.aod, arr, ofdm);
        const cd c = delay_response(n, sc.delay, ofdm);
        const cd dc = kJ * dphase * c;
        const MatrixXcd xi = ar * at.transpose();
        d[i] = sc.gain * c * dr * at.transpose();
        d[m + i] = sc.gain * c * ar * dt.transpose();
        d[2 * m + i] = sc.gain * dc * xi;
        d[3 * m + i] = c * xi;
        d[4 * m + i] = kJ * c * xi;
    }
    return d;
}

FimMatrix fim_assemble(const Scene& scene, const PilotBlock& pilots, double sigma2,
                       const ArrayConfig& arr, const OfdmConfig& ofdm) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw DomainError("noise variance must be positive and finite");
    }
    const int np = ofdm.num_subcarriers;
    if (static_cast<int>(pilots.symbols.size()) != np) {
        throw ConfigError("pilot block does not match the subcarrier count");
    }
    scene.validate(ofdm);
    const int m = scene.size();
    const int p = 5 * m;
    MatrixXd data = MatrixXd::Zero(p, p);
    for (int n = 1; n <= np; ++n) {
        const MatrixXcd& s = pilots.symbols[n - 1];
        const MatrixXcd r = s * s.adjoint();  // sum over k of s s^H
        const std::vector<MatrixXcd> d = model_derivatives(scene, arr, ofdm, n);
        for (int b = 0; b < p; ++b) {
            const MatrixXcd br = d[b] * r;
            for (int a = 0; a <= b; ++a) {
                data(a, b) += (d[a].adjoint() * br).trace().real();
            }
        }
    }
    data *= 2.0 / sigma2;

    FimMatrix fim;
    fim.num_paths = m;
    fim.gamma = MatrixXd::Zero(p + 1, p + 1);
    fim.gamma(0, 0) = static_cast<double>(arr.num_rx) * np * ofdm.symbols_per_subframe /
                      (sigma2 * sigma2);
    for (int b = 0; b < p; ++b) {
        for (int a = 0; a <= b; ++a) {
            fim.gamma(a + 1, b + 1) = data(a, b);
            fim.gamma(b + 1, a + 1) = data(a, b);
        }
    }
    return fim;
}

CrbValues crb_extract(const FimMatrix& fim) {
    const MatrixXd& g = fim.gamma;
    const int m = fim.num_paths;
    if (g.rows() != 5 * m + 1 || g.cols() != g.rows() || m < 1) {
        throw ConfigError("FIM size does not match the path count");
    }
    const VectorXd diag = g.diagonal();
    if (!(diag.minCoeff() > 0.0)) {
        throw DegenerateSceneError("FIM has a non-positive diagonal entry",
                                   std::numeric_limits<double>::infinity());
    }
    const VectorXd scale = diag.cwiseSqrt().cwiseInverse();
    const MatrixXd scaled = scale.asDiagonal() * g * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(scaled);
    const VectorXd& lam = eig.eigenvalues();
    const double cond = lam(0) > 0.0 ? lam(lam.size() - 1) / lam(0)
                                     : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxCondition)) {
        std::ostringstream msg;
        msg << "degenerate scene: scaled FIM condition number " << cond << " exceeds "
            << kMaxCondition;
        throw DegenerateSceneError(msg.str(), cond);
    }
    const MatrixXd& v = eig.eigenvectors();
    const MatrixXd inv_scaled = v * lam.cwiseInverse().asDiagonal() * v.transpose();
    const MatrixXd inv = scale.asDiagonal() * inv_scaled * scale.asDiagonal();

    CrbValues out;
    out.condition = cond;
    out.theta = inv.diagonal().segment(1, m);
    out.phi = inv.diagonal().segment(1 + m, m);
    out.tau = inv.diagonal().segment(1 + 2 * m, m);
    return out;
}

double signal_power(const Scene& scene, const PilotBlock& pilots, const ArrayConfig& arr,
                    const OfdmConfig& ofdm) {
    const RxBlock rx = simulate_rx(scene, pilots, kNoiseless, 0, arr, ofdm, 1);
    double energy = 0.0;
    for (const MatrixXcd& y : rx.symbols[0]) {
        energy += y.squaredNorm();
    }
    return energy / (static_cast<double>(arr.num_rx) * ofdm.num_subcarriers *
                     ofdm.symbols_per_subframe);
}

std::vector<CrbPoint> crb_curve(const Scene& scene, const PilotBlock& pilots,
                                const std::vector<double>& snr_db, const ArrayConfig& arr,
                                const OfdmConfig& ofdm) {
    const double power = signal_power(scene, pilots, arr, ofdm);
    std::vector<CrbPoint> out;
    out.reserve(snr_db.size());
    const double r2d2 = rad2deg(1.0) * rad2deg(1.0);
    for (double snr : snr_db) {
        const double sigma2 = power / std::pow(10.0, snr / 10.0);
        const CrbValues v = crb_extract(fim_assemble(scene, pilots, sigma2, arr, ofdm));
        CrbPoint pt;
        pt.snr_db = snr;
        pt.crb_theta = v.theta.mean() * r2d2;
        pt.crb_phi = v.phi.mean() * r2d2;
        pt.crb_tau_normalized = std::sqrt(v.tau.mean()) / ofdm.delay_resolution();
        out.push_back(pt);
    }
    return out;
}

std::string crb_csv(const std::vector<CrbPoint>& points) {
    std::string out = "snr_db,crb_theta,crb_phi,crb_tau_normalized\n";
    char buf[160];
    for (const CrbPoint& p : points) {
        std::snprintf(buf, sizeof buf, "%.6g,%.9e,%.9e,%.9e\n", p.snr_db, p.crb_theta, p.crb_phi,
                      p.crb_tau_normalized);
        out += buf;
    }
    return out;
}

}  // namespace isac::crb
