#include "isac/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isac/complexity.hpp"

namespace isac {

GridAxis GridAxis::span(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) {
        throw ConfigError("grid axis needs step > 0 and hi >= lo");
    }
    const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    return GridAxis{lo, step, count};
}

int GridAxis::nearest(double x) const {
    const long i = std::lround((x - start) / step);
    return static_cast<int>(std::clamp<long>(i, 0, count - 1));
}

GridSpec GridSpec::fine_default(const OfdmConfig& ofdm) {
    const double ang = deg2rad(60.0);
    const double dstep = deg2rad(0.05);
    const double tstep = ofdm.delay_resolution() / 5.0;
    return GridSpec{GridAxis::span(-ang, ang, dstep), GridAxis::span(-ang, ang, dstep),
                    GridAxis::span(0.0, ofdm.cp_time(), tstep)};
}

GridSpec GridSpec::from_degrees(double theta_lo, double theta_hi, double theta_step,
                                double phi_lo, double phi_hi, double phi_step, double tau_lo,
                                double tau_hi, double tau_step) {
    return GridSpec{
        GridAxis::span(deg2rad(theta_lo), deg2rad(theta_hi), deg2rad(theta_step)),
        GridAxis::span(deg2rad(phi_lo), deg2rad(phi_hi), deg2rad(phi_step)),
        GridAxis::span(tau_lo, tau_hi, tau_step)};
}

void GridSpec::validate() const {
    for (const GridAxis* ax : {&theta, &phi, &tau}) {
        if (!(ax->step > 0.0) || ax->count < 1) {
            throw ConfigError("grid axes need positive steps and at least one point");
        }
    }
    for (const GridAxis* ax : {&theta, &phi}) {
        if (!(ax->at(0) > -kPi / 2.0) || !(ax->at(ax->count - 1) < kPi / 2.0)) {
            throw ConfigError("angular grid must stay inside (-90, 90) degrees");
        }
    }
    if (tau.at(0) < 0.0) {
        throw ConfigError("delay grid must start at a non-negative delay");
    }
}

namespace baselines {

namespace {

std::int64_t lex_index(const GridSpec& g, int it, int ip, int iu) {
    return (static_cast<std::int64_t>(it) * g.phi.count + ip) * g.tau.count + iu;
}

// Strict total order used for peak picking and argmax.
bool better(double va, std::int64_t ia, double vb, std::int64_t ib) {
    return va > vb || (va == vb && ia < ib);
}

GridPeak make_peak(const GridSpec& g, int it, int ip, int iu, double v) {
    return GridPeak{it, ip, iu, g.theta.at(it), g.phi.at(ip), g.tau.at(iu), v};
}

// Keeps the best `limit` peaks under the strict order.
class TopPeaks {
public:
    explicit TopPeaks(const GridSpec& g, int limit) : grid_(g), limit_(limit) {}

    void offer(const GridPeak& p) {
        const std::int64_t idx = lex_index(grid_, p.i_theta, p.i_phi, p.i_tau);
        if (static_cast<int>(peaks_.size()) == limit_) {
            const GridPeak& w = peaks_.back();
            if (!better(p.value, idx, w.value, lex_index(grid_, w.i_theta, w.i_phi, w.i_tau))) {
                return;
            }
            peaks_.pop_back();
        }
        auto pos = std::find_if(peaks_.begin(), peaks_.end(), [&](const GridPeak& q) {
            return better(p.value, idx, q.value, lex_index(grid_, q.i_theta, q.i_phi, q.i_tau));
        });
        peaks_.insert(pos, p);
    }

    std::vector<GridPeak> take() { return std::move(peaks_); }

private:
    const GridSpec& grid_;
    int limit_;
    std::vector<GridPeak> peaks_;
};

MatrixXcd rx_rows_adjoint(const GridAxis& ax, int len, const ArrayConfig& arr,
                          const OfdmConfig& ofdm) {
    MatrixXcd m(ax.count, len);
    for (int i = 0; i < ax.count; ++i) {
        m.row(i) = steering_vector(Side::Rx, ax.at(i), arr, ofdm).head(len).adjoint();
    }
    return m;
}

MatrixXcd tx_cols(const GridAxis& ax, int len, const ArrayConfig& arr, const OfdmConfig& ofdm) {
    MatrixXcd m(len, ax.count);
    for (int i = 0; i < ax.count; ++i) {
        m.col(i) = steering_vector(Side::Tx, ax.at(i), arr, ofdm).head(len);
    }
    return m;
}

class BartlettEvaluator final : public SlabEvaluator {
public:
    BartlettEvaluator(const CsiStack& csi, const GridSpec& grid, const ArrayConfig& arr,
                      const OfdmConfig& ofdm)
        : csi_(csi), grid_(grid), nr_(arr.num_rx), nt_(arr.num_tx) {
        grid_.validate();
        rx_h_ = rx_rows_adjoint(grid_.theta, nr_, arr, ofdm);
        tx_c_ = tx_cols(grid_.phi, nt_, arr, ofdm).conjugate();
        delay_c_.resize(ofdm.num_subcarriers, grid_.tau.count);
        for (int u = 0; u < grid_.tau.count; ++u) {
            delay_c_.col(u) = delay_vector(grid_.tau.at(u), ofdm).conjugate();
        }
        norm_ = static_cast<double>(ofdm.num_subcarriers) * nr_ * nt_;
    }

    MatrixXd slab(int i_tau) const override {
        const VectorXcd z = csi_.matrix * delay_c_.col(i_tau);
        const Eigen::Map<const MatrixXcd> zm(z.data(), nr_, nt_);
        return (rx_h_ * zm * tx_c_).cwiseAbs2() / norm_;
    }

    const GridSpec& grid() const override { return grid_; }

private:
    const CsiStack& csi_;
    GridSpec grid_;
    int nr_;
    int nt_;
    MatrixXcd rx_h_;
    MatrixXcd tx_c_;
    MatrixXcd delay_c_;
    double norm_ = 1.0;
};

class BartlettModel final : public SpectrumModel {
public:
    BartlettModel(const CsiStack& csi, const ArrayConfig& arr, const OfdmConfig& ofdm)
        : csi_(csi), arr_(arr), ofdm_(ofdm) {
        if (csi.num_tx != arr.num_tx || csi.num_rx != arr.num_rx ||
            csi.num_subcarriers() != ofdm.num_subcarriers) {
            throw ConfigError("CSI dimensions do not match the configuration");
        }
    }
    std::unique_ptr<SlabEvaluator> on(const GridSpec& grid) const override {
        return std::make_unique<BartlettEvaluator>(csi_, grid, arr_, ofdm_);
    }

private:
    CsiStack csi_;
    ArrayConfig arr_;
    OfdmConfig ofdm_;
};

class MusicEvaluator final : public SlabEvaluator {
public:
    MusicEvaluator(const MusicSubspace& sub, const GridSpec& grid, const ArrayConfig& arr,
                   const OfdmConfig& ofdm)
        : sub_(sub), grid_(grid) {
        grid_.validate();
        const HankelParams& hp = sub_.hp;
        rx_t_ = rx_rows_adjoint(grid_.theta, hp.sub_rx, arr, ofdm).conjugate();
        tx_ = tx_cols(grid_.phi, hp.sub_tx, arr, ofdm);
        delay_.resize(hp.sub_sc, grid_.tau.count);
        for (int u = 0; u < grid_.tau.count; ++u) {
            delay_.col(u) = delay_vector(grid_.tau.at(u), ofdm).head(hp.sub_sc);
        }
        // Conjugated eigenvectors reshaped as (M_r, M_P*M_t) per path.
        conj_.reserve(sub_.signal.cols());
        for (Eigen::Index m = 0; m < sub_.signal.cols(); ++m) {
            conj_.push_back(sub_.signal.col(m).conjugate());
        }
        manifold_norm_ = static_cast<double>(hp.rows());
    }

    MatrixXd slab(int i_tau) const override {
        const HankelParams& hp = sub_.hp;
        const VectorXcd c = delay_.col(i_tau);
        MatrixXd proj = MatrixXd::Zero(grid_.theta.count, grid_.phi.count);
        MatrixXcd zm(hp.sub_rx, hp.sub_tx);
        for (const VectorXcd& e : conj_) {
            for (int a = 0; a < hp.sub_tx; ++a) {
                VectorXcd acc = VectorXcd::Zero(hp.sub_rx);
                for (int s = 0; s < hp.sub_sc; ++s) {
                    acc += c(s) * e.segment((a * hp.sub_sc + s) * hp.sub_rx, hp.sub_rx);
                }
                zm.col(a) = acc;
            }
            proj += (rx_t_ * zm * tx_).cwiseAbs2();
        }
        MatrixXd out(proj.rows(), proj.cols());
        for (Eigen::Index j = 0; j < proj.cols(); ++j) {
            for (Eigen::Index i = 0; i < proj.rows(); ++i) {
                const double noise = manifold_norm_ - proj(i, j);
                out(i, j) = noise * kMusicCap > 1.0 ? 1.0 / noise : kMusicCap;
            }
        }
        return out;
    }

    const GridSpec& grid() const override { return grid_; }

private:
    const MusicSubspace& sub_;
    GridSpec grid_;
    MatrixXcd rx_t_;
    MatrixXcd tx_;
    MatrixXcd delay_;
    std::vector<VectorXcd> conj_;
    double manifold_norm_ = 1.0;
};

class MusicModel final : public SpectrumModel {
public:
    MusicModel(MusicSubspace sub, const ArrayConfig& arr, const OfdmConfig& ofdm)
        : sub_(std::move(sub)), arr_(arr), ofdm_(ofdm) {}
    std::unique_ptr<SlabEvaluator> on(const GridSpec& grid) const override {
        return std::make_unique<MusicEvaluator>(sub_, grid, arr_, ofdm_);
    }

private:
    MusicSubspace sub_;
    ArrayConfig arr_;
    OfdmConfig ofdm_;
};

// Is (it, ip) of `cur` strictly better than every existing 26-neighbour?
bool is_local_max(const GridSpec& g, const MatrixXd* prev, const MatrixXd& cur,
                  const MatrixXd* next, int it, int ip, int iu) {
    const double v = cur(it, ip);
    const std::int64_t idx = lex_index(g, it, ip, iu);
    const MatrixXd* slabs[3] = {prev, &cur, next};
    for (int du = -1; du <= 1; ++du) {
        const MatrixXd* s = slabs[du + 1];
        if (s == nullptr) {
            continue;
        }
        for (int dt = -1; dt <= 1; ++dt) {
            const int jt = it + dt;
            if (jt < 0 || jt >= g.theta.count) {
                continue;
            }
            for (int dp = -1; dp <= 1; ++dp) {
                const int jp = ip + dp;
                if (jp < 0 || jp >= g.phi.count || (du == 0 && dt == 0 && dp == 0)) {
                    continue;
                }
                if (!better(v, idx, (*s)(jt, jp), lex_index(g, jt, jp, iu + du))) {
                    return false;
                }
            }
        }
    }
    return true;
}

// GridSpec restricted to fine cells within one coarse step of `center`.
std::pair<GridAxis, int> window(const GridAxis& fine, double center, double half_width) {
    int lo = static_cast<int>(std::ceil((center - half_width - fine.start) / fine.step - 1e-9));
    int hi = static_cast<int>(std::floor((center + half_width - fine.start) / fine.step + 1e-9));
    lo = std::clamp(lo, 0, fine.count - 1);
    hi = std::clamp(hi, lo, fine.count - 1);
    return {GridAxis{fine.at(lo), fine.step, hi - lo + 1}, lo};
}

}  // namespace

VectorXcd joint_steering(double theta, double phi, double tau, const ArrayConfig& arr,
                         const OfdmConfig& ofdm) {
    const VectorXcd ar = steering_vector(Side::Rx, theta, arr, ofdm);
    const VectorXcd at = steering_vector(Side::Tx, phi, arr, ofdm);
    const VectorXcd c = delay_vector(tau, ofdm);
    const int nr = arr.num_rx;
    const int nt = arr.num_tx;
    VectorXcd d(static_cast<Eigen::Index>(c.size()) * nt * nr);
    for (Eigen::Index n = 0; n < c.size(); ++n) {
        for (int t = 0; t < nt; ++t) {
            d.segment((n * nt + t) * nr, nr) = c(n) * at(t) * ar;
        }
    }
    return d;
}

std::unique_ptr<SpectrumModel> bartlett_model(const CsiStack& csi, const ArrayConfig& arr,
                                              const OfdmConfig& ofdm) {
    return std::make_unique<BartlettModel>(csi, arr, ofdm);
}

MusicSubspace music_subspace(const CsiStack& csi, const HankelParams& hp, int num_paths,
                             const ArrayConfig& arr, const OfdmConfig& ofdm) {
    hp.validate(arr, ofdm);
    const MatrixXcd hcal = paraming::build_hankel(csi, hp);
    if (num_paths < 1 || num_paths >= hcal.rows() || num_paths >= hcal.cols()) {
        throw ConfigError("MUSIC needs 1 <= M < smoothed dimension (" +
                          std::to_string(std::min(hcal.rows(), hcal.cols())) + "), got " +
                          std::to_string(num_paths));
    }
    const MatrixXcd r = hcal * hcal.adjoint() / static_cast<double>(hcal.cols());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(r);
    MusicSubspace sub;
    sub.hp = hp;
    sub.eigenvalues = eig.eigenvalues();
    sub.signal = eig.eigenvectors().rightCols(num_paths);
    return sub;
}

std::unique_ptr<SpectrumModel> music_model(MusicSubspace subspace, const ArrayConfig& arr,
                                           const OfdmConfig& ofdm) {
    return std::make_unique<MusicModel>(std::move(subspace), arr, ofdm);
}

double music_noise_projection(const MusicSubspace& sub, double theta, double phi, double tau,
                              const ArrayConfig& arr, const OfdmConfig& ofdm) {
    const HankelParams& hp = sub.hp;
    const VectorXcd ar = steering_vector(Side::Rx, theta, arr, ofdm).head(hp.sub_rx);
    const VectorXcd at = steering_vector(Side::Tx, phi, arr, ofdm).head(hp.sub_tx);
    const VectorXcd c = delay_vector(tau, ofdm).head(hp.sub_sc);
    VectorXcd b(hp.rows());
    for (int a = 0; a < hp.sub_tx; ++a) {
        for (int s = 0; s < hp.sub_sc; ++s) {
            b.segment((a * hp.sub_sc + s) * hp.sub_rx, hp.sub_rx) = at(a) * c(s) * ar;
        }
    }
    return std::max(0.0, b.squaredNorm() - (sub.signal.adjoint() * b).squaredNorm());
}

Spectrum dense_spectrum(const SpectrumModel& model, const GridSpec& grid, int num_peaks) {
    if (grid.cells() > kMaxDenseCells) {
        throw ConfigError("grid has " + std::to_string(grid.cells()) +
                          " cells; too large for a dense spectrum (use find_peaks)");
    }
    const auto eval = model.on(grid);
    Spectrum out;
    out.grid = grid;
    out.values.resize(static_cast<std::size_t>(grid.cells()));
    for (int u = 0; u < grid.tau.count; ++u) {
        const MatrixXd s = eval->slab(u);
        for (int it = 0; it < grid.theta.count; ++it) {
            for (int ip = 0; ip < grid.phi.count; ++ip) {
                out.values[static_cast<std::size_t>(lex_index(grid, it, ip, u))] = s(it, ip);
            }
        }
    }
    out.peaks = find_peaks(model, grid, num_peaks);
    return out;
}

std::vector<GridPeak> find_peaks(const SpectrumModel& model, const GridSpec& grid,
                                 int num_peaks) {
    if (num_peaks < 1) {
        throw ConfigError("need at least one peak");
    }
    const auto eval = model.on(grid);
    TopPeaks top(eval->grid(), num_peaks);
    const int nu = grid.tau.count;
    MatrixXd prev;
    MatrixXd cur = eval->slab(0);
    MatrixXd next;
    for (int u = 0; u < nu; ++u) {
        if (u + 1 < nu) {
            next = eval->slab(u + 1);
        }
        const MatrixXd* p = u > 0 ? &prev : nullptr;
        const MatrixXd* n = u + 1 < nu ? &next : nullptr;
        for (int it = 0; it < grid.theta.count; ++it) {
            for (int ip = 0; ip < grid.phi.count; ++ip) {
                if (is_local_max(grid, p, cur, n, it, ip, u)) {
                    top.offer(make_peak(grid, it, ip, u, cur(it, ip)));
                }
            }
        }
        prev.swap(cur);
        cur.swap(next);
    }
    return top.take();
}

GridPeak argmax(const SpectrumModel& model, const GridSpec& grid) {
    const auto eval = model.on(grid);
    GridPeak best = make_peak(grid, 0, 0, 0, -1.0);
    std::int64_t best_idx = -1;
    for (int u = 0; u < grid.tau.count; ++u) {
        const MatrixXd s = eval->slab(u);
        for (int it = 0; it < grid.theta.count; ++it) {
            for (int ip = 0; ip < grid.phi.count; ++ip) {
                const std::int64_t idx = lex_index(grid, it, ip, u);
                if (best_idx < 0 || better(s(it, ip), idx, best.value, best_idx)) {
                    best = make_peak(grid, it, ip, u, s(it, ip));
                    best_idx = idx;
                }
            }
        }
    }
    return best;
}

std::vector<GridPeak> refined_peaks(const SpectrumModel& model, const GridSpec& coarse,
                                    const GridSpec& fine, int num_peaks) {
    std::vector<GridPeak> out;
    for (const GridPeak& c : find_peaks(model, coarse, num_peaks)) {
        const auto [wt, ot] = window(fine.theta, c.theta, coarse.theta.step);
        const auto [wp, op] = window(fine.phi, c.phi, coarse.phi.step);
        const auto [wu, ou] = window(fine.tau, c.tau, coarse.tau.step);
        GridPeak p = argmax(model, GridSpec{wt, wp, wu});
        p.i_theta += ot;
        p.i_phi += op;
        p.i_tau += ou;
        out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const GridPeak& a, const GridPeak& b) { return a.value > b.value; });
    return out;
}

Spectrum bartlett_spectrum(const CsiStack& csi, const GridSpec& grid, int num_peaks,
                           const ArrayConfig& arr, const OfdmConfig& ofdm) {
    return dense_spectrum(*bartlett_model(csi, arr, ofdm), grid, num_peaks);
}

Spectrum music_spectrum(const CsiStack& csi, const HankelParams& hp, int num_paths,
                        const GridSpec& grid, const ArrayConfig& arr, const OfdmConfig& ofdm) {
    const auto model = music_model(music_subspace(csi, hp, num_paths, arr, ofdm), arr, ofdm);
    return dense_spectrum(*model, grid, num_paths);
}

GridEstimate dml_single(const CsiStack& csi, const GridSpec& grid, const ArrayConfig& arr,
                        const OfdmConfig& ofdm) {
    const GridPeak p = argmax(*bartlett_model(csi, arr, ofdm), grid);
    return GridEstimate{p.theta, p.phi, p.tau, p.i_theta, p.i_phi, p.i_tau};
}

MleResult mle_bruteforce(const RxBlock& rx, const PilotBlock& pilots, const GridSpec& grid,
                         const ArrayConfig& arr, const OfdmConfig& ofdm) {
    grid.validate();
    if (grid.cells() > kMleMaxCells) {
        const complexity::GridSizes sizes{grid.tau.count, grid.theta.count, grid.phi.count, 1};
        const double log_ops = complexity::mle_log10_flops(sizes, 1, arr, ofdm);
        std::ostringstream msg;
        msg << "brute-force MLE refused: " << grid.cells() << " cells exceed the "
            << kMleMaxCells << "-cell limit; estimated cost ~1e" << static_cast<int>(log_ops)
            << " operations (log10 = " << log_ops << ")";
        throw GridTooLargeError(msg.str(), log_ops);
    }
    const int np = ofdm.num_subcarriers;
    if (static_cast<int>(pilots.symbols.size()) != np || rx.num_subframes() < 1) {
        throw ConfigError("received block and pilots do not match the configuration");
    }

    std::vector<MatrixXcd> rx_steer(grid.theta.count);
    for (int i = 0; i < grid.theta.count; ++i) {
        rx_steer[i] = steering_vector(Side::Rx, grid.theta.at(i), arr, ofdm);
    }
    std::vector<VectorXcd> tx_steer(grid.phi.count);
    for (int i = 0; i < grid.phi.count; ++i) {
        tx_steer[i] = steering_vector(Side::Tx, grid.phi.at(i), arr, ofdm);
    }

    MleResult best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < grid.theta.count; ++it) {
        for (int ip = 0; ip < grid.phi.count; ++ip) {
            const MatrixXcd h0 = rx_steer[it] * tx_steer[ip].transpose();
            for (int iu = 0; iu < grid.tau.count; ++iu) {
                const double tau = grid.tau.at(iu);
                // model mu_{n,k} = c_n(tau) H0 s_{n,k}; gain by closed-form LS.
                cd cross{0.0, 0.0};
                double energy = 0.0;
                for (int n = 1; n <= np; ++n) {
                    const MatrixXcd mu = delay_response(n, tau, ofdm) * h0 * pilots.symbols[n - 1];
                    for (int p = 0; p < rx.num_subframes(); ++p) {
                        const MatrixXcd& y = rx.symbols[p][n - 1];
                        cross += (mu.adjoint() * y).trace();
                        energy += mu.squaredNorm();
                    }
                }
                const cd gain = cross / energy;
                double residual = 0.0;
                for (int n = 1; n <= np; ++n) {
                    const MatrixXcd mu = delay_response(n, tau, ofdm) * h0 * pilots.symbols[n - 1];
                    for (int p = 0; p < rx.num_subframes(); ++p) {
                        residual += (rx.symbols[p][n - 1] - gain * mu).squaredNorm();
                    }
                }
                if (residual < best.residual) {
                    best.residual = residual;
                    best.gain = gain;
                    best.cell = GridEstimate{grid.theta.at(it), grid.phi.at(ip), tau, it, ip, iu};
                }
            }
        }
    }
    return best;
}

EstimateSet to_estimate_set(const std::vector<GridPeak>& peaks) {
    EstimateSet out;
    for (const GridPeak& p : peaks) {
        PathEstimate e;
        e.delay = p.tau;
        e.aoa = p.theta;
        e.aod = p.phi;
        out.paths.push_back(e);
    }
    std::stable_sort(out.paths.begin(), out.paths.end(),
                     [](const PathEstimate& a, const PathEstimate& b) { return a.delay < b.delay; });
    return out;
}

}  // namespace baselines
}  // namespace isac
