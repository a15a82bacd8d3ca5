#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "isac/chanest.hpp"
#include "isac/paraming.hpp"

namespace isac {

/// Uniform grid on one axis: start + i*step, i in [0, count).
struct GridAxis {
    double start = 0.0;
    double step = 1.0;
    int count = 1;

    static GridAxis span(double lo, double hi, double step);
    double at(int i) const { return start + step * i; }
    /// Nearest index, clamped to the axis.
    int nearest(double x) const;
};

/// Search grid over (theta, phi, tau), SI units.
struct GridSpec {
    GridAxis theta;
    GridAxis phi;
    GridAxis tau;

    /// 0.05 deg angular steps over +-60 deg and delta_t/5 delay steps over
    /// [0, T_CP].
    static GridSpec fine_default(const OfdmConfig& ofdm);
    static GridSpec from_degrees(double theta_lo, double theta_hi, double theta_step,
                                 double phi_lo, double phi_hi, double phi_step, double tau_lo,
                                 double tau_hi, double tau_step);

    std::int64_t cells() const {
        return static_cast<std::int64_t>(theta.count) * phi.count * tau.count;
    }
    void validate() const;
};

struct GridPeak {
    int i_theta = 0;
    int i_phi = 0;
    int i_tau = 0;
    double theta = 0.0;
    double phi = 0.0;
    double tau = 0.0;
    double value = 0.0;
};

/// Dense spectrum, values indexed ((i_theta*G_phi + i_phi)*G_tau + i_tau).
struct Spectrum {
    GridSpec grid;
    std::vector<double> values;
    std::vector<GridPeak> peaks;

    double at(int it, int ip, int iu) const {
        return values[(static_cast<std::size_t>(it) * grid.phi.count + ip) * grid.tau.count + iu];
    }
};

namespace baselines {

/// c(tau) (x) a_t(phi) (x) a_r(theta), aligned with vec(H-bar).
VectorXcd joint_steering(double theta, double phi, double tau, const ArrayConfig& arr,
                         const OfdmConfig& ofdm);

/// Evaluates a spectrum one delay slab (theta x phi matrix) at a time.
class SlabEvaluator {
public:
    virtual ~SlabEvaluator() = default;
    virtual MatrixXd slab(int i_tau) const = 0;
    virtual const GridSpec& grid() const = 0;
};

/// Builds an evaluator over an arbitrary sub-grid; lets the coarse-to-fine
/// search reuse expensive state (e.g. a MUSIC subspace).
class SpectrumModel {
public:
    virtual ~SpectrumModel() = default;
    virtual std::unique_ptr<SlabEvaluator> on(const GridSpec& grid) const = 0;
};

/// Bartlett / concentrated single-path ML objective |d^H vec(H)|^2 / ||d||^2.
std::unique_ptr<SpectrumModel> bartlett_model(const CsiStack& csi, const ArrayConfig& arr,
                                              const OfdmConfig& ofdm);

inline constexpr double kMusicCap = 1e12;

/// MUSIC pseudo-spectrum from the Hankel-smoothed covariance.
struct MusicSubspace {
    HankelParams hp;
    VectorXd eigenvalues;  // ascending, of R = Hcal Hcal^H / cols
    MatrixXcd signal;      // rows x M, dominant eigenvectors
};
MusicSubspace music_subspace(const CsiStack& csi, const HankelParams& hp, int num_paths,
                             const ArrayConfig& arr, const OfdmConfig& ofdm);
std::unique_ptr<SpectrumModel> music_model(MusicSubspace subspace, const ArrayConfig& arr,
                                           const OfdmConfig& ofdm);
/// ||E_n^H b||^2 for the sub-manifold vector at (theta, phi, tau).
double music_noise_projection(const MusicSubspace& sub, double theta, double phi, double tau,
                              const ArrayConfig& arr, const OfdmConfig& ofdm);

inline constexpr std::int64_t kMaxDenseCells = 1LL << 25;

/// Full tensor plus top-M strict local maxima (26-neighbourhood). Cells are
/// totally ordered by (value, then lower lexicographic index), so plateaus
/// still yield a peak and the global maximum is always reported first.
Spectrum dense_spectrum(const SpectrumModel& model, const GridSpec& grid, int num_peaks);

/// Same peaks as dense_spectrum without materialising the tensor.
std::vector<GridPeak> find_peaks(const SpectrumModel& model, const GridSpec& grid,
                                 int num_peaks);

/// Global maximum with lexicographic tie-breaking.
GridPeak argmax(const SpectrumModel& model, const GridSpec& grid);

/// Coarse peaks, each refined by an exhaustive search over the cells of
/// `fine` lying within one coarse step of it.
std::vector<GridPeak> refined_peaks(const SpectrumModel& model, const GridSpec& coarse,
                                    const GridSpec& fine, int num_peaks);

Spectrum bartlett_spectrum(const CsiStack& csi, const GridSpec& grid, int num_peaks,
                           const ArrayConfig& arr, const OfdmConfig& ofdm);

Spectrum music_spectrum(const CsiStack& csi, const HankelParams& hp, int num_paths,
                        const GridSpec& grid, const ArrayConfig& arr, const OfdmConfig& ofdm);

struct GridEstimate {
    double theta = 0.0;
    double phi = 0.0;
    double tau = 0.0;
    int i_theta = 0;
    int i_phi = 0;
    int i_tau = 0;
};

/// Single-target deterministic ML on a grid.
GridEstimate dml_single(const CsiStack& csi, const GridSpec& grid, const ArrayConfig& arr,
                        const OfdmConfig& ofdm);

struct MleResult {
    GridEstimate cell;
    cd gain;
    double residual = 0.0;
};

inline constexpr std::int64_t kMleMaxCells = 30 * 30 * 30;

/// Exhaustive single-path ML on the received pilots, gain concentrated out
/// per cell. Refuses grids above kMleMaxCells.
MleResult mle_bruteforce(const RxBlock& rx, const PilotBlock& pilots, const GridSpec& grid,
                         const ArrayConfig& arr, const OfdmConfig& ofdm);

/// Converts grid peaks into an EstimateSet (delay ascending).
EstimateSet to_estimate_set(const std::vector<GridPeak>& peaks);

}  // namespace baselines
}  // namespace isac
