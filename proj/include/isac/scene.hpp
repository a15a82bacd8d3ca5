#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "isac/config.hpp"

namespace isac {

/// One point scatterer in the bistatic geometry, SI units.
struct Scatterer {
    double aoa = 0.0;      // rad, at the radar receive array
    double aod = 0.0;      // rad, from the base station
    double delay = 0.0;    // s
    double doppler = 0.0;  // Hz
    cd gain{1.0, 0.0};
};

struct Scene {
    std::vector<Scatterer> scatterers;

    int size() const { return static_cast<int>(scatterers.size()); }
    void validate(const OfdmConfig& ofdm) const;
};

enum class Side { Tx, Rx };

/// ULA response; element p is exp(-j 2 pi d/lambda p sin(angle)).
VectorXcd steering_vector(Side side, double angle, const ArrayConfig& arr, const OfdmConfig& ofdm);

/// d/d(angle) of steering_vector.
VectorXcd steering_derivative(Side side, double angle, const ArrayConfig& arr,
                              const OfdmConfig& ofdm);

/// c_n(tau) = exp(-j 2 pi n delta_f tau), n in 1..N_P.
cd delay_response(int n, double tau, const OfdmConfig& ofdm);

/// [c_1(tau) ... c_{N_P}(tau)]^T.
VectorXcd delay_vector(double tau, const OfdmConfig& ofdm);

/// Frequency-domain channel H_{n,k} = A_r G_k D_n A_t^T (N_r x N_t).
/// `symbol` is the absolute 1-based OFDM symbol index inside the frame; it
/// only matters through the Doppler phase 2 pi k T_o f_D.
MatrixXcd synth_channel(const Scene& scene, const ArrayConfig& arr, const OfdmConfig& ofdm,
                        int symbol, int n);

/// Known pilot symbols, one N_t x K_P block per subcarrier. The same block is
/// transmitted in every sub-frame.
struct PilotBlock {
    std::vector<MatrixXcd> symbols;  // index n-1
    std::uint64_t seed = 0;
};

/// Unit-modulus QPSK pilots; deterministic in `seed`.
PilotBlock gen_pilots(std::uint64_t seed, const ArrayConfig& arr, const OfdmConfig& ofdm);

/// Received pilots: per sub-frame, per subcarrier, an N_r x K_P matrix.
struct RxBlock {
    std::vector<std::vector<MatrixXcd>> symbols;  // [subframe][n-1]
    double noise_variance = 0.0;

    int num_subframes() const { return static_cast<int>(symbols.size()); }
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// y_{n,k} = H_{n,k} s_{n,k} + w_{n,k}. SNR is per receive element, measured on
/// the noiseless signal of this realization. Pass kNoiseless to disable noise.
RxBlock simulate_rx(const Scene& scene, const PilotBlock& pilots, double snr_db,
                    std::uint64_t seed, const ArrayConfig& arr, const OfdmConfig& ofdm,
                    int num_subframes = 1);

/// Random scene generator used by experiments and dataset export.
struct SceneSampler {
    int num_paths = 1;
    double angle_limit = deg2rad(60.0);  // |theta|, |phi| < limit
    double min_delay_separation = 2.0;   // in units of delay_resolution()
    double max_speed = 0.0;              // m/s; 0 disables Doppler
    int max_attempts = 10000;

    Scene sample(std::mt19937_64& rng, const OfdmConfig& ofdm) const;
};

/// One-way Doppler <-> speed mapping, v = f_D * lambda.
inline double doppler_to_speed(double doppler, const OfdmConfig& ofdm) {
    return doppler * ofdm.wavelength();
}
inline double speed_to_doppler(double speed, const OfdmConfig& ofdm) {
    return speed / ofdm.wavelength();
}

/// SplitMix64 finalizer; used to derive independent per-task seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace isac
