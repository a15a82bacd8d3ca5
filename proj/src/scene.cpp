#include "isac/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace isac {

namespace {

double spacing(Side side, const ArrayConfig& arr) {
    return side == Side::Tx ? arr.tx_spacing_m : arr.rx_spacing_m;
}

int elements(Side side, const ArrayConfig& arr) {
    return side == Side::Tx ? arr.num_tx : arr.num_rx;
}

void check_angle(double angle) {
    if (!(angle > -kPi / 2.0 && angle < kPi / 2.0)) {
        throw DomainError("steering angle " + std::to_string(angle) +
                          " rad outside (-pi/2, pi/2)");
    }
}

}  // namespace

void Scene::validate(const OfdmConfig& ofdm) const {
    if (scatterers.empty()) {
        throw ConfigError("scene has no scatterers");
    }
    for (std::size_t m = 0; m < scatterers.size(); ++m) {
        const auto& s = scatterers[m];
        const std::string tag = "scatterer " + std::to_string(m + 1) + ": ";
        if (!(std::abs(s.aoa) < kPi / 2.0) || !(std::abs(s.aod) < kPi / 2.0)) {
            throw DomainError(tag + "angles must lie in (-pi/2, pi/2)");
        }
        if (!(s.delay >= 0.0 && s.delay < ofdm.max_unambiguous_delay())) {
            throw DomainError(tag + "delay must lie in [0, 1/delta_f)");
        }
        if (!(std::abs(s.gain) > 0.0)) {
            throw DomainError(tag + "gain must be non-zero");
        }
    }
}

VectorXcd steering_vector(Side side, double angle, const ArrayConfig& arr, const OfdmConfig& ofdm) {
    check_angle(angle);
    const int n = elements(side, arr);
    const double step = -2.0 * kPi * spacing(side, arr) / ofdm.wavelength() * std::sin(angle);
    VectorXcd a(n);
    for (int p = 0; p < n; ++p) {
        a(p) = std::polar(1.0, step * p);
    }
    return a;
}

VectorXcd steering_derivative(Side side, double angle, const ArrayConfig& arr,
                              const OfdmConfig& ofdm) {
    VectorXcd a = steering_vector(side, angle, arr, ofdm);
    const double k = -2.0 * kPi * spacing(side, arr) / ofdm.wavelength() * std::cos(angle);
    for (int p = 0; p < a.size(); ++p) {
        a(p) *= kJ * (k * p);
    }
    return a;
}

cd delay_response(int n, double tau, const OfdmConfig& ofdm) {
    if (n < 1 || n > ofdm.num_subcarriers) {
        throw DomainError("subcarrier index " + std::to_string(n) + " outside 1.." +
                          std::to_string(ofdm.num_subcarriers));
    }
    return std::polar(1.0, -2.0 * kPi * n * ofdm.subcarrier_spacing_hz * tau);
}

VectorXcd delay_vector(double tau, const OfdmConfig& ofdm) {
    VectorXcd c(ofdm.num_subcarriers);
    for (int n = 1; n <= ofdm.num_subcarriers; ++n) {
        c(n - 1) = delay_response(n, tau, ofdm);
    }
    return c;
}

MatrixXcd synth_channel(const Scene& scene, const ArrayConfig& arr, const OfdmConfig& ofdm,
                        int symbol, int n) {
    MatrixXcd h = MatrixXcd::Zero(arr.num_rx, arr.num_tx);
    const double to = ofdm.total_symbol_time();
    for (const auto& s : scene.scatterers) {
        const cd weight = s.gain * std::polar(1.0, 2.0 * kPi * symbol * to * s.doppler) *
                          delay_response(n, s.delay, ofdm);
        h.noalias() += weight * steering_vector(Side::Rx, s.aoa, arr, ofdm) *
                       steering_vector(Side::Tx, s.aod, arr, ofdm).transpose();
    }
    return h;
}

PilotBlock gen_pilots(std::uint64_t seed, const ArrayConfig& arr, const OfdmConfig& ofdm) {
    const int nt = arr.num_tx;
    const int kp = ofdm.symbols_per_subframe;
    if (kp < nt) {
        throw ConfigError("pilot block needs K_P >= N_t (K_P=" + std::to_string(kp) +
                          ", N_t=" + std::to_string(nt) + ")");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    const double amp = 1.0 / std::sqrt(2.0);

    PilotBlock block;
    block.seed = seed;
    block.symbols.reserve(ofdm.num_subcarriers);
    for (int n = 0; n < ofdm.num_subcarriers; ++n) {
        MatrixXcd s(nt, kp);
        while (true) {
            for (int j = 0; j < kp; ++j) {
                for (int i = 0; i < nt; ++i) {
                    s(i, j) = cd(bit(rng) ? amp : -amp, bit(rng) ? amp : -amp);
                }
            }
            Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(s * s.adjoint(), Eigen::EigenvaluesOnly);
            const VectorXd& ev = eig.eigenvalues();
            if (ev(0) > 1e-9 * ev(ev.size() - 1)) {
                break;
            }
        }
        block.symbols.push_back(std::move(s));
    }
    return block;
}

RxBlock simulate_rx(const Scene& scene, const PilotBlock& pilots, double snr_db,
                    std::uint64_t seed, const ArrayConfig& arr, const OfdmConfig& ofdm,
                    int num_subframes) {
    if (num_subframes < 1) {
        throw ConfigError("num_subframes must be >= 1");
    }
    const int np = ofdm.num_subcarriers;
    const int kp = ofdm.symbols_per_subframe;
    if (static_cast<int>(pilots.symbols.size()) != np) {
        throw ConfigError("pilot block has " + std::to_string(pilots.symbols.size()) +
                          " subcarriers, expected " + std::to_string(np));
    }

    RxBlock rx;
    rx.symbols.assign(num_subframes, std::vector<MatrixXcd>(np));
    double energy = 0.0;
    for (int p = 0; p < num_subframes; ++p) {
        for (int n = 1; n <= np; ++n) {
            const MatrixXcd& s = pilots.symbols[n - 1];
            MatrixXcd y(arr.num_rx, kp);
            for (int k = 0; k < kp; ++k) {
                const int symbol = p * kp + k + 1;
                y.col(k) = synth_channel(scene, arr, ofdm, symbol, n) * s.col(k);
            }
            energy += y.squaredNorm();
            rx.symbols[p][n - 1] = std::move(y);
        }
    }

    if (std::isinf(snr_db) && snr_db > 0) {
        rx.noise_variance = 0.0;
        return rx;
    }
    const double count = static_cast<double>(arr.num_rx) * np * kp * num_subframes;
    const double signal_power = energy / count;
    rx.noise_variance = signal_power / std::pow(10.0, snr_db / 10.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(rx.noise_variance / 2.0));
    for (auto& frame : rx.symbols) {
        for (auto& y : frame) {
            for (Eigen::Index j = 0; j < y.cols(); ++j) {
                for (Eigen::Index i = 0; i < y.rows(); ++i) {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    y(i, j) += cd(re, im);
                }
            }
        }
    }
    return rx;
}

Scene SceneSampler::sample(std::mt19937_64& rng, const OfdmConfig& ofdm) const {
    if (num_paths < 1) {
        throw ConfigError("scene sampler needs at least one path");
    }
    std::uniform_real_distribution<double> angle(-angle_limit, angle_limit);
    std::uniform_real_distribution<double> delay(0.0, ofdm.cp_time());
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    std::uniform_real_distribution<double> speed(-max_speed, max_speed);
    const double min_sep = min_delay_separation * ofdm.delay_resolution();

    Scene scene;
    scene.scatterers.reserve(num_paths);
    int attempts = 0;
    while (scene.size() < num_paths) {
        if (++attempts > max_attempts) {
            throw ConfigError("could not place " + std::to_string(num_paths) +
                              " delay-separated paths inside the cyclic prefix");
        }
        Scatterer s;
        s.aoa = angle(rng);
        s.aod = angle(rng);
        s.delay = delay(rng);
        s.gain = std::polar(1.0, phase(rng));
        s.doppler = max_speed > 0.0 ? speed_to_doppler(speed(rng), ofdm) : 0.0;
        const bool clash = std::any_of(scene.scatterers.begin(), scene.scatterers.end(),
                                       [&](const Scatterer& o) {
                                           return std::abs(o.delay - s.delay) < min_sep;
                                       });
        if (!clash) {
            scene.scatterers.push_back(s);
        }
    }
    return scene;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace isac
