#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "isac/chanest.hpp"
#include "isac/paraming.hpp"

namespace testing {

struct Setup {
    isac::OfdmConfig ofdm;
    isac::ArrayConfig arr;
};

inline Setup table1() {
    Setup s;
    s.arr = isac::ArrayConfig::half_wavelength(8, 10, s.ofdm);
    return s;
}

inline Setup small(int nt, int nr, int np, int kp = 10) {
    Setup s;
    s.ofdm.num_subcarriers = np;
    s.ofdm.symbols_per_subframe = kp;
    s.arr = isac::ArrayConfig::half_wavelength(nt, nr, s.ofdm);
    return s;
}

inline isac::Scatterer path(double aoa_deg, double aod_deg, double delay, isac::cd gain = {1.0, 0.0},
                            double doppler = 0.0) {
    isac::Scatterer sc;
    sc.aoa = isac::deg2rad(aoa_deg);
    sc.aod = isac::deg2rad(aod_deg);
    sc.delay = delay;
    sc.gain = gain;
    sc.doppler = doppler;
    return sc;
}

inline isac::CsiStack noiseless_csi(const isac::Scene& scene, const Setup& s,
                                    std::uint64_t pilot_seed = 3) {
    const isac::PilotBlock pilots = isac::gen_pilots(pilot_seed, s.arr, s.ofdm);
    const isac::RxBlock rx = isac::simulate_rx(scene, pilots, isac::kNoiseless, 0, s.arr, s.ofdm);
    return isac::estimate_csi(rx, pilots);
}

inline double rel_err(const isac::MatrixXcd& a, const isac::MatrixXcd& b) {
    return (a - b).norm() / b.norm();
}

// Independent steering oracle: exp(-j*pi*p*sin(angle)) for half-wavelength spacing.
inline isac::VectorXcd half_wave_steering(int n, double angle) {
    isac::VectorXcd a(n);
    for (int p = 0; p < n; ++p) {
        a(p) = std::exp(isac::cd(0.0, -isac::kPi * p * std::sin(angle)));
    }
    return a;
}

inline int numeric_rank(const isac::MatrixXcd& m, double rel = 1e-10) {
    Eigen::JacobiSVD<isac::MatrixXcd> svd(m);
    const auto& s = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel * s(0)) {
            ++r;
        }
    }
    return r;
}

}  // namespace testing
