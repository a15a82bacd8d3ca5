#pragma once

#include "isac/types.hpp"

namespace isac {

/// OFDM numerology. Defaults follow the reference 28 GHz setup
/// (64 subcarriers at 960 kHz, 10 symbols per sub-frame, 4 sub-frames).
struct OfdmConfig {
    double carrier_hz = 28e9;
    double subcarrier_spacing_hz = 960e3;
    int num_subcarriers = 64;
    int symbols_per_subframe = 10;
    int num_subframes = 4;

    double symbol_time() const { return 1.0 / subcarrier_spacing_hz; }
    double cp_time() const { return symbol_time() / 4.0; }
    double total_symbol_time() const { return symbol_time() + cp_time(); }
    /// Temporal resolution 1/(N_P * delta_f).
    double delay_resolution() const {
        return 1.0 / (static_cast<double>(num_subcarriers) * subcarrier_spacing_hz);
    }
    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    /// Largest delay that the per-subcarrier phase can represent.
    double max_unambiguous_delay() const { return 1.0 / subcarrier_spacing_hz; }

    void validate() const;
};

/// Transmit (base station) and receive (radar) ULAs.
struct ArrayConfig {
    int num_tx = 8;
    int num_rx = 10;
    double tx_spacing_m = 0.0;
    double rx_spacing_m = 0.0;

    static ArrayConfig half_wavelength(int num_tx, int num_rx, const OfdmConfig& ofdm);

    int num_pairs() const { return num_tx * num_rx; }
    void validate(const OfdmConfig& ofdm) const;
};

}  // namespace isac
