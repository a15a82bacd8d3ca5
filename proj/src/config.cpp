#include "isac/config.hpp"

#include <string>

namespace isac {

void OfdmConfig::validate() const {
    if (!(subcarrier_spacing_hz > 0.0)) {
        throw ConfigError("subcarrier spacing must be positive");
    }
    if (!(carrier_hz > 0.0)) {
        throw ConfigError("carrier frequency must be positive");
    }
    if (num_subcarriers < 2) {
        throw ConfigError("need at least 2 subcarriers, got " + std::to_string(num_subcarriers));
    }
    if (symbols_per_subframe < 1) {
        throw ConfigError("need at least 1 OFDM symbol per sub-frame");
    }
    if (num_subframes < 1) {
        throw ConfigError("need at least 1 sub-frame");
    }
}

ArrayConfig ArrayConfig::half_wavelength(int num_tx, int num_rx, const OfdmConfig& ofdm) {
    const double half = ofdm.wavelength() / 2.0;
    return ArrayConfig{num_tx, num_rx, half, half};
}

void ArrayConfig::validate(const OfdmConfig& ofdm) const {
    if (num_tx < 2 || num_rx < 2) {
        throw ConfigError("arrays need at least 2 elements (tx=" + std::to_string(num_tx) +
                          ", rx=" + std::to_string(num_rx) + ")");
    }
    // Small slack so lambda/2 computed from a rounded file value still passes.
    const double limit = ofdm.wavelength() / 2.0 * (1.0 + 1e-9);
    if (!(tx_spacing_m > 0.0) || tx_spacing_m > limit) {
        throw ConfigError("transmit spacing must lie in (0, lambda/2]");
    }
    if (!(rx_spacing_m > 0.0) || rx_spacing_m > limit) {
        throw ConfigError("receive spacing must lie in (0, lambda/2]");
    }
}

}  // namespace isac
