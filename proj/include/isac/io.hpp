#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "isac/harness.hpp"

namespace isac::io {

using Json = nlohmann::json;

/// Little-endian interleaved float32 (re, im), column-major (N_tN_r) x N_P per
/// sub-frame, plus a JSON sidecar. Static stacks store one matrix; stacks with
/// per-sub-frame estimates store K_tilde of them and reload their mean.
void write_csi(const std::string& stem, const CsiStack& csi);
CsiStack read_csi(const std::string& stem);

/// {paths:[{tau_ns, theta_deg, phi_deg, fd_hz}]}; fd_hz is null without Doppler.
Json to_json(const EstimateSet& est);
EstimateSet estimate_set_from_json(const Json& j);

/// Same path fields as an EstimateSet plus the complex gain.
Json to_json(const Scene& scene);
Scene scene_from_json(const Json& j);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

/// Single-scene setup used by `simulate`, `estimate` and `crb`.
struct Setup {
    OfdmConfig ofdm;
    ArrayConfig arr;
    Scene scene;
    std::optional<HankelParams> hankel;
    std::uint64_t pilot_seed = 1;
    std::uint64_t noise_seed = 2;
    double snr_db = kNoiseless;
    int num_subframes = 1;
};

Setup parse_setup(const std::string& toml_text);
Setup load_setup(const std::string& path);

harness::SweepConfig parse_sweep(const std::string& toml_text);
harness::DatasetConfig parse_dataset(const std::string& toml_text);

}  // namespace isac::io
