#include "isac/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace isac::io {

namespace {

static_assert(std::endian::native == std::endian::little, "CSI format assumes little-endian");

double ns(double seconds) { return seconds * 1e9; }

Json path_json(double delay, double aoa, double aod, std::optional<double> doppler) {
    Json p;
    p["tau_ns"] = ns(delay);
    p["theta_deg"] = rad2deg(aoa);
    p["phi_deg"] = rad2deg(aod);
    p["fd_hz"] = doppler ? Json(*doppler) : Json(nullptr);
    return p;
}

const Json& member(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw FormatError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

double number(const Json& j, const char* key) {
    const Json& v = member(j, key);
    if (!v.is_number()) {
        throw FormatError(std::string("field '") + key + "' must be a number");
    }
    return v.get<double>();
}

// --- TOML helpers ---------------------------------------------------------

template <typename T>
T get_or(const toml::table& t, std::string_view key, T fallback) {
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return fallback;
    }
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = n->value<double>()) {
            return *v;
        }
        if (auto s = n->value<std::string>(); s && (*s == "inf" || *s == "noiseless")) {
            return kNoiseless;
        }
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (auto v = n->value<std::int64_t>(); v && *v >= 0) {
            return static_cast<std::uint64_t>(*v);
        }
    } else {
        if (auto v = n->value<T>()) {
            return *v;
        }
    }
    throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
}

const toml::table* sub_table(const toml::table& t, std::string_view key) {
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return nullptr;
    }
    if (!n->is_table()) {
        throw ConfigError("config key '" + std::string(key) + "' must be a table");
    }
    return n->as_table();
}

std::vector<double> number_list(const toml::node& n, std::string_view key) {
    const toml::array* a = n.as_array();
    if (a == nullptr) {
        throw ConfigError("config key '" + std::string(key) + "' must be an array");
    }
    std::vector<double> out;
    for (const toml::node& e : *a) {
        auto v = e.value<double>();
        if (!v) {
            throw ConfigError("config key '" + std::string(key) + "' must hold numbers");
        }
        out.push_back(*v);
    }
    return out;
}

toml::table parse_toml(const std::string& text) {
    try {
        return toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(msg.str());
    }
}

void read_geometry(const toml::table& root, OfdmConfig& ofdm, ArrayConfig& arr) {
    if (const toml::table* t = sub_table(root, "ofdm")) {
        ofdm.carrier_hz = get_or(*t, "carrier_hz", ofdm.carrier_hz);
        ofdm.subcarrier_spacing_hz = get_or(*t, "subcarrier_spacing_hz", ofdm.subcarrier_spacing_hz);
        ofdm.num_subcarriers =
            static_cast<int>(get_or<std::int64_t>(*t, "num_subcarriers", ofdm.num_subcarriers));
        ofdm.symbols_per_subframe = static_cast<int>(
            get_or<std::int64_t>(*t, "symbols_per_subframe", ofdm.symbols_per_subframe));
        ofdm.num_subframes =
            static_cast<int>(get_or<std::int64_t>(*t, "num_subframes", ofdm.num_subframes));
    }
    ofdm.validate();
    int nt = 8;
    int nr = 10;
    const toml::table* at = sub_table(root, "array");
    if (at != nullptr) {
        nt = static_cast<int>(get_or<std::int64_t>(*at, "num_tx", nt));
        nr = static_cast<int>(get_or<std::int64_t>(*at, "num_rx", nr));
    }
    arr = ArrayConfig::half_wavelength(nt, nr, ofdm);
    if (at != nullptr) {
        arr.tx_spacing_m = get_or(*at, "tx_spacing_m", arr.tx_spacing_m);
        arr.rx_spacing_m = get_or(*at, "rx_spacing_m", arr.rx_spacing_m);
    }
    arr.validate(ofdm);
}

std::optional<HankelParams> read_hankel(const toml::table& root, const ArrayConfig& arr,
                                        const OfdmConfig& ofdm) {
    const toml::table* t = sub_table(root, "hankel");
    if (t == nullptr) {
        return std::nullopt;
    }
    HankelParams hp = HankelParams::defaults(arr, ofdm);
    hp.sub_tx = static_cast<int>(get_or<std::int64_t>(*t, "sub_tx", hp.sub_tx));
    hp.sub_rx = static_cast<int>(get_or<std::int64_t>(*t, "sub_rx", hp.sub_rx));
    hp.sub_sc = static_cast<int>(get_or<std::int64_t>(*t, "sub_sc", hp.sub_sc));
    hp.validate(arr, ofdm);
    return hp;
}

SceneSampler read_sampler(const toml::table* t) {
    SceneSampler s;
    if (t == nullptr) {
        return s;
    }
    s.num_paths = static_cast<int>(get_or<std::int64_t>(*t, "num_paths", s.num_paths));
    s.angle_limit = deg2rad(get_or(*t, "angle_limit_deg", rad2deg(s.angle_limit)));
    s.min_delay_separation = get_or(*t, "min_delay_separation", s.min_delay_separation);
    s.max_speed = get_or(*t, "max_speed_mps", s.max_speed);
    return s;
}

GridSpec read_grid(const toml::table* t, GridSpec g) {
    if (t == nullptr) {
        return g;
    }
    auto axis = [&](std::string_view key, double unit, GridAxis& out) {
        if (const toml::node* n = t->get(key)) {
            const std::vector<double> v = number_list(*n, key);
            if (v.size() != 3) {
                throw ConfigError("grid axis '" + std::string(key) + "' needs [lo, hi, step]");
            }
            out = GridAxis::span(v[0] * unit, v[1] * unit, v[2] * unit);
        }
    };
    axis("theta_deg", kPi / 180.0, g.theta);
    axis("phi_deg", kPi / 180.0, g.phi);
    axis("tau_ns", 1e-9, g.tau);
    g.validate();
    return g;
}

}  // namespace

// --- CSI binary -------------------------------------------------------------

void write_csi(const std::string& stem, const CsiStack& csi) {
    const bool stacked = !csi.per_subframe.empty();
    const std::vector<MatrixXcd> single{csi.matrix};
    const std::vector<MatrixXcd>& mats = stacked ? csi.per_subframe : single;
    std::vector<float> buf;
    buf.reserve(mats.size() * static_cast<std::size_t>(csi.matrix.size()) * 2);
    for (const MatrixXcd& m : mats) {
        if (m.rows() != csi.matrix.rows() || m.cols() != csi.matrix.cols()) {
            throw FormatError("sub-frame CSI has inconsistent dimensions");
        }
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                buf.push_back(static_cast<float>(m(i, j).real()));
                buf.push_back(static_cast<float>(m(i, j).imag()));
            }
        }
    }
    std::ofstream bin(stem + ".bin", std::ios::binary);
    bin.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!bin) {
        throw FormatError("cannot write " + stem + ".bin");
    }
    Json meta;
    meta["N_t"] = csi.num_tx;
    meta["N_r"] = csi.num_rx;
    meta["N_P"] = csi.num_subcarriers();
    meta["K_tilde"] = static_cast<int>(mats.size());
    meta["layout"] = "rx-fastest";
    meta["dtype"] = "complex64-le";
    meta["order"] = "column-major";
    write_json(stem + ".json", meta);
}

CsiStack read_csi(const std::string& stem) {
    const Json meta = read_json(stem + ".json");
    if (member(meta, "layout") != "rx-fastest") {
        throw FormatError("unsupported CSI layout in " + stem + ".json");
    }
    const int nt = static_cast<int>(number(meta, "N_t"));
    const int nr = static_cast<int>(number(meta, "N_r"));
    const int np = static_cast<int>(number(meta, "N_P"));
    const int kt = static_cast<int>(number(meta, "K_tilde"));
    if (nt < 1 || nr < 1 || np < 1 || kt < 1) {
        throw FormatError("CSI sidecar has non-positive dimensions");
    }
    const std::size_t per = static_cast<std::size_t>(nt) * nr * np * 2;
    std::vector<float> buf(per * kt);
    std::ifstream bin(stem + ".bin", std::ios::binary | std::ios::ate);
    if (!bin) {
        throw FormatError("cannot open " + stem + ".bin");
    }
    const auto size = static_cast<std::size_t>(bin.tellg());
    if (size != buf.size() * sizeof(float)) {
        throw FormatError(stem + ".bin holds " + std::to_string(size) + " bytes, expected " +
                          std::to_string(buf.size() * sizeof(float)));
    }
    bin.seekg(0);
    bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));

    CsiStack csi;
    csi.num_tx = nt;
    csi.num_rx = nr;
    std::vector<MatrixXcd> mats(kt, MatrixXcd(nt * nr, np));
    std::size_t pos = 0;
    for (MatrixXcd& m : mats) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                m(i, j) = cd(buf[pos], buf[pos + 1]);
                pos += 2;
            }
        }
    }
    if (kt == 1) {
        csi.matrix = mats[0];
    } else {
        csi.matrix = MatrixXcd::Zero(nt * nr, np);
        for (const MatrixXcd& m : mats) {
            csi.matrix += m;
        }
        csi.matrix /= static_cast<double>(kt);
        csi.per_subframe = std::move(mats);
    }
    return csi;
}

// --- JSON -------------------------------------------------------------------

Json to_json(const EstimateSet& est) {
    Json j;
    j["paths"] = Json::array();
    for (const PathEstimate& p : est.paths) {
        Json e = path_json(p.delay, p.aoa, p.aod, p.doppler);
        e["magnitude"] = p.magnitude;
        if (p.inconsistent_phase) {
            e["inconsistent_phase"] = true;
        }
        j["paths"].push_back(std::move(e));
    }
    if (!est.warnings.empty()) {
        j["warnings"] = est.warnings;
    }
    return j;
}

EstimateSet estimate_set_from_json(const Json& j) {
    const Json& paths = member(j, "paths");
    if (!paths.is_array()) {
        throw FormatError("'paths' must be an array");
    }
    EstimateSet est;
    for (const Json& p : paths) {
        PathEstimate e;
        e.delay = number(p, "tau_ns") * 1e-9;
        e.aoa = deg2rad(number(p, "theta_deg"));
        e.aod = deg2rad(number(p, "phi_deg"));
        if (p.contains("fd_hz") && !p.at("fd_hz").is_null()) {
            e.doppler = number(p, "fd_hz");
        }
        if (p.contains("magnitude")) {
            e.magnitude = number(p, "magnitude");
        }
        est.paths.push_back(e);
    }
    std::stable_sort(est.paths.begin(), est.paths.end(),
                     [](const PathEstimate& a, const PathEstimate& b) { return a.delay < b.delay; });
    return est;
}

Json to_json(const Scene& scene) {
    Json j;
    j["paths"] = Json::array();
    for (const Scatterer& s : scene.scatterers) {
        Json e = path_json(s.delay, s.aoa, s.aod, s.doppler);
        e["gain_re"] = s.gain.real();
        e["gain_im"] = s.gain.imag();
        j["paths"].push_back(std::move(e));
    }
    return j;
}

Scene scene_from_json(const Json& j) {
    Scene scene;
    for (const Json& p : member(j, "paths")) {
        Scatterer s;
        s.delay = number(p, "tau_ns") * 1e-9;
        s.aoa = deg2rad(number(p, "theta_deg"));
        s.aod = deg2rad(number(p, "phi_deg"));
        if (p.contains("fd_hz") && !p.at("fd_hz").is_null()) {
            s.doppler = number(p, "fd_hz");
        }
        s.gain = cd(p.value("gain_re", 1.0), p.value("gain_im", 0.0));
        scene.scatterers.push_back(s);
    }
    return scene;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw FormatError("cannot write " + path);
    }
}

Json read_json(const std::string& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// --- TOML -------------------------------------------------------------------

Setup parse_setup(const std::string& toml_text) {
    const toml::table root = parse_toml(toml_text);
    Setup s;
    read_geometry(root, s.ofdm, s.arr);
    s.hankel = read_hankel(root, s.arr, s.ofdm);
    if (const toml::node* n = root.get("scatterer")) {
        const toml::array* list = n->as_array();
        if (list == nullptr) {
            throw ConfigError("'scatterer' must be an array of tables ([[scatterer]])");
        }
        for (const toml::node& e : *list) {
            const toml::table* t = e.as_table();
            if (t == nullptr) {
                throw ConfigError("'scatterer' entries must be tables");
            }
            Scatterer sc;
            sc.aoa = deg2rad(get_or(*t, "aoa_deg", 0.0));
            sc.aod = deg2rad(get_or(*t, "aod_deg", 0.0));
            sc.delay = get_or(*t, "delay_ns", 0.0) * 1e-9;
            sc.doppler = get_or(*t, "doppler_hz", 0.0);
            const double mag = get_or(*t, "gain_abs", 1.0);
            const double ph = deg2rad(get_or(*t, "gain_phase_deg", 0.0));
            sc.gain = std::polar(mag, ph);
            s.scene.scatterers.push_back(sc);
        }
    }
    if (const toml::table* t = sub_table(root, "simulate")) {
        s.snr_db = get_or(*t, "snr_db", s.snr_db);
        s.pilot_seed = get_or(*t, "pilot_seed", s.pilot_seed);
        s.noise_seed = get_or(*t, "noise_seed", s.noise_seed);
        s.num_subframes = static_cast<int>(get_or<std::int64_t>(*t, "subframes", s.num_subframes));
    }
    if (!s.scene.scatterers.empty()) {
        s.scene.validate(s.ofdm);
    }
    return s;
}

Setup load_setup(const std::string& path) { return parse_setup(read_text(path)); }

harness::SweepConfig parse_sweep(const std::string& toml_text) {
    const toml::table root = parse_toml(toml_text);
    harness::SweepConfig cfg = harness::SweepConfig::defaults();
    read_geometry(root, cfg.ofdm, cfg.arr);
    cfg.hankel = read_hankel(root, cfg.arr, cfg.ofdm);
    cfg.fine = GridSpec::fine_default(cfg.ofdm);
    cfg.coarse = harness::SweepConfig::defaults().coarse;
    if (const toml::table* g = sub_table(root, "grid")) {
        cfg.coarse = read_grid(sub_table(*g, "coarse"), cfg.coarse);
        cfg.fine = read_grid(sub_table(*g, "fine"), cfg.fine);
    }
    const toml::table* t = sub_table(root, "sweep");
    if (t == nullptr) {
        throw ConfigError("sweep config needs a [sweep] table");
    }
    if (const toml::node* n = t->get("snr_db")) {
        cfg.snr_db = number_list(*n, "snr_db");
    }
    cfg.trials = static_cast<int>(get_or<std::int64_t>(*t, "trials", cfg.trials));
    cfg.seed = get_or(*t, "seed", cfg.seed);
    cfg.output_dir = get_or<std::string>(*t, "output", cfg.output_dir);
    cfg.threads = static_cast<int>(get_or<std::int64_t>(*t, "threads", cfg.threads));
    if (const toml::node* n = t->get("methods")) {
        const toml::array* a = n->as_array();
        if (a == nullptr) {
            throw ConfigError("'methods' must be an array of names");
        }
        cfg.methods.clear();
        for (const toml::node& e : *a) {
            auto name = e.value<std::string>();
            if (!name) {
                throw ConfigError("'methods' must be an array of names");
            }
            cfg.methods.push_back(harness::parse_method(*name));
        }
    }
    cfg.sampler = read_sampler(sub_table(*t, "scenes"));
    cfg.validate();
    return cfg;
}

harness::DatasetConfig parse_dataset(const std::string& toml_text) {
    const toml::table root = parse_toml(toml_text);
    harness::DatasetConfig cfg;
    read_geometry(root, cfg.ofdm, cfg.arr);
    const toml::table* t = sub_table(root, "dataset");
    if (t == nullptr) {
        throw ConfigError("dataset config needs a [dataset] table");
    }
    cfg.num_examples = static_cast<int>(get_or<std::int64_t>(*t, "num_examples", cfg.num_examples));
    cfg.snr_min_db = get_or(*t, "snr_min_db", cfg.snr_min_db);
    cfg.snr_max_db = get_or(*t, "snr_max_db", cfg.snr_max_db);
    cfg.seed = get_or(*t, "seed", cfg.seed);
    cfg.num_subframes = static_cast<int>(get_or<std::int64_t>(*t, "subframes", cfg.num_subframes));
    cfg.output_dir = get_or<std::string>(*t, "output", cfg.output_dir);
    cfg.sampler = read_sampler(sub_table(*t, "scenes"));
    cfg.validate();
    return cfg;
}

}  // namespace isac::io
