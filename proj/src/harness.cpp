#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "isac/crb.hpp"
#include "isac/io.hpp"

namespace isac::harness {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

std::string fmt_snr(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Delays are only identifiable modulo 1/delta_f.
double delay_difference(double est, double truth, const OfdmConfig& ofdm) {
    return std::remainder(est - truth, ofdm.max_unambiguous_delay());
}

PathError path_error(const Scatterer& t, const PathEstimate& e, const OfdmConfig& ofdm) {
    PathError pe;
    pe.tau_normalized = delay_difference(e.delay, t.delay, ofdm) / ofdm.delay_resolution();
    pe.theta_deg = rad2deg(e.aoa - t.aoa);
    pe.phi_deg = rad2deg(e.aod - t.aod);
    if (e.doppler) {
        pe.speed_mps = std::abs(doppler_to_speed(*e.doppler - t.doppler, ofdm));
    }
    return pe;
}

void aggregate(MetricRow& row, const std::vector<TrialRecord>& recs) {
    double toa = 0.0;
    double aoa = 0.0;
    double aod = 0.0;
    double speed = 0.0;
    double latency = 0.0;
    long paths = 0;
    long speeds = 0;
    int ok = 0;
    for (const TrialRecord& r : recs) {
        if (!r.ok) {
            ++row.failures;
            continue;
        }
        ++ok;
        latency += r.latency_s;
        for (const PathError& e : r.errors) {
            toa += e.tau_normalized * e.tau_normalized;
            aoa += e.theta_deg * e.theta_deg;
            aod += e.phi_deg * e.phi_deg;
            ++paths;
            if (e.speed_mps) {
                speed += *e.speed_mps;
                ++speeds;
            }
        }
    }
    row.trials = static_cast<int>(recs.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.rmse_toa_normalized = paths > 0 ? std::sqrt(toa / paths) : nan;
    row.mse_aoa = paths > 0 ? aoa / paths : nan;
    row.mse_aod = paths > 0 ? aod / paths : nan;
    if (speeds > 0) {
        row.mae_speed = speed / speeds;
    }
    row.latency_s = ok > 0 ? latency / ok : nan;
}

// Coarse argmax followed by a fine search in its neighbourhood.
GridPeak refined_argmax(const baselines::SpectrumModel& model, const GridSpec& coarse,
                        const GridSpec& fine) {
    const GridPeak c = baselines::argmax(model, coarse);
    auto window = [](const GridAxis& f, double center, double hw) {
        int lo = static_cast<int>(std::ceil((center - hw - f.start) / f.step - 1e-9));
        int hi = static_cast<int>(std::floor((center + hw - f.start) / f.step + 1e-9));
        lo = std::clamp(lo, 0, f.count - 1);
        hi = std::clamp(hi, lo, f.count - 1);
        return GridAxis{f.at(lo), f.step, hi - lo + 1};
    };
    const GridSpec w{window(fine.theta, c.theta, coarse.theta.step),
                     window(fine.phi, c.phi, coarse.phi.step),
                     window(fine.tau, c.tau, coarse.tau.step)};
    return baselines::argmax(model, w);
}

TrialRecord crb_record(const Scene& scene, const PilotBlock& pilots, double sigma2,
                       int subframes, const SweepConfig& cfg) {
    TrialRecord rec;
    try {
        const CrbValues v = crb::crb_extract(
            crb::fim_assemble(scene, pilots, sigma2 / subframes, cfg.arr, cfg.ofdm));
        for (int m = 0; m < scene.size(); ++m) {
            PathError e;
            e.tau_normalized = std::sqrt(v.tau(m)) / cfg.ofdm.delay_resolution();
            e.theta_deg = rad2deg(std::sqrt(v.theta(m)));
            e.phi_deg = rad2deg(std::sqrt(v.phi(m)));
            rec.errors.push_back(e);
        }
        rec.ok = true;
    } catch (const Error& e) {
        rec.error = e.what();
    }
    return rec;
}

}  // namespace

std::vector<int> hungarian(const MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) {
        throw ConfigError("assignment needs a square cost matrix");
    }
    // Potentials formulation, 1-based with a virtual column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0);
    std::vector<double> v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0);
    std::vector<int> way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] > 0) {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    return row_to_col;
}

MatchResult match_estimates(const Scene& truth, const EstimateSet& est, const OfdmConfig& ofdm) {
    const int m = truth.size();
    if (est.size() != m) {
        throw ConfigError("cannot match " + std::to_string(est.size()) + " estimates to " +
                          std::to_string(m) + " true paths");
    }
    const double dt = ofdm.delay_resolution();
    MatrixXd cost(m, m);
    for (int i = 0; i < m; ++i) {
        const Scatterer& t = truth.scatterers[i];
        for (int j = 0; j < m; ++j) {
            const PathEstimate& e = est.paths[j];
            const double a = delay_difference(e.delay, t.delay, ofdm) / dt;
            const double b = e.aoa - t.aoa;
            const double c = e.aod - t.aod;
            cost(i, j) = a * a + b * b + c * c;
        }
    }
    MatchResult r;
    r.assignment = hungarian(cost);
    for (int i = 0; i < m; ++i) {
        r.cost += cost(i, r.assignment[i]);
        r.errors.push_back(path_error(truth.scatterers[i], est.paths[r.assignment[i]], ofdm));
    }
    return r;
}

std::string method_name(Method m) {
    switch (m) {
    case Method::Paraming: return "paraming";
    case Method::Bartlett: return "bartlett";
    case Method::Dml: return "dml";
    case Method::Music: return "music";
    case Method::Crb: return "crb";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::Paraming, Method::Bartlett, Method::Dml, Method::Music, Method::Crb}) {
        if (method_name(m) == name) {
            return m;
        }
    }
    throw ConfigError("unknown method '" + name +
                      "' (expected paraming, bartlett, dml, music or crb)");
}

SweepConfig SweepConfig::defaults() {
    SweepConfig cfg;
    cfg.arr = ArrayConfig::half_wavelength(8, 10, cfg.ofdm);
    cfg.fine = GridSpec::fine_default(cfg.ofdm);
    const double dt = cfg.ofdm.delay_resolution();
    cfg.coarse = GridSpec{GridAxis::span(deg2rad(-60.0), deg2rad(60.0), deg2rad(1.0)),
                          GridAxis::span(deg2rad(-60.0), deg2rad(60.0), deg2rad(1.0)),
                          GridAxis::span(0.0, cfg.ofdm.cp_time(), dt / 2.0)};
    return cfg;
}

void SweepConfig::validate() const {
    if (trials < 1) {
        throw ConfigError("trials must be >= 1");
    }
    if (snr_db.empty()) {
        throw ConfigError("SNR grid must not be empty");
    }
    if (methods.empty()) {
        throw ConfigError("at least one method is required");
    }
    if (sampler.num_paths < 1) {
        throw ConfigError("scenes need at least one path");
    }
    ofdm.validate();
    arr.validate(ofdm);
    coarse.validate();
    fine.validate();
    const HankelParams hp = hankel.value_or(HankelParams::defaults(arr, ofdm));
    hp.validate(arr, ofdm, sampler.num_paths);
    for (Method m : methods) {
        if (m == Method::Dml && sampler.num_paths != 1) {
            throw ConfigError("dml is single-target; set scenes.num_paths = 1");
        }
    }
    if (doppler() && ofdm.num_subframes < 2) {
        throw ConfigError("moving targets need at least 2 sub-frames");
    }
}

TrialSeeds trial_seeds(std::uint64_t master, int trial, int snr_index) {
    const std::uint64_t base = mix_seed(master, static_cast<std::uint64_t>(trial));
    return TrialSeeds{mix_seed(base, 1), mix_seed(base, 2),
                      mix_seed(base, 3 + static_cast<std::uint64_t>(snr_index))};
}

int worker_count(int requested) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    n = std::max(n, 1);
    if (const char* env = std::getenv("ISAC_SENSE_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (*end != '\0' || cap < 1) {
            throw ConfigError(std::string("ISAC_SENSE_THREADS must be a positive integer, got '") +
                              env + "'");
        }
        n = std::min<long>(n, cap);
    }
    return n;
}

EstimateSet run_method(Method m, const CsiStack& csi, int num_paths, const SweepConfig& cfg) {
    const HankelParams hp = cfg.hankel.value_or(HankelParams::defaults(cfg.arr, cfg.ofdm));
    switch (m) {
    case Method::Paraming: {
        if (cfg.doppler() && csi.num_subframes() > 1) {
            std::vector<CsiStack> frames;
            for (int p = 0; p < csi.num_subframes(); ++p) {
                frames.push_back(csi.subframe(p));
            }
            return paraming::estimate_doppler(frames, hp, num_paths, cfg.arr, cfg.ofdm);
        }
        return paraming::estimate(csi, hp, num_paths, cfg.arr, cfg.ofdm);
    }
    case Method::Bartlett: {
        const auto model = baselines::bartlett_model(csi, cfg.arr, cfg.ofdm);
        return baselines::to_estimate_set(
            baselines::refined_peaks(*model, cfg.coarse, cfg.fine, num_paths));
    }
    case Method::Dml: {
        if (num_paths != 1) {
            throw ConfigError("dml is single-target");
        }
        const auto model = baselines::bartlett_model(csi, cfg.arr, cfg.ofdm);
        return baselines::to_estimate_set({refined_argmax(*model, cfg.coarse, cfg.fine)});
    }
    case Method::Music: {
        const auto model = baselines::music_model(
            baselines::music_subspace(csi, hp, num_paths, cfg.arr, cfg.ofdm), cfg.arr, cfg.ofdm);
        return baselines::to_estimate_set(
            baselines::refined_peaks(*model, cfg.coarse, cfg.fine, num_paths));
    }
    case Method::Crb:
        break;
    }
    throw ConfigError("crb is a bound, not an estimator");
}

SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const int ns = static_cast<int>(cfg.snr_db.size());
    const int nm = static_cast<int>(cfg.methods.size());
    const int subframes = cfg.doppler() ? cfg.ofdm.num_subframes : 1;

    SweepResult res;
    res.records.assign(static_cast<std::size_t>(nm * ns), std::vector<TrialRecord>(cfg.trials));

    auto run_trial = [&](int t) {
        const TrialSeeds base = trial_seeds(cfg.seed, t, 0);
        std::mt19937_64 rng(base.scene);
        const Scene scene = cfg.sampler.sample(rng, cfg.ofdm);
        const PilotBlock pilots = gen_pilots(base.pilots, cfg.arr, cfg.ofdm);
        for (int s = 0; s < ns; ++s) {
            const TrialSeeds seeds = trial_seeds(cfg.seed, t, s);
            const RxBlock rx = simulate_rx(scene, pilots, cfg.snr_db[s], seeds.noise, cfg.arr,
                                           cfg.ofdm, subframes);
            std::optional<CsiStack> csi;
            std::string csi_error;
            try {
                csi = estimate_csi(rx, pilots, subframes > 1);
            } catch (const Error& e) {
                csi_error = e.what();
            }
            for (int mi = 0; mi < nm; ++mi) {
                TrialRecord& rec = res.records[static_cast<std::size_t>(mi * ns + s)][t];
                const Method m = cfg.methods[mi];
                if (m == Method::Crb) {
                    rec = rx.noise_variance > 0.0
                              ? crb_record(scene, pilots, rx.noise_variance, subframes, cfg)
                              : TrialRecord{false, "bound undefined without noise", {}, 0.0};
                    continue;
                }
                if (!csi) {
                    rec.error = csi_error;
                    continue;
                }
                try {
                    const auto t0 = std::chrono::steady_clock::now();
                    const EstimateSet est = run_method(m, *csi, scene.size(), cfg);
                    const auto t1 = std::chrono::steady_clock::now();
                    rec.latency_s = std::chrono::duration<double>(t1 - t0).count();
                    rec.errors = match_estimates(scene, est, cfg.ofdm).errors;
                    rec.ok = true;
                } catch (const Error& e) {
                    rec.error = e.what();
                }
            }
        }
    };

    const int workers = std::min(worker_count(cfg.threads), cfg.trials);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int t = next++; t < cfg.trials; t = next++) {
            try {
                run_trial(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = cfg.trials;
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    for (int mi = 0; mi < nm; ++mi) {
        for (int s = 0; s < ns; ++s) {
            MetricRow row;
            row.method = method_name(cfg.methods[mi]);
            row.snr_db = cfg.snr_db[s];
            aggregate(row, res.records[static_cast<std::size_t>(mi * ns + s)]);
            res.rows.push_back(row);
        }
    }
    return res;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
    std::string out =
        "method,snr_db,trials,failures,rmse_toa_normalized,mse_aoa_deg2,mse_aod_deg2,"
        "mae_speed_mps\n";
    for (const MetricRow& r : rows) {
        out += r.method + "," + fmt_snr(r.snr_db) + "," + std::to_string(r.trials) + "," +
               std::to_string(r.failures) + "," + fmt(r.rmse_toa_normalized) + "," +
               fmt(r.mse_aoa) + "," + fmt(r.mse_aod) + "," +
               (r.mae_speed ? fmt(*r.mae_speed) : std::string()) + "\n";
    }
    return out;
}

std::string latency_csv(const std::vector<MetricRow>& rows) {
    std::string out = "method,snr_db,trials,failures,latency_s\n";
    for (const MetricRow& r : rows) {
        out += r.method + "," + fmt_snr(r.snr_db) + "," + std::to_string(r.trials) + "," +
               std::to_string(r.failures) + "," + fmt(r.latency_s) + "\n";
    }
    return out;
}

void write_sweep(const SweepConfig& cfg, const SweepResult& result) {
    if (cfg.output_dir.empty()) {
        throw ConfigError("sweep output directory is not set");
    }
    const std::filesystem::path dir(cfg.output_dir);
    io::write_text((dir / "metrics.csv").string(), metrics_csv(result.rows));
    io::write_text((dir / "latency.csv").string(), latency_csv(result.rows));
}

// --- dataset ----------------------------------------------------------------

void DatasetConfig::validate() const {
    if (num_examples < 1) {
        throw ConfigError("dataset needs at least one example");
    }
    if (!(snr_max_db >= snr_min_db)) {
        throw ConfigError("dataset SNR range is empty");
    }
    if (num_subframes < 1) {
        throw ConfigError("dataset needs at least one sub-frame");
    }
    ofdm.validate();
    arr.validate(ofdm);
}

std::string example_stem(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "csi_%06d", index);
    return buf;
}

std::string prediction_file(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "est_%06d.json", index);
    return buf;
}

DatasetExample make_example(const DatasetConfig& cfg, int index) {
    const std::uint64_t base = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
    DatasetExample ex;
    ex.index = index;
    ex.seeds = TrialSeeds{mix_seed(base, 1), mix_seed(base, 2), mix_seed(base, 3)};
    std::mt19937_64 snr_rng(mix_seed(base, 4));
    ex.snr_db = std::uniform_real_distribution<double>(cfg.snr_min_db, cfg.snr_max_db)(snr_rng);
    std::mt19937_64 rng(ex.seeds.scene);
    ex.scene = cfg.sampler.sample(rng, cfg.ofdm);
    const PilotBlock pilots = gen_pilots(ex.seeds.pilots, cfg.arr, cfg.ofdm);
    const RxBlock rx =
        simulate_rx(ex.scene, pilots, ex.snr_db, ex.seeds.noise, cfg.arr, cfg.ofdm, cfg.num_subframes);
    ex.csi = estimate_csi(rx, pilots, cfg.num_subframes > 1);
    return ex;
}

void dataset_export(const DatasetConfig& cfg) {
    cfg.validate();
    if (cfg.output_dir.empty()) {
        throw ConfigError("dataset output directory is not set");
    }
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    io::Json labels = io::Json::array();
    io::Json files = io::Json::array();
    for (int i = 0; i < cfg.num_examples; ++i) {
        const DatasetExample ex = make_example(cfg, i);
        const std::string stem = example_stem(i);
        io::write_csi((dir / stem).string(), ex.csi);
        io::Json entry = io::to_json(ex.scene);
        entry["index"] = i;
        entry["csi"] = stem;
        entry["snr_db"] = ex.snr_db;
        entry["seeds"] = {{"scene", ex.seeds.scene}, {"pilots", ex.seeds.pilots},
                          {"noise", ex.seeds.noise}};
        labels.push_back(std::move(entry));
        files.push_back(stem);
    }
    io::write_json((dir / "labels.json").string(), io::Json{{"examples", labels}});

    io::Json manifest;
    manifest["format"] = "isac-csi-dataset";
    manifest["version"] = 1;
    manifest["num_examples"] = cfg.num_examples;
    manifest["N_t"] = cfg.arr.num_tx;
    manifest["N_r"] = cfg.arr.num_rx;
    manifest["N_P"] = cfg.ofdm.num_subcarriers;
    manifest["K_P"] = cfg.ofdm.symbols_per_subframe;
    manifest["K_tilde"] = cfg.num_subframes;
    manifest["carrier_hz"] = cfg.ofdm.carrier_hz;
    manifest["subcarrier_spacing_hz"] = cfg.ofdm.subcarrier_spacing_hz;
    manifest["symbol_time_total_s"] = cfg.ofdm.total_symbol_time();
    manifest["delta_t_s"] = cfg.ofdm.delay_resolution();
    manifest["snr_range_db"] = {cfg.snr_min_db, cfg.snr_max_db};
    manifest["seed"] = cfg.seed;
    manifest["num_paths"] = cfg.sampler.num_paths;
    manifest["min_delay_separation"] = cfg.sampler.min_delay_separation;
    manifest["max_speed_mps"] = cfg.sampler.max_speed;
    manifest["angle_limit_deg"] = rad2deg(cfg.sampler.angle_limit);
    manifest["files"] = files;
    io::write_json((dir / "manifest.json").string(), manifest);
}

EvalResult eval_cvnn(const std::string& dataset_dir, const std::string& predictions_dir) {
    const std::filesystem::path ddir(dataset_dir);
    const std::filesystem::path pdir(predictions_dir);
    const io::Json manifest = io::read_json((ddir / "manifest.json").string());
    OfdmConfig ofdm;
    ofdm.carrier_hz = manifest.at("carrier_hz").get<double>();
    ofdm.subcarrier_spacing_hz = manifest.at("subcarrier_spacing_hz").get<double>();
    ofdm.num_subcarriers = manifest.at("N_P").get<int>();
    ofdm.symbols_per_subframe = manifest.at("K_P").get<int>();

    const io::Json labels = io::read_json((ddir / "labels.json").string());
    EvalResult out;
    out.row.method = "cvnn";
    out.row.snr_db = std::numeric_limits<double>::quiet_NaN();
    std::vector<TrialRecord> recs;
    for (const io::Json& entry : labels.at("examples")) {
        const int index = entry.at("index").get<int>();
        const Scene truth = io::scene_from_json(entry);
        TrialRecord rec;
        const std::filesystem::path file = pdir / prediction_file(index);
        try {
            const EstimateSet est = io::estimate_set_from_json(io::read_json(file.string()));
            MatchResult m = match_estimates(truth, est, ofdm);
            rec.errors = m.errors;
            rec.ok = true;
            out.matches.push_back(std::move(m));
        } catch (const Error& e) {
            rec.error = e.what();
            out.matches.emplace_back();
        }
        recs.push_back(std::move(rec));
    }
    aggregate(out.row, recs);
    return out;
}

}  // namespace isac::harness
