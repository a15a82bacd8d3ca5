#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isac/baselines.hpp"
#include "isac/paraming.hpp"

namespace isac::harness {

struct PathError {
    double tau_normalized = 0.0;  // (tau_hat - tau) / delta_t
    double theta_deg = 0.0;
    double phi_deg = 0.0;
    std::optional<double> speed_mps;  // |v_hat - v| when both carry Doppler
};

struct MatchResult {
    std::vector<int> assignment;  // assignment[i] = estimate matched to true path i
    double cost = 0.0;
    std::vector<PathError> errors;  // per true path
};

/// Minimum-cost assignment on (d_tau/delta_t)^2 + d_theta^2 + d_phi^2 (radians).
MatchResult match_estimates(const Scene& truth, const EstimateSet& est, const OfdmConfig& ofdm);

/// Hungarian algorithm on a square cost matrix; returns row -> column.
std::vector<int> hungarian(const MatrixXd& cost);

enum class Method { Paraming, Bartlett, Dml, Music, Crb };
std::string method_name(Method m);
Method parse_method(const std::string& name);

struct SweepConfig {
    std::vector<double> snr_db;
    int trials = 300;
    SceneSampler sampler;
    std::vector<Method> methods{Method::Paraming};
    std::uint64_t seed = 1;
    std::string output_dir;

    OfdmConfig ofdm;
    ArrayConfig arr;
    std::optional<HankelParams> hankel;  // defaults when unset
    /// Grid methods search `coarse`, then refine on `fine` around each peak.
    GridSpec coarse;
    GridSpec fine;
    /// Worker cap; 0 uses hardware concurrency, further capped by ISAC_SENSE_THREADS.
    int threads = 0;

    /// Table-I geometry with the default grids.
    static SweepConfig defaults();
    /// Doppler is estimated over all sub-frames whenever the sampler moves targets.
    bool doppler() const { return sampler.max_speed > 0.0; }
    void validate() const;
};

struct MetricRow {
    std::string method;
    double snr_db = 0.0;
    int trials = 0;
    int failures = 0;
    double rmse_toa_normalized = 0.0;
    double mse_aoa = 0.0;  // deg^2
    double mse_aod = 0.0;  // deg^2
    std::optional<double> mae_speed;  // m/s
    double latency_s = 0.0;           // mean per estimate
};

/// Per-trial outcome, exposed for tests and acceptance checks.
struct TrialRecord {
    bool ok = false;
    std::string error;
    std::vector<PathError> errors;
    double latency_s = 0.0;
};

struct SweepResult {
    std::vector<MetricRow> rows;  // method-major, SNR-minor
    /// records[row][trial]
    std::vector<std::vector<TrialRecord>> records;
};

struct TrialSeeds {
    std::uint64_t scene = 0;
    std::uint64_t pilots = 0;
    std::uint64_t noise = 0;
};
/// Scene and pilots depend on the trial only; noise also on the SNR index.
TrialSeeds trial_seeds(std::uint64_t master, int trial, int snr_index);

/// Worker count after applying ISAC_SENSE_THREADS.
int worker_count(int requested);

SweepResult run_sweep(const SweepConfig& cfg);

/// Deterministic columns only.
std::string metrics_csv(const std::vector<MetricRow>& rows);
/// Wall-clock columns, kept apart so metrics.csv is reproducible.
std::string latency_csv(const std::vector<MetricRow>& rows);
/// Writes metrics.csv and latency.csv into cfg.output_dir.
void write_sweep(const SweepConfig& cfg, const SweepResult& result);

/// Runs one method on one received frame.
EstimateSet run_method(Method m, const CsiStack& csi, int num_paths, const SweepConfig& cfg);

struct DatasetConfig {
    int num_examples = 1000;
    SceneSampler sampler;
    double snr_min_db = -5.0;
    double snr_max_db = 40.0;
    std::uint64_t seed = 1;
    int num_subframes = 1;  // K_tilde
    std::string output_dir;
    OfdmConfig ofdm;
    ArrayConfig arr;
    void validate() const;
};

struct DatasetExample {
    int index = 0;
    double snr_db = 0.0;
    TrialSeeds seeds;
    Scene scene;
    CsiStack csi;
};

/// Re-synthesizes example `index` from the logged seeds.
DatasetExample make_example(const DatasetConfig& cfg, int index);

/// csi_NNNNNN.{bin,json}, labels.json and manifest.json under output_dir.
void dataset_export(const DatasetConfig& cfg);

std::string example_stem(int index);
std::string prediction_file(int index);

struct EvalResult {
    MetricRow row;
    std::vector<MatchResult> matches;
};

/// Scores est_NNNNNN.json files in `predictions_dir` against dataset labels.
EvalResult eval_cvnn(const std::string& dataset_dir, const std::string& predictions_dir);

}  // namespace isac::harness
