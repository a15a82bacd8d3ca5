// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "isac/complexity.hpp"
#include "isac/crb.hpp"
#include "isac/harness.hpp"

using namespace isac;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

harness::SweepConfig table1_sweep() {
    harness::SweepConfig cfg = harness::SweepConfig::defaults();
    cfg.trials = 300;
    cfg.seed = 2024;
    return cfg;
}

Scatterer make_path(double aoa_deg, double aod_deg, double delay, cd gain = {1.0, 0.0}) {
    Scatterer s;
    s.aoa = deg2rad(aoa_deg);
    s.aod = deg2rad(aod_deg);
    s.delay = delay;
    s.gain = gain;
    return s;
}

// 100 random noiseless scenes, M cycling through 1..3.
Outcome noiseless_exactness() {
    const auto cfg = table1_sweep();
    const HankelParams hp = HankelParams::defaults(cfg.arr, cfg.ofdm);
    double worst = 0.0;
    double slowest = 0.0;
    for (int t = 0; t < 100; ++t) {
        SceneSampler sampler;
        sampler.num_paths = 1 + t % 3;
        sampler.min_delay_separation = 2.0;
        const auto seeds = harness::trial_seeds(11, t, 0);
        std::mt19937_64 rng(seeds.scene);
        const Scene sc = sampler.sample(rng, cfg.ofdm);
        const PilotBlock p = gen_pilots(seeds.pilots, cfg.arr, cfg.ofdm);
        const CsiStack csi = estimate_csi(simulate_rx(sc, p, kNoiseless, 0, cfg.arr, cfg.ofdm), p);
        const auto t0 = std::chrono::steady_clock::now();
        const EstimateSet est = paraming::estimate(csi, hp, sc.size(), cfg.arr, cfg.ofdm);
        slowest = std::max(slowest, seconds_since(t0));
        for (const auto& e : harness::match_estimates(sc, est, cfg.ofdm).errors) {
            worst = std::max({worst, std::abs(e.tau_normalized), std::abs(deg2rad(e.theta_deg)),
                              std::abs(deg2rad(e.phi_deg))});
        }
    }
    return {worst < 1e-7 && slowest < 2.0,
            format("max matched error %.3e (< 1e-7), slowest scene %.3f s (< 2 s)", worst, slowest)};
}

// On-grid single path on a 9x9x9 grid: every estimator lands on the true cell.
Outcome mle_equivalence() {
    const auto cfg = table1_sweep();
    const double dt = cfg.ofdm.delay_resolution();
    const GridSpec g = GridSpec::from_degrees(-20.0, 20.0, 5.0, -20.0, 20.0, 5.0, 0.0, 8.0 * dt, dt);
    const HankelParams hp = HankelParams::defaults(cfg.arr, cfg.ofdm);
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> cell(0, 8);
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    int agree = 0;
    const int cases = 5;
    for (int c = 0; c < cases; ++c) {
        const int it = cell(rng), ip = cell(rng), iu = 1 + cell(rng) % 8;
        const Scene sc{{make_path(rad2deg(g.theta.at(it)), rad2deg(g.phi.at(ip)), g.tau.at(iu),
                                  std::polar(0.5 + 0.1 * c, phase(rng)))}};
        const PilotBlock p = gen_pilots(100 + c, cfg.arr, cfg.ofdm);
        const RxBlock rx = simulate_rx(sc, p, kNoiseless, 0, cfg.arr, cfg.ofdm);
        const CsiStack csi = estimate_csi(rx, p);
        const auto bart = baselines::bartlett_spectrum(csi, g, 1, cfg.arr, cfg.ofdm).peaks.at(0);
        const auto dml = baselines::dml_single(csi, g, cfg.arr, cfg.ofdm);
        const auto mle = baselines::mle_bruteforce(rx, p, g, cfg.arr, cfg.ofdm).cell;
        const auto par = paraming::estimate(csi, hp, 1, cfg.arr, cfg.ofdm).paths.at(0);
        const bool ok = bart.i_theta == it && bart.i_phi == ip && bart.i_tau == iu &&
                        dml.i_theta == it && dml.i_phi == ip && dml.i_tau == iu &&
                        mle.i_theta == it && mle.i_phi == ip && mle.i_tau == iu &&
                        g.theta.nearest(par.aoa) == it && g.phi.nearest(par.aod) == ip &&
                        g.tau.nearest(par.delay) == iu;
        agree += ok;
    }
    return {agree == cases, format("%d/%d on-grid scenes: all four estimators return the true cell",
                                   agree, cases)};
}

double angle_rmse(const harness::MetricRow& r) { return std::sqrt(0.5 * (r.mse_aoa + r.mse_aod)); }

const harness::MetricRow& row(const harness::SweepResult& res, const std::string& method, double snr) {
    for (const auto& r : res.rows) {
        if (r.method == method && r.snr_db == snr) return r;
    }
    throw std::runtime_error("missing row " + method);
}

// Grid estimators stall at the quantization floor while the parametric one keeps improving.
Outcome grid_floor() {
    auto cfg = table1_sweep();
    cfg.snr_db = {20.0, 30.0};
    cfg.methods = {harness::Method::Paraming, harness::Method::Bartlett, harness::Method::Dml};
    const auto res = harness::run_sweep(cfg);
    bool pass = true;
    std::string detail;
    for (const char* m : {"bartlett", "dml"}) {
        const double a = angle_rmse(row(res, m, 20.0));
        const double b = angle_rmse(row(res, m, 30.0));
        const double reduction = (a - b) / a;
        pass = pass && reduction < 0.10 && b >= 0.2 * 0.05;
        detail += format("%s angle RMSE %.4f -> %.4f deg (reduction %.1f%% < 10%%); ", m, a, b,
                         100.0 * reduction);
    }
    const double pa = angle_rmse(row(res, "paraming", 20.0));
    const double pb = angle_rmse(row(res, "paraming", 30.0));
    const double ta = row(res, "paraming", 20.0).rmse_toa_normalized;
    const double tb = row(res, "paraming", 30.0).rmse_toa_normalized;
    pass = pass && pb < 0.9 * pa && tb < 0.9 * ta;
    int failures = 0;
    for (const auto& r : res.rows) failures += r.failures;
    pass = pass && failures == 0;
    detail += format("paraming angle RMSE %.4f -> %.4f deg, ToA %.2e -> %.2e; bartlett ToA %.4f -> %.4f; "
                     "%d failed trials",
                     pa, pb, ta, tb, row(res, "bartlett", 20.0).rmse_toa_normalized,
                     row(res, "bartlett", 30.0).rmse_toa_normalized, failures);
    return {pass, detail};
}

// SNR (dB) at which a log-RMSE curve crosses `level`, by linear interpolation.
double crossing(const std::vector<double>& snr, const std::vector<double>& rmse, double level) {
    for (std::size_t i = 1; i < snr.size(); ++i) {
        const double a = std::log10(rmse[i - 1]) - std::log10(level);
        const double b = std::log10(rmse[i]) - std::log10(level);
        if (a >= 0.0 && b <= 0.0) {
            return snr[i - 1] + (snr[i] - snr[i - 1]) * a / (a - b);
        }
    }
    // Extrapolate from the last two points when the curve never reaches the level.
    const std::size_t n = snr.size();
    const std::size_t i = rmse.back() > level ? n - 1 : 1;
    const double slope = (std::log10(rmse[i]) - std::log10(rmse[i - 1])) / (snr[i] - snr[i - 1]);
    return snr[i] + (std::log10(level) - std::log10(rmse[i])) / slope;
}

Outcome crb_behaviour() {
    auto cfg = table1_sweep();
    cfg.snr_db = {-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
    cfg.methods = {harness::Method::Paraming, harness::Method::Crb};
    const auto res = harness::run_sweep(cfg);
    std::vector<double> par, bound;
    for (double s : cfg.snr_db) {
        par.push_back(row(res, "paraming", s).rmse_toa_normalized);
        bound.push_back(row(res, "crb", s).rmse_toa_normalized);
    }
    // Slope of the variance bound against linear SNR.
    const double slope = 2.0 * (std::log10(bound.back()) - std::log10(bound.front())) /
                         ((cfg.snr_db.back() - cfg.snr_db.front()) / 10.0);
    bool above = true;
    for (std::size_t i = 0; i < par.size(); ++i) {
        if (cfg.snr_db[i] >= 10.0) above = above && par[i] > bound[i];
    }
    const double gap = crossing(cfg.snr_db, par, 1e-2) - crossing(cfg.snr_db, bound, 1e-2);
    const bool pass = std::abs(slope + 1.0) < 0.02 && above && gap >= 5.0 && gap <= 15.0;
    return {pass, format("CRB slope %.4f per decade (-1 +- 2%%); paraming above bound for SNR >= 10 dB: "
                         "%s; gap at RMSE 1e-2: %.2f dB (5..15 dB); paraming RMSE %.2e @ 0 dB, "
                         "%.2e @ 30 dB",
                         slope, above ? "yes" : "no", gap, par[3], par.back())};
}

Outcome fim_validity() {
    const auto cfg = table1_sweep();
    const Scene sc{{make_path(17.0, -24.0, 70e-9, {0.6, -0.3}), make_path(-38.0, 41.0, 160e-9)}};
    const PilotBlock p = gen_pilots(4, cfg.arr, cfg.ofdm);
    const double sigma2 = 0.02;
    const FimMatrix f = crb::fim_assemble(sc, p, sigma2, cfg.arr, cfg.ofdm);
    const double asym = (f.gamma - f.gamma.transpose()).cwiseAbs().maxCoeff();
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(f.gamma).eigenvalues();
    const double g00 = static_cast<double>(cfg.arr.num_rx) * cfg.ofdm.num_subcarriers *
                       cfg.ofdm.symbols_per_subframe / (sigma2 * sigma2);
    // Derivative factors against central differences of the synthesized channel.
    double worst = 0.0;
    const int m = sc.size();
    for (int n : {1, 32, 64}) {
        const auto d = crb::model_derivatives(sc, cfg.arr, cfg.ofdm, n);
        for (int k = 0; k < 5 * m; ++k) {
            const int i = k % m;
            const int kind = k / m;
            const double h = kind == 2 ? 1e-14 : 1e-6;
            auto shifted = [&](double sign) {
                Scene s = sc;
                Scatterer& x = s.scatterers[i];
                switch (kind) {
                case 0: x.aoa += sign * h; break;
                case 1: x.aod += sign * h; break;
                case 2: x.delay += sign * h; break;
                case 3: x.gain += sign * h; break;
                default: x.gain += sign * h * kJ; break;
                }
                return synth_channel(s, cfg.arr, cfg.ofdm, 1, n);
            };
            const MatrixXcd fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
            worst = std::max(worst, (d[k] - fd).norm() / fd.norm());
        }
    }
    const bool pass = asym == 0.0 && ev.minCoeff() >= -1e-9 * ev.maxCoeff() && f.gamma(0, 0) == g00 &&
                      worst < 1e-5;
    return {pass, format("max asymmetry %.1e, min/max eigenvalue %.2e, Gamma00 exact: %s, "
                         "derivative FD error %.2e (< 1e-5)",
                         asym, ev.minCoeff() / ev.maxCoeff(), f.gamma(0, 0) == g00 ? "yes" : "no",
                         worst)};
}

Outcome doppler() {
    const auto cfg = table1_sweep();
    const HankelParams hp = HankelParams::defaults(cfg.arr, cfg.ofdm);
    const PilotBlock p = gen_pilots(21, cfg.arr, cfg.ofdm);
    double worst = 0.0;
    for (double fd : {-2800.0, 0.0, 2800.0}) {
        Scatterer s = make_path(-25.0, 14.0, 90e-9, {0.6, 0.8});
        s.doppler = fd;
        const CsiStack csi =
            estimate_csi(simulate_rx(Scene{{s}}, p, kNoiseless, 0, cfg.arr, cfg.ofdm, 4), p, true);
        std::vector<CsiStack> frames;
        for (int q = 0; q < 4; ++q) frames.push_back(csi.subframe(q));
        const double est = *paraming::estimate_doppler(frames, hp, 1, cfg.arr, cfg.ofdm).paths.at(0).doppler;
        worst = std::max(worst, fd == 0.0 ? std::abs(est) / 2800.0 : std::abs(est - fd) / std::abs(fd));
    }
    auto sweep = cfg;
    sweep.snr_db = {20.0};
    sweep.sampler.max_speed = 30.0;
    const auto res = harness::run_sweep(sweep);
    const auto& r = res.rows.at(0);
    const double mae = r.mae_speed.value_or(std::numeric_limits<double>::infinity());
    return {worst < 1e-6 && mae < 1.0 && r.failures == 0,
            format("noiseless relative error %.2e (< 1e-6); speed MAE @ 20 dB %.4f m/s (< 1) over %d "
                   "trials, %d failed",
                   worst, mae, r.trials, r.failures)};
}

Outcome complexity_accounting() {
    const auto cfg = table1_sweep();
    const HankelParams hp = HankelParams::defaults(cfg.arr, cfg.ofdm);
    const auto pf = complexity::paraming_flops(hp, 3, cfg.arr, cfg.ofdm, 16);
    const auto mle = complexity::mle_flops({128, 180, 180, 1}, 3, cfg.arr, cfg.ofdm);
    const double ratio = complexity::log10(mle) - std::log10(static_cast<double>(pf.additions));
    const bool pinned = pf.additions == 14255944323LL && pf.multiplications == 14255946273LL &&
                        mle.str() == "863492938033711451996160000000";
    return {pinned && std::abs(ratio - 19.0) <= 2.0,
            format("T_add %lld, T_mul %lld (pinned: %s); log10(MLE / PARAMING) = %.2f (19 +- 2)",
                   static_cast<long long>(pf.additions), static_cast<long long>(pf.multiplications),
                   pinned ? "yes" : "no", ratio)};
}

// Compares one parametric estimate against a full pass over the fine Bartlett grid.
Outcome latency() {
    const auto cfg = table1_sweep();
    const HankelParams hp = HankelParams::defaults(cfg.arr, cfg.ofdm);
    const Scene sc{{make_path(12.3, -31.7, 101e-9)}};
    const PilotBlock p = gen_pilots(5, cfg.arr, cfg.ofdm);
    const CsiStack csi = estimate_csi(simulate_rx(sc, p, 20.0, 6, cfg.arr, cfg.ofdm), p);
    double par = std::numeric_limits<double>::infinity();
    for (int r = 0; r < 5; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        paraming::estimate(csi, hp, 1, cfg.arr, cfg.ofdm);
        par = std::min(par, seconds_since(t0));
    }
    const GridSpec fine = GridSpec::fine_default(cfg.ofdm);
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = baselines::bartlett_model(csi, cfg.arr, cfg.ofdm);
    const auto peaks = baselines::find_peaks(*model, fine, 1);
    const double grid = seconds_since(t0);
    return {par < 1.0 && grid >= 50.0 * par,
            format("paraming %.4f s (< 1 s), full %lld-cell Bartlett %.2f s, speed-up %.0fx (>= 50x); "
                   "peak at %.2f deg",
                   par, static_cast<long long>(fine.cells()), grid, grid / par,
                   rad2deg(peaks.at(0).theta))};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
        {"noiseless exactness", noiseless_exactness},
        {"small-instance MLE equivalence", mle_equivalence},
        {"grid floor", grid_floor},
        {"CRB behaviour", crb_behaviour},
        {"FIM validity", fim_validity},
        {"Doppler", doppler},
        {"complexity accounting", complexity_accounting},
        {"latency ordering", latency},
    };
    int failed = 0;
    for (const auto& [name, run] : checks) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
    return failed == 0 ? 0 : 1;
}
