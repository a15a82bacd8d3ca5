// isac-sense: command-line front end for the bistatic sensing toolkit.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "isac/complexity.hpp"
#include "isac/crb.hpp"
#include "isac/io.hpp"

using namespace isac;

namespace {

io::Setup geometry_only(const std::string& config) {
    return config.empty() ? io::Setup{OfdmConfig{}, ArrayConfig::half_wavelength(8, 10, OfdmConfig{})}
                          : io::load_setup(config);
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        io::write_text(path, text);
    }
}

std::vector<double> snr_range(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) {
        throw ConfigError("SNR range needs lo <= hi and step > 0");
    }
    std::vector<double> out;
    for (int i = 0; lo + i * step <= hi + 1e-9; ++i) {
        out.push_back(lo + i * step);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bistatic ISAC sensing toolkit: simulation, parametric and grid estimators, "
                 "bounds and Monte-Carlo sweeps"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "synthesize received pilots and write the LS CSI");
    std::string sim_config;
    std::string sim_out;
    std::optional<double> sim_snr;
    sim->add_option("-c,--config", sim_config, "scene TOML")->required()->check(CLI::ExistingFile);
    sim->add_option("-o,--out", sim_out, "output stem (writes .bin, .json, .truth.json)")->required();
    sim->add_option("--snr", sim_snr, "override SNR in dB");

    // estimate
    auto* est = app.add_subcommand("estimate", "estimate paths from a CSI file");
    std::string est_csi;
    std::string est_config;
    std::string est_out;
    std::string est_method = "paraming";
    int est_paths = 1;
    est->add_option("--csi", est_csi, "CSI stem (reads STEM.bin and STEM.json)")->required();
    est->add_option("-c,--config", est_config, "geometry / grid TOML");
    est->add_option("-m,--paths", est_paths, "number of paths")->check(CLI::PositiveNumber);
    est->add_option("--method", est_method, "paraming, bartlett, dml or music");
    est->add_option("-o,--out", est_out, "EstimateSet JSON (stdout if omitted)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo SNR sweep");
    std::string sweep_config;
    std::string sweep_out;
    std::optional<int> sweep_trials;
    sweep->add_option("-c,--config", sweep_config, "sweep TOML")->required()->check(CLI::ExistingFile);
    sweep->add_option("-o,--out", sweep_out, "output directory (overrides config)");
    sweep->add_option("--trials", sweep_trials, "trials per SNR point (overrides config)");

    // crb
    auto* bound = app.add_subcommand("crb", "Cramer-Rao bounds for a fixed scene");
    std::string crb_config;
    std::string crb_out;
    double snr_lo = -20.0;
    double snr_hi = 30.0;
    double snr_step = 5.0;
    bound->add_option("-c,--config", crb_config, "scene TOML")->required()->check(CLI::ExistingFile);
    bound->add_option("--snr-min", snr_lo, "dB");
    bound->add_option("--snr-max", snr_hi, "dB");
    bound->add_option("--snr-step", snr_step, "dB");
    bound->add_option("-o,--out", crb_out, "CSV (stdout if omitted)");

    // flops
    auto* flops = app.add_subcommand("flops", "operation counts of the estimators");
    std::string flops_config;
    int flops_paths = 3;
    int ncord = 16;
    std::vector<long long> grid{128, 180, 180, 1};
    int window = 2;
    std::uint64_t epochs = 300;
    std::uint64_t dataset_size = 10000;
    flops->add_option("-c,--config", flops_config, "geometry TOML");
    flops->add_option("-m,--paths", flops_paths, "number of paths")->check(CLI::NonNegativeNumber);
    flops->add_option("--ncord", ncord, "CORDIC iterations");
    flops->add_option("--grid", grid, "MLE grid sizes G_tau G_theta G_phi G_alpha")->expected(4);
    flops->add_option("--window", window, "network window half-width W");
    flops->add_option("--epochs", epochs, "training epochs");
    flops->add_option("--dataset-size", dataset_size, "training examples");

    // dataset
    auto* ds = app.add_subcommand("dataset", "export a CSI training dataset");
    std::string ds_config;
    std::string ds_out;
    std::optional<int> ds_examples;
    ds->add_option("-c,--config", ds_config, "dataset TOML")->required()->check(CLI::ExistingFile);
    ds->add_option("-o,--out", ds_out, "output directory (overrides config)");
    ds->add_option("-n,--examples", ds_examples, "number of examples (overrides config)");

    // eval-cvnn
    auto* ev = app.add_subcommand("eval-cvnn", "score externally produced estimates");
    std::string ev_dataset;
    std::string ev_pred;
    std::string ev_out;
    ev->add_option("--dataset", ev_dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--predictions", ev_pred, "directory of est_NNNNNN.json files")
        ->required()
        ->check(CLI::ExistingDirectory);
    ev->add_option("-o,--out", ev_out, "metrics CSV (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            io::Setup s = io::load_setup(sim_config);
            if (s.scene.scatterers.empty()) {
                throw ConfigError("scene config has no [[scatterer]] entries");
            }
            const double snr = sim_snr.value_or(s.snr_db);
            const PilotBlock pilots = gen_pilots(s.pilot_seed, s.arr, s.ofdm);
            const RxBlock rx =
                simulate_rx(s.scene, pilots, snr, s.noise_seed, s.arr, s.ofdm, s.num_subframes);
            io::write_csi(sim_out, estimate_csi(rx, pilots, s.num_subframes > 1));
            io::Json truth = io::to_json(s.scene);
            truth["snr_db"] = std::isinf(snr) ? io::Json("inf") : io::Json(snr);
            truth["noise_variance"] = rx.noise_variance;
            io::write_json(sim_out + ".truth.json", truth);
        } else if (est->parsed()) {
            harness::SweepConfig cfg = harness::SweepConfig::defaults();
            if (!est_config.empty()) {
                const io::Setup s = io::load_setup(est_config);
                cfg.ofdm = s.ofdm;
                cfg.arr = s.arr;
                cfg.hankel = s.hankel;
                cfg.fine = GridSpec::fine_default(cfg.ofdm);
            }
            const CsiStack csi = io::read_csi(est_csi);
            if (csi.num_subframes() > 1) {
                cfg.sampler.max_speed = 1.0;  // estimate Doppler across the stored sub-frames
                cfg.ofdm.num_subframes = csi.num_subframes();
            }
            const EstimateSet e =
                harness::run_method(harness::parse_method(est_method), csi, est_paths, cfg);
            for (const std::string& w : e.warnings) {
                std::cerr << "warning: " << w << "\n";
            }
            emit(est_out, io::to_json(e).dump(2) + "\n");
        } else if (sweep->parsed()) {
            harness::SweepConfig cfg = io::parse_sweep(io::read_text(sweep_config));
            if (!sweep_out.empty()) {
                cfg.output_dir = sweep_out;
            }
            if (sweep_trials) {
                cfg.trials = *sweep_trials;
            }
            if (cfg.output_dir.empty()) {
                throw ConfigError("no output directory: set sweep.output or pass --out");
            }
            const harness::SweepResult res = harness::run_sweep(cfg);
            harness::write_sweep(cfg, res);
            std::cout << harness::metrics_csv(res.rows);
        } else if (bound->parsed()) {
            const io::Setup s = io::load_setup(crb_config);
            if (s.scene.scatterers.empty()) {
                throw ConfigError("scene config has no [[scatterer]] entries");
            }
            const PilotBlock pilots = gen_pilots(s.pilot_seed, s.arr, s.ofdm);
            emit(crb_out, crb::crb_csv(crb::crb_curve(s.scene, pilots,
                                                      snr_range(snr_lo, snr_hi, snr_step), s.arr,
                                                      s.ofdm)));
        } else if (flops->parsed()) {
            const io::Setup s = geometry_only(flops_config);
            const HankelParams hp = s.hankel.value_or(HankelParams::defaults(s.arr, s.ofdm));
            const auto pf = complexity::paraming_flops(hp, flops_paths, s.arr, s.ofdm, ncord);
            const complexity::GridSizes g{grid[0], grid[1], grid[2], grid[3]};
            const complexity::BigInt mle = complexity::mle_flops(g, flops_paths, s.arr, s.ofdm);
            const auto cv = complexity::cvnn_flops(complexity::CvnnArch::reference(window, s.arr),
                                                   epochs, dataset_size);
            io::Json j;
            j["paraming"] = {{"additions", pf.additions}, {"multiplications", pf.multiplications}};
            j["mle"] = {{"operations", mle.str()}, {"log10", complexity::log10(mle)}};
            j["mle_over_paraming_log10"] =
                complexity::log10(mle) - std::log10(static_cast<double>(pf.additions));
            j["cvnn"] = {{"window", window}, {"forward", cv.forward}, {"training", cv.training}};
            std::cout << j.dump(2) << "\n";
        } else if (ds->parsed()) {
            harness::DatasetConfig cfg = io::parse_dataset(io::read_text(ds_config));
            if (!ds_out.empty()) {
                cfg.output_dir = ds_out;
            }
            if (ds_examples) {
                cfg.num_examples = *ds_examples;
            }
            harness::dataset_export(cfg);
            std::cout << "wrote " << cfg.num_examples << " examples to " << cfg.output_dir << "\n";
        } else if (ev->parsed()) {
            const harness::EvalResult r = harness::eval_cvnn(ev_dataset, ev_pred);
            emit(ev_out, harness::metrics_csv({r.row}));
        }
    } catch (const Error& e) {
        std::cerr << "isac-sense: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "isac-sense: unexpected failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
