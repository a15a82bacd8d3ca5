#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "isac/complexity.hpp"
#include "isac/crb.hpp"
#include "isac/io.hpp"

namespace py = pybind11;
using namespace isac;

namespace {

py::dict path_dict(const PathEstimate& p) {
    py::dict d;
    d["tau_ns"] = p.delay * 1e9;
    d["theta_deg"] = rad2deg(p.aoa);
    d["phi_deg"] = rad2deg(p.aod);
    d["fd_hz"] = p.doppler ? py::cast(*p.doppler) : py::none();
    d["magnitude"] = p.magnitude;
    return d;
}

py::list estimate_list(const EstimateSet& e) {
    py::list out;
    for (const auto& p : e.paths) out.append(path_dict(p));
    return out;
}

CsiStack stack_from(const MatrixXcd& m, int num_tx, int num_rx) {
    if (m.rows() != static_cast<Eigen::Index>(num_tx) * num_rx) {
        throw ConfigError("CSI matrix needs num_tx * num_rx rows");
    }
    CsiStack csi;
    csi.num_tx = num_tx;
    csi.num_rx = num_rx;
    csi.matrix = m;
    return csi;
}

}  // namespace

PYBIND11_MODULE(_isac_sense, m) {
    m.doc() = "Bistatic ISAC sensing toolkit";

    py::register_exception<Error>(m, "IsacError", PyExc_RuntimeError);

    py::class_<OfdmConfig>(m, "OfdmConfig")
        .def(py::init<>())
        .def_readwrite("carrier_hz", &OfdmConfig::carrier_hz)
        .def_readwrite("subcarrier_spacing_hz", &OfdmConfig::subcarrier_spacing_hz)
        .def_readwrite("num_subcarriers", &OfdmConfig::num_subcarriers)
        .def_readwrite("symbols_per_subframe", &OfdmConfig::symbols_per_subframe)
        .def_readwrite("num_subframes", &OfdmConfig::num_subframes)
        .def_property_readonly("delay_resolution", &OfdmConfig::delay_resolution)
        .def_property_readonly("wavelength", &OfdmConfig::wavelength);

    py::class_<ArrayConfig>(m, "ArrayConfig")
        .def(py::init([](int num_tx, int num_rx, const OfdmConfig& ofdm) {
                 return ArrayConfig::half_wavelength(num_tx, num_rx, ofdm);
             }),
             py::arg("num_tx") = 8, py::arg("num_rx") = 10, py::arg("ofdm") = OfdmConfig{})
        .def_readwrite("num_tx", &ArrayConfig::num_tx)
        .def_readwrite("num_rx", &ArrayConfig::num_rx)
        .def_readwrite("tx_spacing_m", &ArrayConfig::tx_spacing_m)
        .def_readwrite("rx_spacing_m", &ArrayConfig::rx_spacing_m);

    py::class_<Scatterer>(m, "Scatterer")
        .def(py::init([](double aoa_deg, double aod_deg, double delay_ns, cd gain, double doppler_hz) {
                 Scatterer s;
                 s.aoa = deg2rad(aoa_deg);
                 s.aod = deg2rad(aod_deg);
                 s.delay = delay_ns * 1e-9;
                 s.gain = gain;
                 s.doppler = doppler_hz;
                 return s;
             }),
             py::arg("aoa_deg"), py::arg("aod_deg"), py::arg("delay_ns"), py::arg("gain") = cd(1.0, 0.0),
             py::arg("doppler_hz") = 0.0)
        .def_property_readonly("aoa_deg", [](const Scatterer& s) { return rad2deg(s.aoa); })
        .def_property_readonly("aod_deg", [](const Scatterer& s) { return rad2deg(s.aod); })
        .def_property_readonly("delay_ns", [](const Scatterer& s) { return s.delay * 1e9; })
        .def_readwrite("gain", &Scatterer::gain)
        .def_readwrite("doppler_hz", &Scatterer::doppler);

    m.def(
        "simulate_csi",
        [](const std::vector<Scatterer>& paths, double snr_db, std::uint64_t pilot_seed,
           std::uint64_t noise_seed, const OfdmConfig& ofdm, const ArrayConfig& arr) {
            const PilotBlock p = gen_pilots(pilot_seed, arr, ofdm);
            return estimate_csi(simulate_rx(Scene{paths}, p, snr_db, noise_seed, arr, ofdm), p).matrix;
        },
        "LS channel estimate, (N_t N_r) x N_P, receive index fastest.", py::arg("paths"),
        py::arg("snr_db") = kNoiseless, py::arg("pilot_seed") = 1, py::arg("noise_seed") = 2,
        py::arg("ofdm") = OfdmConfig{}, py::arg("arr") = ArrayConfig::half_wavelength(8, 10, OfdmConfig{}));

    m.def(
        "estimate",
        [](const MatrixXcd& csi, int num_paths, const OfdmConfig& ofdm, const ArrayConfig& arr) {
            const CsiStack s = stack_from(csi, arr.num_tx, arr.num_rx);
            return estimate_list(paraming::estimate(s, HankelParams::defaults(arr, ofdm), num_paths, arr, ofdm));
        },
        "Parametric joint delay / angle estimation.", py::arg("csi"), py::arg("num_paths"),
        py::arg("ofdm") = OfdmConfig{}, py::arg("arr") = ArrayConfig::half_wavelength(8, 10, OfdmConfig{}));

    m.def(
        "crb_curve",
        [](const std::vector<Scatterer>& paths, const std::vector<double>& snr_db,
           std::uint64_t pilot_seed, const OfdmConfig& ofdm, const ArrayConfig& arr) {
            py::list out;
            for (const CrbPoint& p :
                 crb::crb_curve(Scene{paths}, gen_pilots(pilot_seed, arr, ofdm), snr_db, arr, ofdm)) {
                py::dict d;
                d["snr_db"] = p.snr_db;
                d["crb_theta"] = p.crb_theta;
                d["crb_phi"] = p.crb_phi;
                d["crb_tau_normalized"] = p.crb_tau_normalized;
                out.append(d);
            }
            return out;
        },
        py::arg("paths"), py::arg("snr_db"), py::arg("pilot_seed") = 1, py::arg("ofdm") = OfdmConfig{},
        py::arg("arr") = ArrayConfig::half_wavelength(8, 10, OfdmConfig{}));

    m.def(
        "paraming_flops",
        [](int num_paths, int cordic_iterations) {
            const OfdmConfig ofdm;
            const ArrayConfig arr = ArrayConfig::half_wavelength(8, 10, ofdm);
            const auto c = complexity::paraming_flops(HankelParams::defaults(arr, ofdm), num_paths, arr,
                                                      ofdm, cordic_iterations);
            return py::make_tuple(c.additions, c.multiplications);
        },
        "(additions, multiplications) at the reference setup.", py::arg("num_paths") = 3,
        py::arg("cordic_iterations") = 16);

    m.def(
        "read_csi",
        [](const std::string& stem) {
            const CsiStack c = io::read_csi(stem);
            return py::make_tuple(c.matrix, c.num_tx, c.num_rx);
        },
        "Returns (matrix, num_tx, num_rx).", py::arg("stem"));
    m.def(
        "write_csi",
        [](const std::string& stem, const MatrixXcd& csi, int num_tx, int num_rx) {
            io::write_csi(stem, stack_from(csi, num_tx, num_rx));
        },
        py::arg("stem"), py::arg("csi"), py::arg("num_tx"), py::arg("num_rx"));

    m.def(
        "export_dataset",
        [](const std::string& output_dir, int num_examples, int num_paths, std::uint64_t seed) {
            harness::DatasetConfig cfg;
            cfg.arr = ArrayConfig::half_wavelength(8, 10, cfg.ofdm);
            cfg.output_dir = output_dir;
            cfg.num_examples = num_examples;
            cfg.sampler.num_paths = num_paths;
            cfg.seed = seed;
            harness::dataset_export(cfg);
        },
        py::arg("output_dir"), py::arg("num_examples"), py::arg("num_paths") = 1, py::arg("seed") = 1);

    m.def(
        "eval_cvnn",
        [](const std::string& dataset_dir, const std::string& predictions_dir) {
            const auto r = harness::eval_cvnn(dataset_dir, predictions_dir);
            py::dict d;
            d["trials"] = r.row.trials;
            d["failures"] = r.row.failures;
            d["rmse_toa_normalized"] = r.row.rmse_toa_normalized;
            d["mse_aoa"] = r.row.mse_aoa;
            d["mse_aod"] = r.row.mse_aod;
            d["mae_speed"] = r.row.mae_speed ? py::cast(*r.row.mae_speed) : py::none();
            return d;
        },
        py::arg("dataset_dir"), py::arg("predictions_dir"));

    m.attr("NOISELESS") = kNoiseless;
}
