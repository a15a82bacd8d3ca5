#include <doctest.h>

#include "helpers.hpp"
#include "isac/baselines.hpp"

using namespace isac;
using testing::path;

namespace {

// theta, phi in [-20, 20] deg by 5 deg; tau in [0, 8] delta_t.
GridSpec grid9(const OfdmConfig& ofdm) {
    const double dt = ofdm.delay_resolution();
    return GridSpec::from_degrees(-20.0, 20.0, 5.0, -20.0, 20.0, 5.0, 0.0, 8.0 * dt, dt);
}

class ConstantModel : public baselines::SpectrumModel {
    class Eval : public baselines::SlabEvaluator {
    public:
        explicit Eval(GridSpec g) : g_(g) {}
        MatrixXd slab(int) const override { return MatrixXd::Constant(g_.theta.count, g_.phi.count, 1.0); }
        const GridSpec& grid() const override { return g_; }

    private:
        GridSpec g_;
    };

public:
    std::unique_ptr<baselines::SlabEvaluator> on(const GridSpec& g) const override {
        return std::make_unique<Eval>(g);
    }
};

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("grid axes") {
    const GridAxis a = GridAxis::span(-1.0, 1.0, 0.5);
    CHECK(a.count == 5);
    CHECK(a.at(4) == doctest::Approx(1.0));
    CHECK(a.nearest(0.26) == 3);
    CHECK(a.nearest(-7.0) == 0);
    CHECK(a.nearest(7.0) == 4);
    CHECK_THROWS_AS(GridAxis::span(0.0, 1.0, 0.0), ConfigError);
    const auto s = testing::table1();
    const GridSpec f = GridSpec::fine_default(s.ofdm);
    CHECK(f.theta.count == 2401);
    CHECK(f.tau.count == 81);  // T_CP = 16 delta_t, step delta_t / 5
    CHECK_THROWS_AS(GridSpec::from_degrees(-95, 0, 1, 0, 1, 1, 0, 1e-9, 1e-9).validate(), ConfigError);
}

TEST_CASE("joint steering vector") {
    const auto s = testing::table1();
    const VectorXcd d0 = baselines::joint_steering(0.0, 0.0, 0.0, s.arr, s.ofdm);
    CHECK(d0.size() == 64 * 80);
    CHECK((d0 - VectorXcd::Ones(d0.size())).norm() == 0.0);
    const double th = deg2rad(17.0), ph = deg2rad(-33.0), tau = 85e-9;
    const VectorXcd d = baselines::joint_steering(th, ph, tau, s.arr, s.ofdm);
    CHECK(d.squaredNorm() == doctest::Approx(64.0 * 80.0));
    const cd alpha(0.4, -0.9);
    const CsiStack csi = testing::noiseless_csi(Scene{{path(17.0, -33.0, tau, alpha)}}, s);
    const VectorXcd h = csi.matrix.reshaped();
    CHECK(std::abs(d.dot(h) - alpha * 64.0 * 80.0) < 1e-9 * 64 * 80);
}

TEST_CASE("on-grid single path: all grid estimators agree") {
    const auto s = testing::table1();
    const double dt = s.ofdm.delay_resolution();
    const GridSpec g = grid9(s.ofdm);
    REQUIRE(g.cells() == 729);
    const cd alpha = std::polar(0.8, 0.7);
    const Scene sc{{path(5.0, -10.0, 3.0 * dt, alpha)}};
    const PilotBlock pilots = gen_pilots(3, s.arr, s.ofdm);
    const RxBlock rx = simulate_rx(sc, pilots, kNoiseless, 0, s.arr, s.ofdm);
    const CsiStack csi = estimate_csi(rx, pilots);

    const auto bart = baselines::bartlett_spectrum(csi, g, 1, s.arr, s.ofdm);
    const auto dml = baselines::dml_single(csi, g, s.arr, s.ofdm);
    const auto mle = baselines::mle_bruteforce(rx, pilots, g, s.arr, s.ofdm);
    const EstimateSet par = paraming::estimate(csi, HankelParams::defaults(s.arr, s.ofdm), 1, s.arr, s.ofdm);

    const int it = 5, ip = 2, iu = 3;
    CHECK(bart.peaks[0].i_theta == it);
    CHECK(bart.peaks[0].i_phi == ip);
    CHECK(bart.peaks[0].i_tau == iu);
    CHECK(dml.i_theta == it);
    CHECK(dml.i_phi == ip);
    CHECK(dml.i_tau == iu);
    CHECK(mle.cell.i_theta == it);
    CHECK(mle.cell.i_phi == ip);
    CHECK(mle.cell.i_tau == iu);
    CHECK(std::abs(mle.gain - alpha) < 1e-12);
    CHECK(mle.residual < 1e-20);
    CHECK(std::abs(par.paths[0].aoa - g.theta.at(it)) < 1e-8);
    CHECK(std::abs(par.paths[0].aod - g.phi.at(ip)) < 1e-8);
    CHECK(std::abs(par.paths[0].delay - g.tau.at(iu)) < 1e-8 * dt);
    // Peak value equals |alpha|^2 N_P N_t N_r.
    CHECK(bart.peaks[0].value == doctest::Approx(std::norm(alpha) * 64 * 80).epsilon(1e-10));
}

TEST_CASE("off-grid single path lands on the nearest cell") {
    const auto s = testing::table1();
    const double dt = s.ofdm.delay_resolution();
    const GridSpec g = grid9(s.ofdm);
    const Scene sc{{path(5.0 + 1.4, -10.0 - 1.2, (3.0 + 0.3) * dt)}};
    const auto e = baselines::dml_single(testing::noiseless_csi(sc, s), g, s.arr, s.ofdm);
    CHECK(std::abs(e.theta - sc.scatterers[0].aoa) <= g.theta.step / 2);
    CHECK(std::abs(e.phi - sc.scatterers[0].aod) <= g.phi.step / 2);
    CHECK(std::abs(e.tau - sc.scatterers[0].delay) <= g.tau.step / 2);
}

TEST_CASE("Bartlett spectrum ignores a global phase") {
    const auto s = testing::small(4, 4, 16, 4);
    const double dt = s.ofdm.delay_resolution();
    const GridSpec g = GridSpec::from_degrees(-30, 30, 6, -30, 30, 6, 0.0, 4.0 * dt, dt / 2);
    CsiStack csi = testing::noiseless_csi(Scene{{path(3.0, 8.0, 1.3 * dt), path(-20.0, 14.0, 3.1 * dt)}}, s);
    const auto a = baselines::bartlett_spectrum(csi, g, 2, s.arr, s.ofdm);
    csi.matrix *= std::polar(1.0, 2.1);
    const auto b = baselines::bartlett_spectrum(csi, g, 2, s.arr, s.ofdm);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    CHECK(worst < 1e-12 * a.peaks[0].value);
}

TEST_CASE("MUSIC subspace on a noiseless single path") {
    const auto s = testing::table1();
    const double dt = s.ofdm.delay_resolution();
    const HankelParams hp = HankelParams::defaults(s.arr, s.ofdm);
    const Scene sc{{path(5.0, -10.0, 3.0 * dt)}};
    const auto sub = baselines::music_subspace(testing::noiseless_csi(sc, s), hp, 1, s.arr, s.ofdm);
    const auto& ev = sub.eigenvalues;
    CHECK(ev(ev.size() - 2) / ev(ev.size() - 1) < 1e-10);
    const double proj =
        baselines::music_noise_projection(sub, deg2rad(5.0), deg2rad(-10.0), 3.0 * dt, s.arr, s.ofdm);
    CHECK(proj < 1e-8 * hp.rows());
    CHECK(baselines::music_noise_projection(sub, deg2rad(25.0), deg2rad(-10.0), 3.0 * dt, s.arr, s.ofdm) >
          0.5 * hp.rows());
    const auto spec = baselines::music_spectrum(testing::noiseless_csi(sc, s), hp, 1, grid9(s.ofdm), s.arr, s.ofdm);
    CHECK(spec.peaks[0].i_theta == 5);
    CHECK(spec.peaks[0].i_phi == 2);
    CHECK(spec.peaks[0].i_tau == 3);
    CHECK(spec.peaks[0].value <= baselines::kMusicCap);
    CHECK(spec.peaks[0].value > 1e6);
    CHECK_THROWS_AS(baselines::music_subspace(testing::noiseless_csi(sc, s), hp, 640, s.arr, s.ofdm), ConfigError);
}

TEST_CASE("brute-force MLE refuses large grids") {
    const auto s = testing::table1();
    const double dt = s.ofdm.delay_resolution();
    const GridSpec g = GridSpec::from_degrees(-89.5, 89.5, 1.0, -89.5, 89.5, 1.0, 0.0, 127.0 * dt / 8, dt / 8);
    REQUIRE(g.theta.count == 180);
    REQUIRE(g.tau.count == 128);
    const PilotBlock pilots = gen_pilots(1, s.arr, s.ofdm);
    const RxBlock rx = simulate_rx(Scene{{path(0, 0, 1e-8)}}, pilots, kNoiseless, 0, s.arr, s.ofdm);
    // 180*180*128 cells times (N_r N_t N_P^4 + N_r N_P^3 K_P) per cell.
    const double expected = std::log10(180.0 * 180.0 * 128.0 * (80.0 * std::pow(64.0, 4) + 10.0 * std::pow(64.0, 3) * 10.0));
    try {
        baselines::mle_bruteforce(rx, pilots, g, s.arr, s.ofdm);
        FAIL("expected GridTooLargeError");
    } catch (const GridTooLargeError& e) {
        CHECK(e.log10_operations() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(e.log10_operations() == doctest::Approx(15.754).epsilon(1e-4));
    }
}

TEST_CASE("streaming peaks match the dense spectrum") {
    const auto s = testing::small(4, 5, 16, 4);
    const double dt = s.ofdm.delay_resolution();
    const GridSpec g = GridSpec::from_degrees(-40, 40, 4, -40, 40, 4, 0.0, 4.0 * dt, dt / 4);
    const Scene sc{{path(12.0, -7.0, 1.1 * dt), path(-25.0, 20.0, 2.9 * dt, {0.6, 0.0})}};
    const PilotBlock pilots = gen_pilots(4, s.arr, s.ofdm);
    const CsiStack csi = estimate_csi(simulate_rx(sc, pilots, 5.0, 8, s.arr, s.ofdm), pilots);
    const auto model = baselines::bartlett_model(csi, s.arr, s.ofdm);
    const auto dense = baselines::dense_spectrum(*model, g, 4);
    const auto stream = baselines::find_peaks(*model, g, 4);
    REQUIRE(dense.peaks.size() == stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        CHECK(dense.peaks[i].i_theta == stream[i].i_theta);
        CHECK(dense.peaks[i].i_phi == stream[i].i_phi);
        CHECK(dense.peaks[i].i_tau == stream[i].i_tau);
        CHECK(dense.peaks[i].value == stream[i].value);
        CHECK(dense.at(stream[i].i_theta, stream[i].i_phi, stream[i].i_tau) == stream[i].value);
    }
    for (std::size_t i = 1; i < stream.size(); ++i) {
        CHECK(stream[i].value <= stream[i - 1].value);
    }
    const auto best = baselines::argmax(*model, g);
    double top = 0.0;
    for (double v : dense.values) top = std::max(top, v);
    CHECK(best.value == top);
    CHECK(stream[0].value == top);
}

TEST_CASE("plateau still yields the first cell") {
    const GridSpec g = GridSpec::from_degrees(-10, 10, 5, -10, 10, 5, 0.0, 3e-9, 1e-9);
    ConstantModel flat;
    const auto p = baselines::find_peaks(flat, g, 2);
    REQUIRE(!p.empty());
    CHECK(p[0].i_theta == 0);
    CHECK(p[0].i_phi == 0);
    CHECK(p[0].i_tau == 0);
    const auto a = baselines::argmax(flat, g);
    CHECK(a.i_theta == 0);
    CHECK(a.i_tau == 0);
}

TEST_CASE("coarse-to-fine refinement") {
    const auto s = testing::table1();
    const double dt = s.ofdm.delay_resolution();
    const GridSpec coarse = GridSpec::from_degrees(-40, 40, 2, -40, 40, 2, 0.0, 10.0 * dt, dt);
    const GridSpec fine = GridSpec::from_degrees(-40, 40, 0.25, -40, 40, 0.25, 0.0, 10.0 * dt, dt / 8);
    const Scene sc{{path(10.75, -21.25, 4.375 * dt), path(-30.5, 6.0, 7.125 * dt, {0.0, 0.8})}};
    const auto model = baselines::bartlett_model(testing::noiseless_csi(sc, s), s.arr, s.ofdm);
    const auto peaks = baselines::refined_peaks(*model, coarse, fine, 2);
    REQUIRE(peaks.size() == 2);
    const EstimateSet est = baselines::to_estimate_set(peaks);
    for (int m = 0; m < 2; ++m) {
        CHECK(std::abs(est.paths[m].aoa - sc.scatterers[m].aoa) < 1e-9);
        CHECK(std::abs(est.paths[m].aod - sc.scatterers[m].aod) < 1e-9);
        CHECK(std::abs(est.paths[m].delay - sc.scatterers[m].delay) < 1e-6 * dt);
    }
}

}
