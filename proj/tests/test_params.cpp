#include <catch2/catch.hpp>

#include <cmath>

#include "mpqe/params.hpp"

using namespace mpqe;

namespace {
PhysicalParams params_with(double eta, double alpha0) {
    PhysicalParams p;
    p.eta_tilde = eta;
    p.optical_depth = alpha0;
    return p;
}
} // namespace

TEST_CASE("derive_coupling reproduces the calibrated convention") {
    // eta=0.26, alpha0=50, three passes: kappa = 2.08
    const Coupling c = derive_coupling(params_with(0.26, 50.0), 3);
    CHECK(c.kappa2 == Approx(13.0 / 3.0).epsilon(1e-12));
    CHECK(c.kappa() == Approx(2.0816659995).epsilon(1e-9));
    CHECK(c.mean_jx_in == Approx(1.0e12));
    CHECK(c.chi2 == Approx(c.kappa2 / 1.0e12).epsilon(1e-12));

    CHECK(derive_coupling(params_with(0.0, 50.0), 3).kappa() == 0.0);
    CHECK(derive_coupling(params_with(0.12, 100.0), 4).kappa2 == Approx(3.0).epsilon(1e-12));
}

TEST_CASE("single-pass-quarter convention kept as sensitivity flag") {
    const Coupling c =
        derive_coupling(params_with(0.26, 50.0), 3, CouplingConvention::single_pass_quarter);
    CHECK(c.kappa2 == Approx(13.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("coupling scaling properties") {
    // doubling eta doubles kappa^2 exactly
    for (double eta : {0.04, 0.13, 0.31}) {
        const double k1 = derive_coupling(params_with(eta, 73.0), 3).kappa2;
        const double k2 = derive_coupling(params_with(2.0 * eta, 73.0), 3).kappa2;
        CHECK(k2 == 2.0 * k1);
    }
    // kappa^2 * N fixed by eta * alpha0, independent of the pass count
    for (int n = 2; n <= 9; ++n) {
        const double prod = derive_coupling(params_with(0.21, 47.0), n).kappa2 * n;
        CHECK(prod == Approx(0.21 * 47.0).epsilon(1e-14));
    }
}

TEST_CASE("coupling rejects invalid parameters") {
    CHECK_THROWS_AS(derive_coupling(params_with(1.0, 50.0), 3), config_error);
    CHECK_THROWS_AS(derive_coupling(params_with(-0.1, 50.0), 3), config_error);
    CHECK_THROWS_AS(derive_coupling(params_with(0.2, 0.0), 3), config_error);
    CHECK_THROWS_AS(derive_coupling(params_with(0.2, 50.0), 1), config_error);
    PhysicalParams p = params_with(0.2, 50.0);
    p.beam_angle = 2.0;
    CHECK_THROWS_AS(derive_coupling(p, 3), config_error);
}

TEST_CASE("scattering loss") {
    PhysicalParams p = params_with(0.26, 50.0);
    p.n_atoms = 2.0e12;
    const double eps = scattering_loss(p, 3, 1.0e14);
    CHECK(eps == Approx(1.7333333333e-3).epsilon(1e-9));
    CHECK(eps < 2.0e-3);

    p.eta_tilde = 0.0;
    CHECK(scattering_loss(p, 3, 1.0e14) == 0.0);

    p = params_with(0.3, 50.0);
    p.n_atoms = 1.0e12;
    CHECK(scattering_loss(p, 3, 1.0e14) == Approx(1.0e-3).epsilon(1e-12));

    CHECK_THROWS_AS(scattering_loss(p, 3, 0.0), config_error);
}

TEST_CASE("total crossing loss") {
    CHECK(total_crossing_loss(0.0, 0.01) == Approx(0.02).epsilon(1e-14));
    CHECK(total_crossing_loss(0.0, 0.0) == 0.0);
    CHECK(total_crossing_loss(0.002, 0.029) == Approx(0.06).epsilon(1e-12));
    CHECK_THROWS_AS(total_crossing_loss(0.5, 0.3), config_error);
    CHECK_THROWS_AS(total_crossing_loss(-0.1, 0.0), config_error);

    // monotone nondecreasing in both arguments
    double prev = 0.0;
    for (double eps = 0.0; eps < 0.2; eps += 0.013) {
        const double z = total_crossing_loss(eps, 0.05);
        CHECK(z >= prev);
        prev = z;
    }
    prev = 0.0;
    for (double r0 = 0.0; r0 < 0.3; r0 += 0.017) {
        const double z = total_crossing_loss(0.01, r0);
        CHECK(z >= prev);
        prev = z;
    }
}

TEST_CASE("twisting magnetic field report") {
    // direct formula evaluation, B = sqrt(3) hbar kappa^2 / (4 g mu_B T)
    const FieldReport r = tat_magnetic_field(2.08 * 2.08, 5.0e-3, 0.5);
    CHECK(r.field_tesla == Approx(8.521104562638e-09).epsilon(1e-9));
    CHECK(r.larmor_rad_per_s == Approx(374.6772306933).epsilon(1e-9));
    CHECK(r.larmor_hz == Approx(59.6317333288).epsilon(1e-9));

    CHECK(tat_magnetic_field(0.0, 5.0e-3, 0.5).field_tesla == 0.0);

    const FieldReport r2 = tat_magnetic_field(2.0, 1.0e-3, 0.5);
    CHECK(r2.field_tesla == Approx(1.96956004129e-08).epsilon(1e-9));

    CHECK_THROWS_AS(tat_magnetic_field(1.0, 0.0, 0.5), config_error);
    CHECK_THROWS_AS(tat_magnetic_field(1.0, 1.0, 0.0), config_error);
}

TEST_CASE("derived crossing loss combines scattering and reflections") {
    PhysicalParams p = params_with(0.26, 50.0);
    p.n_atoms = 2.0e12;
    p.wall_reflectivity = 0.01;
    CHECK(derive_crossing_loss(p, 3) == Approx(0.02).epsilon(1e-12));
    p.n_photons = 1.0e14;
    CHECK(derive_crossing_loss(p, 3) == Approx(0.02 + 1.7333333333e-3).epsilon(1e-9));
}
