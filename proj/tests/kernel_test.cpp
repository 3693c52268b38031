#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ksd/kernel.hpp"
#include "ksd/suites.hpp"

using namespace ksd;

namespace {
const KernelParams params(CrossSection(1.0, 1.0), 0.0, 0.25);
}

TEST_CASE("maxwellian values") {
    CHECK(maxwellian({0, 0, 0}) == Catch::Approx(std::pow(pi, -1.5)).epsilon(1e-15));
    CHECK(maxwellian({1, 0, 0}) ==
          Catch::Approx(std::pow(pi, -1.5) * std::exp(-1.0)).epsilon(1e-15));
    VelocityRule rule(Vec3{0, 0, 0}, 6.0, 24, 16, 32);
    CHECK(velocity_quadrature([](const Vec3& v) { return maxwellian(v); }, rule) ==
          Catch::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("collision frequency closed form") {
    CHECK(collision_frequency(params, {0, 0, 0}) ==
          Catch::Approx(2.0 * std::sqrt(pi)).epsilon(1e-12));
    // closed form against the defining-integral oracle
    for (int i = 0; i < 25; ++i) {
        Rng rng = sample_rng(3, i);
        const Vec3 v = rng.uniform(0.0, 8.0) * rng.unit_vector();
        const double closed = collision_frequency(params, v);
        const double quad = collision_frequency_quadrature(params.cross_section, v, 48, 48, 96);
        CHECK(closed == Catch::Approx(quad).epsilon(1e-8));
    }
    // small-speed expansion joins the closed form smoothly
    CHECK(collision_frequency_hard_sphere(1.0, 9e-6) ==
          Catch::Approx(collision_frequency_hard_sphere(1.0, 1.1e-5)).epsilon(1e-8));
    // equivalence with (1+|v|): ratio bounded above and below
    double lo = 1e300, hi = 0.0;
    for (double s : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        const double r = collision_frequency_hard_sphere(1.0, s) / (1.0 + s);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(lo > 0.0);
    CHECK(std::isfinite(hi));
}

TEST_CASE("bounds-only mode") {
    const KernelParams soft(CrossSection(1.0, 0.5), 0.0, 0.2);
    CHECK(collision_frequency(soft, {1, 0, 0}) > 0.0);
    CHECK_THROWS_AS(grad_kernel(soft, {1, 0, 0}, {0, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(grad_kernel_gradient(soft, {1, 0, 0}, {0, 1, 0}), std::invalid_argument);
}

TEST_CASE("calibrated kernel constants match the defining operator") {
    const GradConstants gc = grad_constants(1.0);
    CHECK(gc.fit_residual <= 1e-3);
    CHECK(gc.c1 == Catch::Approx(1.0 / std::sqrt(pi)).epsilon(2e-3));
    CHECK(gc.c2 == Catch::Approx(2.0 / std::sqrt(pi)).epsilon(2e-3));
    // linear scaling in C
    const GradConstants gc2 = grad_constants(2.5);
    CHECK(gc2.c1 == Catch::Approx(2.5 * gc.c1).epsilon(1e-14));
    CHECK(gc2.c2 == Catch::Approx(2.5 * gc.c2).epsilon(1e-14));
}

TEST_CASE("kernel symmetry, diagonal, gradient") {
    CHECK_THROWS_AS(grad_kernel(params, {1, 0, 0}, {1, 0, 0}), std::invalid_argument);
    for (int i = 0; i < 1000; ++i) {
        Rng rng = sample_rng(11, i);
        const Vec3 v = rng.uniform(0.1, 5.0) * rng.unit_vector();
        Vec3 vs = rng.uniform(0.1, 5.0) * rng.unit_vector();
        if ((v - vs).norm() < 1e-8) continue;
        CHECK(grad_kernel(params, v, vs) ==
              Catch::Approx(grad_kernel(params, vs, v)).epsilon(1e-12));
    }
    // analytic gradient vs central differences
    const Vec3 v{1, 0, 0}, vs{0, 1, 0};
    const Vec3 grad = grad_kernel_gradient(params, v, vs);
    for (int k = 0; k < 3; ++k) {
        Vec3 e{0, 0, 0};
        e[k] = 1e-5;
        const double fd =
            (grad_kernel(params, v + e, vs) - grad_kernel(params, v - e, vs)) / 2e-5;
        CHECK(grad[k] == Catch::Approx(fd).margin(1e-4 * std::max(1.0, std::abs(fd))));
    }
    // radial configuration: gradient parallel to v
    const Vec3 vr{0.7, 0.2, -0.4};
    const Vec3 g2 = grad_kernel_gradient(params, vr, 2.0 * vr);
    CHECK(g2.cross(vr).norm() <= 1e-12 * g2.norm() * vr.norm());
}

TEST_CASE("key estimate identity is exact") {
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        Rng rng = sample_rng(17, i);
        const Vec3 v = rng.uniform(0.0, 8.0) * rng.unit_vector();
        Vec3 vs = rng.uniform(0.0, 8.0) * rng.unit_vector();
        if ((v - vs).norm() < 1e-8) continue;
        worst = std::max(worst, key_estimate_identity_gap(v, vs, rng.uniform(-0.5, 0.7),
                                                          rng.uniform(0.0, 0.9)));
    }
    CHECK(worst <= 1e-12);
    // the spot case from the derivation
    CHECK(key_estimate_identity_gap({1, 0, 0}, {0, 1, 0}, 0.3, 0.1) <= 1e-14);
}

TEST_CASE("kernel moment integral") {
    const double at0 = kernel_moment_integral(params, {0, 0, 0});
    CHECK(at0 > 0.0);
    CHECK(std::isfinite(at0));
    // alpha = 0 variant is finite and larger
    KernelParams p0 = params;
    p0.alpha = 0.0;
    CHECK(kernel_moment_integral(p0, {1, 0, 0}) >= kernel_moment_integral(params, {1, 0, 0}));
    // uniform envelope over the speed range
    double sup = 0.0;
    std::vector<double> vals;
    for (double s : {0.0, 2.0, 4.0, 6.0, 8.0}) {
        const double w = std::exp(params.alpha * s * s) *
                         kernel_moment_integral(params, Vec3{s, 0, 0});
        vals.push_back(w);
        sup = std::max(sup, w);
    }
    for (double w : vals) CHECK(w <= 1.05 * sup);
    CHECK(std::isfinite(sup));
}

TEST_CASE("property A suite") {
    const Report rep = verify_property_a(params, 20000, 5);
    for (const Check& c : rep.checks) {
        INFO(c.name << " lhs=" << c.lhs << " ratio=" << c.ratio);
        if (c.hard) CHECK(c.pass);
        if (!c.hard) CHECK(std::isfinite(c.ratio));
    }
}

TEST_CASE("kernel suite") {
    const Report rep = kernel_suite(params, 5000, 7);
    for (const Check& c : rep.checks) {
        INFO(c.name << " lhs=" << c.lhs << " rhs=" << c.rhs << " ratio=" << c.ratio);
        if (c.hard) CHECK(c.pass);
    }
}
