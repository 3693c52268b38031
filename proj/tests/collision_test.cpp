#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ksd/collision.hpp"
#include "ksd/suites.hpp"

using namespace ksd;

namespace {
const CrossSection hard_sphere(1.0, 1.0);
}

TEST_CASE("omega kinematics: swap, grazing, conservation") {
    const CollisionPair head = post_collision_omega({1, 0, 0}, {0, 0, 0}, 0.0, 0.3);
    CHECK((head.v_prime - Vec3{0, 0, 0}).norm() < 1e-14);
    CHECK((head.v_star_prime - Vec3{1, 0, 0}).norm() < 1e-14);

    const CollisionPair graze = post_collision_omega({1, 0, 0}, {0, 1, 0}, 0.5 * pi, 0.9);
    CHECK((graze.v_prime - Vec3{1, 0, 0}).norm() < 1e-14);
    CHECK((graze.v_star_prime - Vec3{0, 1, 0}).norm() < 1e-14);

    const CollisionPair e = post_collision_omega({1, 0, 0}, {0, 1, 0}, 0.4, 1.2);
    CHECK(e.v_prime.norm2() + e.v_star_prime.norm2() == Catch::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_AS(post_collision_omega({1, 0, 0}, {1, 0, 0}, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("sigma kinematics") {
    const Vec3 v{1, 0, 0}, vs{-1, 0, 0};
    const Vec3 u = (v - vs).normalized();
    const CollisionPair id = post_collision_sigma(v, vs, u);
    CHECK((id.v_prime - v).norm() < 1e-14);
    CHECK((id.v_star_prime - vs).norm() < 1e-14);
    const CollisionPair sw = post_collision_sigma(v, vs, -1.0 * u);
    CHECK((sw.v_prime - vs).norm() < 1e-14);
    const CollisionPair up = post_collision_sigma(v, vs, {0, 0, 1});
    CHECK((up.v_prime - Vec3{0, 0, 1}).norm() < 1e-14);
    CHECK((up.v_star_prime - Vec3{0, 0, -1}).norm() < 1e-14);
    CHECK_THROWS_AS(post_collision_sigma(v, vs, {0, 0, 0.5}), std::invalid_argument);
}

TEST_CASE("conservation on random collisions, both parameterizations") {
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        Rng rng = sample_rng(21, i);
        const Vec3 v = rng.uniform(0.0, 6.0) * rng.unit_vector();
        Vec3 vs = rng.uniform(0.0, 6.0) * rng.unit_vector();
        while ((v - vs).norm() < 1e-10) vs = rng.uniform(0.0, 6.0) * rng.unit_vector();
        const CollisionPair a =
            post_collision_omega(v, vs, rng.uniform(0.0, 0.5 * pi), rng.uniform(0.0, 2.0 * pi));
        const CollisionPair b = post_collision_sigma(v, vs, rng.unit_vector());
        worst = std::max({worst, a.momentum_defect(), a.energy_defect(), b.momentum_defect(),
                          b.energy_defect()});
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("sphere inverse speed integral") {
    CHECK(sphere_inverse_speed_integral({1, 0, 0}, {-1, 0, 0}) ==
          Catch::Approx(4.0 * pi).epsilon(1e-14));
    CHECK(sphere_inverse_speed_integral({1, 0, 0}, {0, 0, 0}) ==
          Catch::Approx(8.0 * pi).epsilon(1e-14));
    CHECK(sphere_inverse_speed_integral({2, 0, 0}, {0, 0, 0}) ==
          Catch::Approx(4.0 * pi).epsilon(1e-14));
    CHECK_THROWS_AS(sphere_inverse_speed_integral({0, 0, 0}, {0, 0, 0}), std::invalid_argument);

    // closed form vs quadrature, including the swapped pair with -sigma
    double worst_far = 0.0, worst_near = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Rng rng = sample_rng(23, i);
        const Vec3 v = rng.uniform(0.05, 4.0) * rng.unit_vector();
        const Vec3 vs = rng.uniform(0.05, 4.0) * rng.unit_vector();
        const Vec3 m = 0.5 * (v + vs);
        const double half = 0.5 * (v - vs).norm();
        const double closed = sphere_inverse_speed_integral(v, vs);
        const double hi = std::max(m.norm(), half), lo = std::min(m.norm(), half);
        if ((hi - lo) / hi < 0.1) {
            const double quad = sphere_inverse_speed_quadrature_polar(v, vs);
            worst_near = std::max(worst_near, std::abs(quad - closed) / closed);
        } else {
            const double quad = sphere_quadrature(
                [&](const Vec3& s) { return 1.0 / (m + half * s).norm(); }, 48);
            const double quad_star = sphere_quadrature(
                [&](const Vec3& s) { return 1.0 / (m - half * s).norm(); }, 48);
            worst_far = std::max(
                worst_far, std::max(std::abs(quad - closed), std::abs(quad_star - closed)) / closed);
        }
    }
    CHECK(worst_far <= 1e-4);
    CHECK(worst_near <= 1e-3);
}

TEST_CASE("loss term normalization") {
    PhasePoint one = [](const Vec3&, const Vec3&) { return 1.0; };
    const GammaQuadrature gq{8.0, 24, 16, 32, 24};
    const double loss = gamma_loss(one, one, {0, 0, 0}, {0, 0, 0}, hard_sphere, gq);
    // C pi int e^{-|w|^2/2}|w| dw = 8 pi^2
    CHECK(loss == Catch::Approx(8.0 * pi * pi).epsilon(1e-6));
}

TEST_CASE("gain equals loss on constants (sigma density)") {
    PhasePoint one = [](const Vec3&, const Vec3&) { return 1.0; };
    const GammaQuadrature gq{8.0, 24, 16, 32, 24};
    for (const Vec3& v : {Vec3{0, 0, 0}, Vec3{0.7, -0.3, 0.4}, Vec3{2.0, 0, 0}}) {
        const double gain = gamma_gain(one, one, {0, 0, 0}, v, hard_sphere, gq);
        const double loss = gamma_loss(one, one, {0, 0, 0}, v, hard_sphere, gq);
        CHECK(gain == Catch::Approx(loss).epsilon(1e-10));
        CHECK(std::abs(gamma_bilinear(one, one, {0, 0, 0}, v, hard_sphere, gq)) <=
              1e-10 * loss);
    }
}

TEST_CASE("sigma form gain matches the omega form") {
    PhasePoint h1 = [](const Vec3&, const Vec3& v) { return std::exp(-0.3 * v.norm2()); };
    PhasePoint h2 = [](const Vec3&, const Vec3& v) {
        return std::exp(-0.5 * v.norm2()) * (1.0 + 0.2 * v.x);
    };
    const GammaQuadrature gq{7.0, 16, 12, 24, 20};
    for (const Vec3& v : {Vec3{0.8, 0.1, -0.5}, Vec3{0, 0, 0}}) {
        const double s = gamma_gain(h1, h2, {0, 0, 0}, v, hard_sphere, gq);
        const double o = gamma_gain_omega(h1, h2, {0, 0, 0}, v, hard_sphere, gq, 24, 48);
        CHECK(s == Catch::Approx(o).epsilon(1e-4));
    }
}

TEST_CASE("bilinearity and zero arguments") {
    PhasePoint zero = [](const Vec3&, const Vec3&) { return 0.0; };
    PhasePoint h1 = [](const Vec3&, const Vec3& v) { return std::exp(-0.3 * v.norm2()); };
    PhasePoint h2 = [](const Vec3&, const Vec3& v) { return std::exp(-0.6 * v.norm2()) * v.y; };
    PhasePoint h3 = [](const Vec3&, const Vec3& v) { return std::exp(-0.4 * v.norm2()); };
    const GammaQuadrature gq{6.0, 10, 8, 12, 10};
    const Vec3 x0{0, 0, 0}, v0{0.5, -0.2, 0.1};
    CHECK(gamma_bilinear(zero, h2, x0, v0, hard_sphere, gq) == 0.0);
    CHECK(gamma_bilinear(h1, zero, x0, v0, hard_sphere, gq) == 0.0);
    const double a = 0.7, b = -1.3;
    PhasePoint hab = [&](const Vec3& x, const Vec3& v) { return a * h1(x, v) + b * h2(x, v); };
    const double lhs = gamma_bilinear(hab, h3, x0, v0, hard_sphere, gq);
    const double rhs = a * gamma_bilinear(h1, h3, x0, v0, hard_sphere, gq) +
                       b * gamma_bilinear(h2, h3, x0, v0, hard_sphere, gq);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-12 * (std::abs(lhs) + 1.0)));
}

TEST_CASE("nonlinear integral lemmas") {
    const Report rep = verify_nonlinear_integral_lemmas(hard_sphere, 31);
    for (const Check& c : rep.checks) {
        INFO(c.name << " ratio=" << c.ratio);
        if (c.hard) CHECK(c.pass);
        CHECK(std::isfinite(c.ratio));
    }
    // equality case of the speed cap: |v| = diam = 1, gamma = 1
    CHECK(std::pow(1.0 + 1.0, 1.0) * std::min(1.0, 1.0 / 1.0) == 2.0);
    // Gaussian moment spot value
    VelocityRule rule(Vec3{0, 0, 0}, 9.0, 32, 16, 32);
    CHECK(velocity_quadrature([](const Vec3& u) { return std::exp(-0.5 * u.norm2()); }, rule) ==
          Catch::Approx(std::pow(2.0 * pi, 1.5)).epsilon(1e-6));
}

TEST_CASE("collision suite") {
    const Report rep = collision_suite(hard_sphere, 20000, 3);
    for (const Check& c : rep.checks) {
        INFO(c.name << " lhs=" << c.lhs << " rhs=" << c.rhs << " ratio=" << c.ratio);
        if (c.hard) CHECK(c.pass);
    }
}
