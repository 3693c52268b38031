#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ksd/quadrature.hpp"

using namespace ksd;

TEST_CASE("line quadrature basics") {
    CHECK(line_quadrature([](double) { return 1.0; }, 2.0, 4) == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(line_quadrature([](double) { return 1.0; }, 0.0, 4) == 0.0);
    CHECK(line_quadrature([](double s) { return std::exp(-s); }, 1.0, 4) ==
          Catch::Approx(1.0 - std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("endpoint substitution handles inverse square root") {
    // antiderivative 2 sqrt(s) on (0, 1]
    const double val = line_quadrature_endpoint_sqrt(
        [](double s) { return 1.0 / std::sqrt(s); }, 1.0, 8, true, false);
    CHECK(val == Catch::Approx(2.0).epsilon(1e-6));
    // both endpoints singular: 1/sqrt(s) + 1/sqrt(L-s)
    const double both = line_quadrature_endpoint_sqrt(
        [](double s) { return 1.0 / std::sqrt(s) + 1.0 / std::sqrt(1.0 - s); }, 1.0, 8);
    CHECK(both == Catch::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("polynomial exactness of the rules") {
    // line: degree-5 polynomial integrated exactly
    const double poly = line_quadrature(
        [](double s) { return 1.0 + s - 2.0 * s * s + 0.5 * s * s * s * s * s; }, 1.5, 2);
    const double L = 1.5;
    const double exact = L + L * L / 2.0 - 2.0 * L * L * L / 3.0 + 0.5 * std::pow(L, 6) / 6.0;
    CHECK(poly == Catch::Approx(exact).epsilon(1e-10));

    VelocityRule rule(Vec3{0, 0, 0}, 2.0, 8, 6, 10);
    // constant -> volume of the ball
    const double vol = velocity_quadrature([](const Vec3&) { return 1.0; }, rule);
    CHECK(vol == Catch::Approx(4.0 / 3.0 * pi * 8.0).epsilon(1e-10));
    // odd monomial vanishes, |v|^2 has a closed form
    CHECK(std::abs(velocity_quadrature([](const Vec3& v) { return v.x; }, rule)) < 1e-12);
    CHECK(velocity_quadrature([](const Vec3& v) { return v.norm2(); }, rule) ==
          Catch::Approx(4.0 * pi * std::pow(2.0, 5) / 5.0).epsilon(1e-10));

    CHECK(sphere_quadrature([](const Vec3&) { return 1.0; }, 16) ==
          Catch::Approx(4.0 * pi).epsilon(1e-12));
    CHECK(sphere_quadrature([](const Vec3& s) { return s.z * s.z; }, 16) ==
          Catch::Approx(4.0 * pi / 3.0).epsilon(1e-12));
    CHECK(sphere_quadrature([](const Vec3& s) { return 1.0 / s.norm(); }, 16) ==
          Catch::Approx(4.0 * pi).epsilon(1e-12));
}

TEST_CASE("velocity rule integrates the Maxwellian to unit mass") {
    VelocityRule rule(Vec3{0, 0, 0}, 6.0, 24, 16, 32);
    const double mass = velocity_quadrature(
        [](const Vec3& v) { return std::pow(pi, -1.5) * std::exp(-v.norm2()); }, rule);
    CHECK(mass == Catch::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("polar centering integrates 1/|u - center|") {
    const Vec3 c{0, 0, 0};
    VelocityRule rule(c, 3.0, 32, 16, 32);
    const double val =
        velocity_quadrature([&](const Vec3& u) { return 1.0 / (u - c).norm(); }, rule);
    CHECK(val == Catch::Approx(2.0 * pi * 9.0).epsilon(1e-3));
}

TEST_CASE("resolution doubling is stable for smooth integrands") {
    auto f = [](const Vec3& v) { return std::exp(-0.5 * v.norm2()) * (1.0 + v.x * v.z); };
    VelocityRule coarse(Vec3{0.5, 0, 0}, 6.0, 24, 16, 32);
    VelocityRule fine(Vec3{0.5, 0, 0}, 6.0, 48, 32, 64);
    const double a = velocity_quadrature(f, coarse);
    const double b = velocity_quadrature(f, fine);
    CHECK(std::abs(a - b) <= 1e-8 * std::abs(b));

    const double l1 = line_quadrature([](double s) { return std::cos(s); }, 3.0, 4);
    const double l2 = line_quadrature([](double s) { return std::cos(s); }, 3.0, 8);
    CHECK(std::abs(l1 - l2) <= 1e-12 * std::abs(l2));
}

TEST_CASE("weights positive, total weight matches ball volume") {
    VelocityRule rule(Vec3{1, 2, 0.5}, 4.0, 12, 8, 12);
    double total = 0.0;
    for (double w : rule.weights) {
        CHECK(w > 0.0);
        total += w;
    }
    CHECK(total == Catch::Approx(4.0 / 3.0 * pi * 64.0).epsilon(1e-8));
    for (const Vec3& n : rule.nodes) {
        CHECK(n.norm() > 0.0);
        CHECK((n - rule.center).norm() > 0.0);
    }
}
