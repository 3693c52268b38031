#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksd/common.hpp"

namespace ksd {

// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on P_n.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        if (n < 1) throw std::invalid_argument("GaussLegendre: n must be >= 1");
        nodes.resize(n);
        weights.resize(n);
        for (int i = 0; i < n; ++i) {
            double x = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        // ascending node order (interpolation code relies on it)
        for (int i = 0; i < n / 2; ++i) {
            std::swap(nodes[i], nodes[n - 1 - i]);
            std::swap(weights[i], weights[n - 1 - i]);
        }
    }
};

inline const GaussLegendre& gauss_legendre(int n) {
    static std::vector<GaussLegendre> cache = [] {
        std::vector<GaussLegendre> c;
        for (int k = 1; k <= 64; ++k) c.emplace_back(k);
        return c;
    }();
    if (n >= 1 && n <= 64) return cache[n - 1];
    throw std::invalid_argument("gauss_legendre: order out of range [1,64]");
}

// Composite Gauss-Legendre of order 8 per panel on [0, L].
template <typename F>
double line_quadrature(F&& f, double L, int n_panels) {
    if (L < 0.0) throw std::invalid_argument("line_quadrature: negative length");
    if (L == 0.0) return 0.0;
    if (n_panels < 1) n_panels = 1;
    const GaussLegendre& gl = gauss_legendre(8);
    const double h = L / n_panels;
    std::vector<double> partial(static_cast<std::size_t>(n_panels) * gl.nodes.size());
    std::size_t idx = 0;
    for (int p = 0; p < n_panels; ++p) {
        const double a = p * h;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double s = a + 0.5 * h * (gl.nodes[i] + 1.0);
            partial[idx++] = 0.5 * h * gl.weights[i] * f(s);
        }
    }
    return pairwise_sum(partial);
}

// As line_quadrature, but with the substitution s = u^2 applied on the first
// and/or last panel so integrands with endpoint behavior s^{-1/2} stay
// bounded.
template <typename F>
double line_quadrature_endpoint_sqrt(F&& f, double L, int n_panels,
                                     bool left_singular = true, bool right_singular = true) {
    if (L < 0.0) throw std::invalid_argument("line_quadrature: negative length");
    if (L == 0.0) return 0.0;
    if (n_panels < 1) n_panels = 1;
    const GaussLegendre& gl = gauss_legendre(8);
    const double h = L / n_panels;
    std::vector<double> partial;
    partial.reserve(static_cast<std::size_t>(n_panels) * gl.nodes.size());
    for (int p = 0; p < n_panels; ++p) {
        const double a = p * h;
        const bool sub_left = left_singular && p == 0;
        const bool sub_right = right_singular && p == n_panels - 1;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double t = 0.5 * (gl.nodes[i] + 1.0);  // in (0,1)
            const double w = 0.5 * gl.weights[i];
            if (sub_left && sub_right) {
                // split the panel in half, substitute from each end
                const double hh = 0.5 * h;
                const double ul = std::sqrt(hh) * t;
                partial.push_back(w * std::sqrt(hh) * 2.0 * ul * f(a + ul * ul));
                const double ur = std::sqrt(hh) * t;
                partial.push_back(w * std::sqrt(hh) * 2.0 * ur * f(a + h - ur * ur));
            } else if (sub_left) {
                const double u = std::sqrt(h) * t;
                partial.push_back(w * std::sqrt(h) * 2.0 * u * f(a + u * u));
            } else if (sub_right) {
                const double u = std::sqrt(h) * t;
                partial.push_back(w * std::sqrt(h) * 2.0 * u * f(a + h - u * u));
            } else {
                partial.push_back(w * h * f(a + h * t));
            }
        }
    }
    return pairwise_sum(partial);
}

// Quadrature rule on a velocity ball B(center, v_max): radial Gauss-Legendre
// times Gauss-Legendre in cos(theta) times uniform midpoint in phi. Centering
// the polar origin at an integrand singularity makes 1/|v - center|
// integrable through the r^2 Jacobian.
struct VelocityRule {
    Vec3 center;
    double v_max = 6.0;
    int n_r = 24, n_theta = 16, n_phi = 32;
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    // polar indexing: node ordering is ((ir * n_theta) + it) * n_phi + ip
    std::vector<double> radii;       // size n_r
    std::vector<double> cos_thetas;  // size n_theta

    VelocityRule(const Vec3& center_, double v_max_, int n_r_, int n_theta_, int n_phi_)
        : center(center_), v_max(v_max_), n_r(n_r_), n_theta(n_theta_), n_phi(n_phi_) {
        if (v_max <= 0.0 || n_r < 1 || n_theta < 1 || n_phi < 1)
            throw std::invalid_argument("VelocityRule: bad resolution parameters");
        const GaussLegendre& glr = gauss_legendre(n_r);
        const GaussLegendre& glt = gauss_legendre(n_theta);
        radii.resize(n_r);
        cos_thetas.resize(n_theta);
        nodes.reserve(static_cast<std::size_t>(n_r) * n_theta * n_phi);
        weights.reserve(nodes.capacity());
        for (int ir = 0; ir < n_r; ++ir) {
            const double r = 0.5 * v_max * (glr.nodes[ir] + 1.0);
            const double wr = 0.5 * v_max * glr.weights[ir] * r * r;
            radii[ir] = r;
            for (int it = 0; it < n_theta; ++it) {
                const double ct = glt.nodes[it];
                const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
                cos_thetas[it] = ct;
                for (int ip = 0; ip < n_phi; ++ip) {
                    const double phi = 2.0 * pi * (ip + 0.5) / n_phi;
                    Vec3 dir{st * std::cos(phi), st * std::sin(phi), ct};
                    Vec3 node = center + r * dir;
                    if (node.norm() < 1e-12) node = center + (r + 1e-9) * dir;
                    nodes.push_back(node);
                    weights.push_back(wr * glt.weights[it] * (2.0 * pi / n_phi));
                }
            }
        }
    }

    std::size_t size() const { return nodes.size(); }
    std::size_t index(int ir, int it, int ip) const {
        return (static_cast<std::size_t>(ir) * n_theta + it) * n_phi + ip;
    }
};

inline VelocityRule origin_velocity_rule(double v_max, int n_r, int n_theta, int n_phi) {
    return VelocityRule(Vec3{0, 0, 0}, v_max, n_r, n_theta, n_phi);
}

template <typename F>
double velocity_quadrature(F&& f, const VelocityRule& rule) {
    std::vector<double> partial(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double fi = f(rule.nodes[i]);
        if (!std::isfinite(fi))
            throw std::runtime_error("velocity_quadrature: non-finite integrand at node (" +
                                     std::to_string(rule.nodes[i].x) + "," +
                                     std::to_string(rule.nodes[i].y) + "," +
                                     std::to_string(rule.nodes[i].z) + ")");
        partial[i] = rule.weights[i] * fi;
    }
    return pairwise_sum(partial);
}

// Integral over the unit sphere: Gauss-Legendre in cos(psi) x uniform
// trapezoid (periodic, hence midpoint) in phi, n x 2n nodes.
template <typename F>
double sphere_quadrature(F&& f, int n) {
    if (n < 1) throw std::invalid_argument("sphere_quadrature: n must be >= 1");
    const GaussLegendre& gl = gauss_legendre(n);
    const int n_phi = 2 * n;
    std::vector<double> partial(static_cast<std::size_t>(n) * n_phi);
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i) {
        const double ct = gl.nodes[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * pi * j / n_phi;
            const Vec3 sigma{st * std::cos(phi), st * std::sin(phi), ct};
            partial[idx++] = gl.weights[i] * (2.0 * pi / n_phi) * f(sigma);
        }
    }
    return pairwise_sum(partial);
}

}  // namespace ksd
