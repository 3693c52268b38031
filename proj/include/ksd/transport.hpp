#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "ksd/common.hpp"
#include "ksd/geometry.hpp"
#include "ksd/kernel.hpp"
#include "ksd/quadrature.hpp"

namespace ksd {

// ---------------------------------------------------------------------------
// Boundary data g on the incoming boundary, from a named parametric family.
// All families satisfy |g(z,v)| <= A e^{-beta |v|^2}.

enum class BoundaryFamily { scaled_maxwellian, tangential_bump, zero };

struct BoundaryData {
    BoundaryFamily family = BoundaryFamily::zero;
    double amplitude = 0.0;
    double beta = 0.25;

    static BoundaryData scaled_maxwellian(double A, double beta) {
        return {BoundaryFamily::scaled_maxwellian, A, beta};
    }
    static BoundaryData tangential_bump(double A, double beta) {
        return {BoundaryFamily::tangential_bump, A, beta};
    }
    static BoundaryData zero() { return {BoundaryFamily::zero, 0.0, 0.25}; }

    double operator()(const Domain& dom, const Vec3& z, const Vec3& v) const {
        switch (family) {
            case BoundaryFamily::zero:
                return 0.0;
            case BoundaryFamily::scaled_maxwellian:
                return amplitude * std::exp(-beta * v.norm2());
            case BoundaryFamily::tangential_bump: {
                const double c = dom.outward_normal(z).dot(v) / v.norm();
                return amplitude * (1.0 - c * c) * std::exp(-beta * v.norm2());
            }
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Collocation grid: low-discrepancy interior points plus near-boundary
// shells, times an origin-centered master velocity rule. Per-ray exit data
// and moving-least-squares stencils for the fixed ray-sample point set are
// cached after construction.

struct GridConfig {
    int n_x = 200;
    std::uint64_t seed = 1;
    int n_v_r = 10, n_v_theta = 6, n_v_phi = 10;
    double v_max = 6.0;
    int line_panels = 2;  // ray quadrature: 8 Gauss points per panel
};

namespace detail {

inline double halton(std::uint64_t i, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

}  // namespace detail

class PhaseGrid {
  public:
    static constexpr int stencil_k = 8;

    struct Stencil {
        std::array<std::uint32_t, stencil_k> idx{};
        std::array<double, stencil_k> w{};
    };

    PhaseGrid(const Domain& domain, const GridConfig& cfg)
        : domain_(domain),
          cfg_(cfg),
          v_rule_(Vec3{0, 0, 0}, cfg.v_max, cfg.n_v_r, cfg.n_v_theta, cfg.n_v_phi) {
        build_x_nodes();
        build_ray_cache();
    }

    const Domain& domain() const { return domain_; }
    const VelocityRule& v_rule() const { return v_rule_; }
    const GridConfig& config() const { return cfg_; }
    std::size_t n_x() const { return x_nodes_.size(); }
    std::size_t n_v() const { return v_rule_.size(); }
    std::size_t size() const { return n_x() * n_v(); }
    const Vec3& x_node(std::size_t i) const { return x_nodes_[i]; }
    const Vec3& v_node(std::size_t j) const { return v_rule_.nodes[j]; }
    int ray_points() const { return cfg_.line_panels * 8; }

    double tau(std::size_t i, std::size_t j) const { return tau_[i * n_v() + j]; }
    double angle_factor(std::size_t i, std::size_t j) const { return n_factor_[i * n_v() + j]; }
    double nu(const KernelParams& p, std::size_t j) const {
        return collision_frequency(p, v_rule_.nodes[j]);
    }

    // s-offsets of the ray quadrature nodes for unit tau, with weights.
    const std::vector<double>& ray_offsets() const { return ray_s_; }
    const std::vector<double>& ray_weights() const { return ray_w_; }

    // MLS stencil of ray sample p on ray (i, j); built lazily.
    const Stencil& ray_stencil(std::size_t i, std::size_t j, int p) const {
        ensure_ray_stencils();
        return ray_stencils_[(i * n_v() + j) * ray_points() + p];
    }
    void ensure_ray_stencils() const {
        std::call_once(stencil_once_, [this] { build_ray_stencils(); });
    }

    // MLS stencil for an arbitrary interior point.
    Stencil stencil_at(const Vec3& y) const { return build_stencil(y); }

    // value of a sampled column f(., v_j) reconstructed at y
    double reconstruct(const Stencil& st, const std::vector<double>& values, std::size_t j) const {
        double acc = 0.0;
        for (int k = 0; k < stencil_k; ++k) acc += st.w[k] * values[st.idx[k] * n_v() + j];
        return acc;
    }

  private:
    void build_x_nodes() {
        const int n_shell = std::max(1, cfg_.n_x / 4);
        const int n_bulk = cfg_.n_x - n_shell;
        const std::uint64_t offset = 64 + (cfg_.seed % 4096) * 7;
        const Vec3 c = domain_.center();
        const double a = domain_.semiaxis(0), b = domain_.semiaxis(1), cax = domain_.semiaxis(2);
        const double margin = 1e-6 * domain_.diameter();
        std::uint64_t i = offset;
        while (static_cast<int>(x_nodes_.size()) < n_bulk) {
            const Vec3 p{2.0 * detail::halton(i, 2) - 1.0, 2.0 * detail::halton(i, 3) - 1.0,
                         2.0 * detail::halton(i, 5) - 1.0};
            ++i;
            const Vec3 x = c + Vec3{a * p.x, b * p.y, cax * p.z};
            if (!domain_.contains(x)) continue;
            if (domain_.boundary_distance(x) <= margin) continue;
            x_nodes_.push_back(x);
        }
        // near-boundary shells at depths {0.02, 0.05, 0.1} * r
        const double r = domain_.interior_radius();
        const double golden = pi * (3.0 - std::sqrt(5.0));
        const double spin = 2.0 * pi * detail::halton(cfg_.seed + 1, 7);
        for (int k = 0; k < n_shell; ++k) {
            const double depth = (k % 3 == 0 ? 0.02 : (k % 3 == 1 ? 0.05 : 0.1)) * r;
            const double z = 1.0 - 2.0 * (k + 0.5) / n_shell;
            const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * k + spin;
            const Vec3 dir{rad * std::cos(phi), rad * std::sin(phi), z};
            const Vec3 zb = domain_.boundary_point(dir);
            x_nodes_.push_back(zb - depth * domain_.outward_normal(zb));
        }
    }

    void build_ray_cache() {
        const GaussLegendre& gl = gauss_legendre(8);
        for (int panel = 0; panel < cfg_.line_panels; ++panel) {
            for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
                const double s01 = (panel + 0.5 * (gl.nodes[q] + 1.0)) / cfg_.line_panels;
                ray_s_.push_back(s01);
                ray_w_.push_back(0.5 * gl.weights[q] / cfg_.line_panels);
            }
        }
        tau_.resize(size());
        n_factor_.resize(size());
        parallel_for(n_x(), [&](std::size_t i) {
            for (std::size_t j = 0; j < n_v(); ++j) {
                const RayTrace t = domain_.trace(x_nodes_[i], v_rule_.nodes[j]);
                tau_[i * n_v() + j] = t.tau;
                n_factor_[i * n_v() + j] = t.N;
            }
        });
    }

    Stencil build_stencil(const Vec3& y) const {
        const std::size_t n = x_nodes_.size();
        // k nearest nodes, brute force
        std::array<std::uint32_t, stencil_k> idx{};
        std::array<double, stencil_k> d2;
        d2.fill(std::numeric_limits<double>::infinity());
        for (std::size_t m = 0; m < n; ++m) {
            const double d = (x_nodes_[m] - y).norm2();
            if (d >= d2[stencil_k - 1]) continue;
            int pos = stencil_k - 1;
            while (pos > 0 && d2[pos - 1] > d) {
                d2[pos] = d2[pos - 1];
                idx[pos] = idx[pos - 1];
                --pos;
            }
            d2[pos] = d;
            idx[pos] = static_cast<std::uint32_t>(m);
        }
        Stencil st;
        st.idx = idx;
        const double h2 = std::max(d2[stencil_k - 1], 1e-300);
        // weighted linear fit; effective weights from the normal equations
        double M[4][4] = {};
        double theta[stencil_k];
        double basis[stencil_k][4];
        const double h = std::sqrt(h2);
        for (int k = 0; k < stencil_k; ++k) {
            theta[k] = std::exp(-d2[k] / h2);
            const Vec3 d = (x_nodes_[idx[k]] - y) / h;
            basis[k][0] = 1.0;
            basis[k][1] = d.x;
            basis[k][2] = d.y;
            basis[k][3] = d.z;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) M[r][c] += theta[k] * basis[k][r] * basis[k][c];
        }
        for (int r = 0; r < 4; ++r) M[r][r] += 1e-12 * (1.0 + M[0][0]);
        // solve M m = e0 by Gaussian elimination with partial pivoting
        double rhs[4] = {1.0, 0.0, 0.0, 0.0};
        int piv[4] = {0, 1, 2, 3};
        bool ok = true;
        for (int col = 0; col < 4 && ok; ++col) {
            int best = col;
            for (int r = col + 1; r < 4; ++r)
                if (std::abs(M[piv[r]][col]) > std::abs(M[piv[best]][col])) best = r;
            std::swap(piv[col], piv[best]);
            const double p = M[piv[col]][col];
            if (std::abs(p) < 1e-250) {
                ok = false;
                break;
            }
            for (int r = col + 1; r < 4; ++r) {
                const double f = M[piv[r]][col] / p;
                for (int c = col; c < 4; ++c) M[piv[r]][c] -= f * M[piv[col]][c];
                rhs[piv[r]] -= f * rhs[piv[col]];
            }
        }
        double m[4] = {0, 0, 0, 0};
        if (ok) {
            for (int col = 3; col >= 0; --col) {
                double s = rhs[piv[col]];
                for (int c = col + 1; c < 4; ++c) s -= M[piv[col]][c] * m[c];
                m[col] = s / M[piv[col]][col];
            }
            for (int k = 0; k < stencil_k; ++k) {
                double dot = 0.0;
                for (int r = 0; r < 4; ++r) dot += basis[k][r] * m[r];
                st.w[k] = theta[k] * dot;
            }
        } else {
            // Shepard fallback
            double sum = 0.0;
            for (int k = 0; k < stencil_k; ++k) sum += theta[k];
            for (int k = 0; k < stencil_k; ++k) st.w[k] = theta[k] / sum;
        }
        return st;
    }

    void build_ray_stencils() const {
        ray_stencils_.resize(size() * ray_points());
        parallel_for(n_x(), [&](std::size_t i) {
            for (std::size_t j = 0; j < n_v(); ++j) {
                const double t = tau_[i * n_v() + j];
                for (int p = 0; p < ray_points(); ++p) {
                    const Vec3 y = x_nodes_[i] - (t * ray_s_[p]) * v_rule_.nodes[j];
                    ray_stencils_[(i * n_v() + j) * ray_points() + p] = build_stencil(y);
                }
            }
        });
    }

    Domain domain_;
    GridConfig cfg_;
    VelocityRule v_rule_;
    std::vector<Vec3> x_nodes_;
    std::vector<double> tau_, n_factor_;
    std::vector<double> ray_s_, ray_w_;
    mutable std::vector<Stencil> ray_stencils_;
    mutable std::once_flag stencil_once_;
};

// ---------------------------------------------------------------------------
// Sampled field on a PhaseGrid, optionally backed by an exact closure.

struct Field {
    const PhaseGrid* grid = nullptr;
    std::vector<double> values;  // n_x * n_v
    PhasePoint closure;          // may be empty

    Field() = default;
    explicit Field(const PhaseGrid& g) : grid(&g), values(g.size(), 0.0) {}

    static Field from_closure(const PhaseGrid& g, PhasePoint fn) {
        Field f(g);
        f.closure = std::move(fn);
        parallel_for(g.n_x(), [&](std::size_t i) {
            for (std::size_t j = 0; j < g.n_v(); ++j)
                f.values[i * g.n_v() + j] = f.closure(g.x_node(i), g.v_node(j));
        });
        return f;
    }

    double at(std::size_t i, std::size_t j) const { return values[i * grid->n_v() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * grid->n_v() + j]; }
    bool has_closure() const { return static_cast<bool>(closure); }

    Field& axpy(double a, const Field& other) {
        for (std::size_t k = 0; k < values.size(); ++k) values[k] += a * other.values[k];
        closure = nullptr;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// Interpolation of sampled velocity columns on the master polar rule.
// `nearest`: radial-linear x angular-nearest (positivity preserving; used by
// the kernel collapse and the collision operator). `bilinear`: radial-linear
// x angular-bilinear, used by finite-difference paths that need an (a.e.)
// differentiable surrogate.

struct VStencil {
    // up to 8 (node, weight) pairs; n = 0 encodes truncation outside v_max
    std::array<std::uint32_t, 8> idx{};
    std::array<double, 8> w{};
    int n = 0;
};

class VelocityInterp {
  public:
    explicit VelocityInterp(const VelocityRule& rule) : rule_(&rule) {}

    VStencil nearest(const Vec3& v) const {
        VStencil st;
        const double r = v.norm();
        if (r > rule_->v_max || r == 0.0) return st;
        const int it = nearest_cos(v.z / r);
        const int ip = phi_cell(v);
        int lo, hi;
        double wlo;
        radial_bracket(r, lo, hi, wlo);
        st.idx[0] = static_cast<std::uint32_t>(rule_->index(lo, it, ip));
        st.w[0] = wlo;
        st.idx[1] = static_cast<std::uint32_t>(rule_->index(hi, it, ip));
        st.w[1] = 1.0 - wlo;
        st.n = 2;
        return st;
    }

    VStencil bilinear(const Vec3& v) const {
        VStencil st;
        const double r = v.norm();
        if (r > rule_->v_max || r == 0.0) return st;
        int lo, hi;
        double wlo;
        radial_bracket(r, lo, hi, wlo);
        // angular bilinear in (cos theta, phi); clamped at the poles
        const double ct = v.z / r;
        const auto& cts = rule_->cos_thetas;
        int t0 = 0, t1 = 0;
        double wt0 = 1.0;
        if (ct <= cts.front()) {
            t0 = t1 = 0;
        } else if (ct >= cts.back()) {
            t0 = t1 = static_cast<int>(cts.size()) - 1;
        } else {
            t1 = static_cast<int>(std::upper_bound(cts.begin(), cts.end(), ct) - cts.begin());
            t0 = t1 - 1;
            wt0 = (cts[t1] - ct) / (cts[t1] - cts[t0]);
        }
        double phi = std::atan2(v.y, v.x);
        if (phi < 0.0) phi += 2.0 * pi;
        const double dphi = 2.0 * pi / rule_->n_phi;
        const double cell = phi / dphi - 0.5;
        int p0 = static_cast<int>(std::floor(cell));
        const double wp1 = cell - p0;
        int p1 = (p0 + 1) % rule_->n_phi;
        p0 = (p0 % rule_->n_phi + rule_->n_phi) % rule_->n_phi;
        const double wr[2] = {wlo, 1.0 - wlo};
        const int rr[2] = {lo, hi};
        const double wt[2] = {wt0, 1.0 - wt0};
        const int tt[2] = {t0, t1};
        const double wp[2] = {1.0 - wp1, wp1};
        const int pp[2] = {p0, p1};
        st.n = 0;
        for (int ir = 0; ir < 2; ++ir)
            for (int it = 0; it < 2; ++it)
                for (int ip = 0; ip < 2; ++ip) {
                    const double w = wr[ir] * wt[it] * wp[ip];
                    if (w == 0.0) continue;
                    st.idx[st.n] = static_cast<std::uint32_t>(rule_->index(rr[ir], tt[it], pp[ip]));
                    st.w[st.n] = w;
                    ++st.n;
                }
        return st;
    }

    double eval(const VStencil& st, const std::vector<double>& values, std::size_t row_offset) const {
        double acc = 0.0;
        for (int k = 0; k < st.n; ++k) acc += st.w[k] * values[row_offset + st.idx[k]];
        return acc;
    }

  private:
    void radial_bracket(double r, int& lo, int& hi, double& wlo) const {
        const auto& rad = rule_->radii;
        if (r <= rad.front()) {
            lo = hi = 0;
            wlo = 1.0;
            return;
        }
        if (r >= rad.back()) {
            lo = hi = static_cast<int>(rad.size()) - 1;
            wlo = 1.0;
            return;
        }
        hi = static_cast<int>(std::upper_bound(rad.begin(), rad.end(), r) - rad.begin());
        lo = hi - 1;
        wlo = (rad[hi] - r) / (rad[hi] - rad[lo]);
    }
    int nearest_cos(double ct) const {
        const auto& cts = rule_->cos_thetas;
        const auto it = std::lower_bound(cts.begin(), cts.end(), ct);
        if (it == cts.begin()) return 0;
        if (it == cts.end()) return static_cast<int>(cts.size()) - 1;
        const int hi = static_cast<int>(it - cts.begin());
        return (ct - cts[hi - 1] < cts[hi] - ct) ? hi - 1 : hi;
    }
    int phi_cell(const Vec3& v) const {
        double phi = std::atan2(v.y, v.x);
        if (phi < 0.0) phi += 2.0 * pi;
        int ip = static_cast<int>(phi / (2.0 * pi / rule_->n_phi));
        if (ip >= rule_->n_phi) ip = rule_->n_phi - 1;
        return ip;
    }

    const VelocityRule* rule_;
};

// ---------------------------------------------------------------------------
// Operators.

// Boundary lift Jg(x,v) = e^{-nu(v) tau} g(q(x,v), v); grazing rays
// (N < 1e-10) contribute 0.
inline Field apply_J(const BoundaryData& g, const PhaseGrid& grid, const KernelParams& params) {
    const Domain& dom = grid.domain();
    PhasePoint fn = [&dom, g, params](const Vec3& x, const Vec3& v) {
        const RayTrace t = dom.trace(x, v);
        if (t.N < 1e-10) return 0.0;
        return std::exp(-collision_frequency(params, v) * t.tau) * g(dom, t.q, v);
    };
    return Field::from_closure(grid, std::move(fn));
}

namespace detail {

template <bool WeightS>
Field apply_S_impl(const Field& h, const PhaseGrid& grid, const KernelParams& params) {
    Field out(grid);
    const std::size_t nv = grid.n_v();
    const auto& soff = grid.ray_offsets();
    const auto& sw = grid.ray_weights();
    const int np = grid.ray_points();
    std::vector<double> nu(nv);
    for (std::size_t j = 0; j < nv; ++j) nu[j] = grid.nu(params, j);

    const bool use_closure = h.has_closure();
    if (!use_closure) grid.ensure_ray_stencils();

    parallel_for(grid.n_x(), [&](std::size_t i) {
        std::vector<double> partial(np);
        for (std::size_t j = 0; j < nv; ++j) {
            const double tau = grid.tau(i, j);
            if (tau == 0.0) {
                out.at(i, j) = 0.0;
                continue;
            }
            const Vec3& v = grid.v_node(j);
            for (int p = 0; p < np; ++p) {
                const double s = tau * soff[p];
                double hv;
                if (use_closure) {
                    hv = h.closure(grid.x_node(i) - s * v, v);
                } else {
                    hv = grid.reconstruct(grid.ray_stencil(i, j, p), h.values, j);
                }
                if (!std::isfinite(hv))
                    throw std::runtime_error("apply_S: non-finite integrand on ray (" +
                                             std::to_string(i) + "," + std::to_string(j) + ")");
                double w = tau * sw[p] * std::exp(-nu[j] * s) * hv;
                if constexpr (WeightS) w *= s;
                partial[p] = w;
            }
            out.at(i, j) = pairwise_sum(partial);
        }
    });

    if (use_closure) {
        const Domain& dom = grid.domain();
        PhasePoint inner = h.closure;
        const int panels = grid.config().line_panels;
        out.closure = [&dom, inner, params, panels](const Vec3& x, const Vec3& v) {
            const double tau = dom.exit_time(x, v);
            const double nu_v = collision_frequency(params, v);
            return line_quadrature(
                [&](double s) {
                    const double val = inner(x - s * v, v) * std::exp(-nu_v * s);
                    if constexpr (WeightS) return val * s;
                    return val;
                },
                tau, panels);
        };
    }
    return out;
}

}  // namespace detail

// Damped path integral S h(x,v) = int_0^tau e^{-nu(v)s} h(x-sv, v) ds.
inline Field apply_S(const Field& h, const PhaseGrid& grid, const KernelParams& params) {
    return detail::apply_S_impl<false>(h, grid, params);
}

// Proof-auxiliary variant with kernel e^{-nu(v)s} s.
inline Field apply_S_weighted_s(const Field& h, const PhaseGrid& grid, const KernelParams& params) {
    return detail::apply_S_impl<true>(h, grid, params);
}

// Proof-auxiliary boundary factor e^{-nu tau}/(|v| N) * h(q, v), the
// magnitude of the x-derivative boundary term of the lift.
inline Field apply_J_xderiv_factor(const PhasePoint& h, const PhaseGrid& grid,
                                   const KernelParams& params) {
    const Domain& dom = grid.domain();
    PhasePoint fn = [&dom, h, params](const Vec3& x, const Vec3& v) {
        const RayTrace t = dom.trace(x, v);
        if (t.N < 1e-10) return 0.0;
        return std::exp(-collision_frequency(params, v) * t.tau) / (v.norm() * t.N) * h(t.q, v);
    };
    return Field::from_closure(grid, std::move(fn));
}

// Collapsed scattering operator: K h(x, v_j) = sum_l K[j][l] h(x, v_l). The
// matrix folds the polar-centered kernel quadrature (singularity absorbed by
// the Jacobian) through radial-linear x angular-nearest interpolation onto
// the master rule; quadrature nodes beyond v_max truncate.
class KernelOperator {
  public:
    KernelOperator(const PhaseGrid& grid, const KernelParams& params, int n_r = 24, int n_theta = 16,
                   int n_phi = 32)
        : grid_(&grid), params_(params) {
        const VelocityRule offsets(Vec3{0, 0, 0}, params.v_max, n_r, n_theta, n_phi);
        const std::size_t nv = grid.n_v();
        matrix_.assign(nv * nv, 0.0);
        VelocityInterp interp(grid.v_rule());
        std::atomic<std::int64_t> dropped{0};
        parallel_for(nv, [&](std::size_t j) {
            const Vec3 vj = grid.v_node(j);
            double* row = &matrix_[j * nv];
            std::int64_t local_dropped = 0;
            for (std::size_t m = 0; m < offsets.size(); ++m) {
                const Vec3 u = vj + offsets.nodes[m];
                const double kv = grad_kernel(params_, vj, u) * offsets.weights[m];
                const VStencil st = interp.nearest(u);
                if (st.n == 0) {
                    ++local_dropped;
                    continue;
                }
                for (int k = 0; k < st.n; ++k) row[st.idx[k]] += kv * st.w[k];
            }
            dropped += local_dropped;
        });
        truncated_nodes_ = dropped.load();
    }

    std::int64_t truncated_nodes() const { return truncated_nodes_; }

    Field apply(const Field& h) const {
        const std::size_t nv = grid_->n_v();
        Field out(*grid_);
        parallel_for(grid_->n_x(), [&](std::size_t i) {
            const double* hex = &h.values[i * nv];
            double* o = &out.values[i * nv];
            for (std::size_t j = 0; j < nv; ++j) {
                const double* row = &matrix_[j * nv];
                double acc = 0.0;
                for (std::size_t l = 0; l < nv; ++l) acc += row[l] * hex[l];
                o[j] = acc;
            }
        });
        return out;
    }

  private:
    const PhaseGrid* grid_;
    KernelParams params_;
    std::vector<double> matrix_;
    std::int64_t truncated_nodes_ = 0;
};

inline Field apply_K(const Field& h, const KernelOperator& K) { return K.apply(h); }

inline Field apply_SK(const Field& h, const PhaseGrid& grid, const KernelParams& params,
                      const KernelOperator& K) {
    return apply_S(K.apply(h), grid, params);
}

// sup-norm |f|_{inf,alpha} = max over the grid of e^{alpha |v|^2} |f|.
inline double sup_norm_alpha(const Field& f, double alpha) {
    const PhaseGrid& g = *f.grid;
    double best = 0.0;
    for (std::size_t i = 0; i < g.n_x(); ++i)
        for (std::size_t j = 0; j < g.n_v(); ++j) {
            const double val = std::exp(alpha * g.v_node(j).norm2()) * std::abs(f.at(i, j));
            best = std::max(best, val);
        }
    return best;
}

// sup of f - f0 - S K f - S phi in the alpha-weighted norm (integral-form
// residual; pass f0 = Jg and phi possibly empty).
inline double transport_residual(const Field& f, const Field& jg, const Field* s_phi,
                                 const PhaseGrid& grid, const KernelParams& params,
                                 const KernelOperator& K, double alpha) {
    Field rhs = apply_SK(f, grid, params, K);
    rhs.axpy(1.0, jg);
    if (s_phi) rhs.axpy(1.0, *s_phi);
    Field diff = f;
    diff.axpy(-1.0, rhs);
    return sup_norm_alpha(diff, alpha);
}

}  // namespace ksd
