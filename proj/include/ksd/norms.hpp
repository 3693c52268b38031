#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ksd/common.hpp"
#include "ksd/geometry.hpp"
#include "ksd/quadrature.hpp"
#include "ksd/report.hpp"
#include "ksd/transport.hpp"

namespace ksd {

// Norm weight w(x,v) = |v|/(|v|+1) N(x,v), in [0,1).
inline double weight_w(const Domain& dom, const Vec3& x, const Vec3& v) {
    if (v.norm2() == 0.0) throw std::invalid_argument("weight_w: zero velocity");
    const double s = v.norm();
    return s / (s + 1.0) * dom.boundary_angle_factor(x, v);
}

struct NormConfig {
    double alpha = 0.25;
    double fd_step_x_rel = 1e-4;  // fraction of diam
    double fd_step_v = 1e-3;
    int sub_x = 64;   // gradient-norm subsample sizes (sup part uses the full grid)
    int sub_v = 128;
};

// Reusable finite-difference machinery for the weighted gradient norms of
// grid-backed fields: the x-stencils at x_i +- h e_k and the v-stencils at
// v_j +- h e_k are fixed per grid, built once.
class NormWorkspace {
  public:
    NormWorkspace(const PhaseGrid& grid, const NormConfig& cfg)
        : grid_(&grid), cfg_(cfg), interp_(grid.v_rule()) {
        h_x_ = cfg.fd_step_x_rel * grid.domain().diameter();
        const std::size_t nx = grid.n_x(), nv = grid.n_v();
        const std::size_t sx = std::min<std::size_t>(cfg.sub_x, nx);
        const std::size_t sv = std::min<std::size_t>(cfg.sub_v, nv);
        for (std::size_t a = 0; a < sx; ++a) xs_.push_back(a * nx / sx);
        for (std::size_t b = 0; b < sv; ++b) vs_.push_back(b * nv / sv);

        xfd_.resize(xs_.size() * 3);
        const Domain& dom = grid.domain();
        for (std::size_t a = 0; a < xs_.size(); ++a) {
            const Vec3 x = grid.x_node(xs_[a]);
            for (int k = 0; k < 3; ++k) {
                Vec3 e{0, 0, 0};
                e[k] = h_x_;
                XFd& f = xfd_[a * 3 + k];
                f.plus_ok = dom.contains(x + e);
                f.minus_ok = dom.contains(x - e);
                if (f.plus_ok) f.plus = grid.stencil_at(x + e);
                if (f.minus_ok) f.minus = grid.stencil_at(x - e);
            }
        }
        vfd_.resize(vs_.size() * 3 * 2);
        for (std::size_t b = 0; b < vs_.size(); ++b) {
            const Vec3 v = grid.v_node(vs_[b]);
            for (int k = 0; k < 3; ++k) {
                Vec3 e{0, 0, 0};
                e[k] = cfg_.fd_step_v;
                vfd_[(b * 3 + k) * 2] = interp_.bilinear(v + e);
                vfd_[(b * 3 + k) * 2 + 1] = interp_.bilinear(v - e);
            }
        }
    }

    const NormConfig& config() const { return cfg_; }

    // |f|_{inf,alpha} over the full grid.
    double sup(const Field& f) const { return sup_norm_alpha(f, cfg_.alpha); }

    // |grad_x f|_{inf,alpha,w} over the subsample; central differences of the
    // closure when available, of the MLS surrogate otherwise; one-sided next
    // to the boundary.
    double weighted_x_grad(const Field& f) const {
        const PhaseGrid& g = *grid_;
        std::vector<double> best(xs_.size(), 0.0);
        parallel_for(xs_.size(), [&](std::size_t a) {
            const std::size_t i = xs_[a];
            const Vec3 x = g.x_node(i);
            for (std::size_t b = 0; b < vs_.size(); ++b) {
                const std::size_t j = vs_[b];
                const Vec3 v = g.v_node(j);
                Vec3 grad{0, 0, 0};
                for (int k = 0; k < 3; ++k) {
                    const XFd& fd = xfd_[a * 3 + k];
                    double fp, fm, denom;
                    if (f.has_closure()) {
                        Vec3 e{0, 0, 0};
                        e[k] = h_x_;
                        const bool pok = fd.plus_ok, mok = fd.minus_ok;
                        fp = pok ? f.closure(x + e, v) : f.at(i, j);
                        fm = mok ? f.closure(x - e, v) : f.at(i, j);
                        denom = (pok ? h_x_ : 0.0) + (mok ? h_x_ : 0.0);
                    } else {
                        fp = fd.plus_ok ? g.reconstruct(fd.plus, f.values, j) : f.at(i, j);
                        fm = fd.minus_ok ? g.reconstruct(fd.minus, f.values, j) : f.at(i, j);
                        denom = (fd.plus_ok ? h_x_ : 0.0) + (fd.minus_ok ? h_x_ : 0.0);
                    }
                    grad[k] = denom > 0.0 ? (fp - fm) / denom : 0.0;
                }
                const double w = v.norm() / (v.norm() + 1.0) * g.angle_factor(i, j);
                const double val =
                    w * grad.norm() * std::exp(cfg_.alpha * v.norm2());
                best[a] = std::max(best[a], val);
            }
        });
        double m = 0.0;
        for (double b : best) m = std::max(m, b);
        return m;
    }

    // |grad_v f|_{inf,alpha,w}; the surrogate path differentiates the
    // radial-linear x angular-bilinear velocity interpolant at the x-node.
    double weighted_v_grad(const Field& f) const {
        const PhaseGrid& g = *grid_;
        const std::size_t nv = g.n_v();
        std::vector<double> best(xs_.size(), 0.0);
        parallel_for(xs_.size(), [&](std::size_t a) {
            const std::size_t i = xs_[a];
            const Vec3 x = g.x_node(i);
            for (std::size_t b = 0; b < vs_.size(); ++b) {
                const std::size_t j = vs_[b];
                const Vec3 v = g.v_node(j);
                Vec3 grad{0, 0, 0};
                for (int k = 0; k < 3; ++k) {
                    double fp, fm;
                    if (f.has_closure()) {
                        Vec3 e{0, 0, 0};
                        e[k] = cfg_.fd_step_v;
                        fp = f.closure(x, v + e);
                        fm = f.closure(x, v - e);
                    } else {
                        const VStencil& sp = vfd_[(b * 3 + k) * 2];
                        const VStencil& sm = vfd_[(b * 3 + k) * 2 + 1];
                        fp = sp.n ? interp_.eval(sp, f.values, i * nv) : 0.0;
                        fm = sm.n ? interp_.eval(sm, f.values, i * nv) : 0.0;
                    }
                    grad[k] = (fp - fm) / (2.0 * cfg_.fd_step_v);
                }
                const double w = v.norm() / (v.norm() + 1.0) * g.angle_factor(i, j);
                best[a] = std::max(best[a], w * grad.norm() * std::exp(cfg_.alpha * v.norm2()));
            }
        });
        double m = 0.0;
        for (double b : best) m = std::max(m, b);
        return m;
    }

    double weighted_grad_norm(const Field& f) const {
        return weighted_x_grad(f) + weighted_v_grad(f);
    }

    // ||f|| = |f|_{inf,alpha} + |grad_x f|_{inf,alpha,w} + |grad_v f|_{inf,alpha,w}
    double full_norm(const Field& f) const { return sup(f) + weighted_x_grad(f) + weighted_v_grad(f); }

  private:
    struct XFd {
        PhaseGrid::Stencil plus, minus;
        bool plus_ok = false, minus_ok = false;
    };

    const PhaseGrid* grid_;
    NormConfig cfg_;
    VelocityInterp interp_;
    double h_x_;
    std::vector<std::size_t> xs_, vs_;
    std::vector<XFd> xfd_;
    std::vector<VStencil> vfd_;
};

// ---------------------------------------------------------------------------
// W^{1,p} integrability estimator for w(x,v)^{-p} e^{-p alpha |v|^2} using the
// boundary-coordinate factorization: chord-length factor 2R, boundary area,
// radial factor int (1+r)^p r^{2-p} e^{-p alpha r^2} dr, and the exact angular
// factor int_0^{pi/2} cos^{2-p}(t) sin(t) dt = 1/(3-p) for p < 3.

inline double sobolev_angular_factor_exact(double p) {
    if (p >= 3.0) throw std::invalid_argument("angular factor diverges for p >= 3");
    return 1.0 / (3.0 - p);
}

// Numeric angular factor; substitution t = u^m tames the t^{2-p} endpoint.
inline double sobolev_angular_factor_quadrature(double p, int n_panels = 64) {
    const int m = std::max(1, static_cast<int>(std::ceil(2.0 / std::max(0.05, 3.0 - p))));
    // int_0^1 t^{2-p} dt with t = u^m: m int_0^1 u^{m(3-p)-1} du
    return line_quadrature(
        [&](double u) {
            return u > 0.0 ? m * std::pow(u, m * (3.0 - p) - 1.0) : 0.0;
        },
        1.0, n_panels);
}

// partial angular integral int_eps^1 t^{2-p} dt by quadrature
inline double sobolev_angular_partial(double p, double eps, int n_panels = 128) {
    return line_quadrature([&](double t) { return std::pow(eps + t, 2.0 - p); }, 1.0 - eps,
                           n_panels);
}

inline double boundary_area(const Domain& dom, int n = 64) {
    const double a = dom.semiaxis(0), b = dom.semiaxis(1), c = dom.semiaxis(2);
    const GaussLegendre& gl = gauss_legendre(std::min(n, 64));
    double area = 0.0;
    const int n_phi = 2 * n;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double ct = gl.nodes[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int jp = 0; jp < n_phi; ++jp) {
            const double phi = 2.0 * pi * (jp + 0.5) / n_phi;
            // |z_theta x z_phi|/sin(theta) for z = (a st cos, b st sin, c ct),
            // in cos(theta) coordinates
            const double gx = b * c * st * std::cos(phi);
            const double gy = a * c * st * std::sin(phi);
            const double gz = a * b * ct;
            area += gl.weights[i] * (2.0 * pi / n_phi) * std::sqrt(gx * gx + gy * gy + gz * gz);
        }
    }
    return area;
}

struct SobolevResult {
    double value = 0.0;
    bool diverged = false;
    std::vector<std::pair<double, double>> partials;  // (eps, partial angular integral)
    double fitted_exponent = 0.0;                     // of partial ~ eps^{-(p-3)}
};

inline SobolevResult sobolev_integrability(const Domain& dom, double alpha, double p,
                                           int resolution = 64) {
    if (p < 1.0) throw std::invalid_argument("sobolev_integrability: p >= 1 required");
    if (!(alpha > 0.0)) throw std::invalid_argument("sobolev_integrability: alpha > 0 required");
    SobolevResult out;

    if (p >= 3.0) {
        out.diverged = true;
        std::vector<double> logs_eps, logs_val;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const double part = sobolev_angular_partial(p, eps, resolution * 4);
            out.partials.emplace_back(eps, part);
            logs_eps.push_back(std::log(1.0 / eps));
            logs_val.push_back(std::log(part));
        }
        if (p > 3.0) {
            // least-squares slope of log(partial) vs log(1/eps)
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const int n = static_cast<int>(logs_eps.size());
            for (int i = 0; i < n; ++i) {
                sx += logs_eps[i];
                sy += logs_val[i];
                sxx += logs_eps[i] * logs_eps[i];
                sxy += logs_eps[i] * logs_val[i];
            }
            out.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        } else {
            // p = 3: partial ~ log(1/eps); report the growth ratio instead
            out.fitted_exponent = 0.0;
        }
        return out;
    }

    // radial factor: int_0^inf (1+r)^p r^{2-p} e^{-p alpha r^2} dr
    const int m = std::max(1, static_cast<int>(std::ceil(2.0 / (3.0 - p))));
    const double r_up = std::sqrt(60.0 / (p * alpha)) + 1.0;
    const double head = line_quadrature(
        [&](double u) {
            const double r = std::pow(u, m);
            return m * std::pow(u, m - 1) * std::pow(1.0 + r, p) * std::pow(r, 2.0 - p) *
                   std::exp(-p * alpha * r * r);
        },
        1.0, resolution);
    const double tail = line_quadrature(
        [&](double s) {
            const double r = 1.0 + s;
            return std::pow(1.0 + r, p) * std::pow(r, 2.0 - p) * std::exp(-p * alpha * r * r);
        },
        r_up - 1.0, resolution);
    const double radial = head + tail;

    out.value = 2.0 * dom.circumscribed_radius() * boundary_area(dom, resolution) * 2.0 * pi *
                radial * sobolev_angular_factor_exact(p);
    return out;
}

// Grid-level L^p norm proxy: equal x-weights Vol/n_x times the velocity rule
// weights.
inline double grid_lp_norm(const Field& f, double p) {
    const PhaseGrid& g = *f.grid;
    const double vol = 4.0 / 3.0 * pi * g.domain().semiaxis(0) * g.domain().semiaxis(1) *
                       g.domain().semiaxis(2);
    const double wx = vol / static_cast<double>(g.n_x());
    std::vector<double> partial(g.size());
    for (std::size_t i = 0; i < g.n_x(); ++i)
        for (std::size_t j = 0; j < g.n_v(); ++j)
            partial[i * g.n_v() + j] =
                wx * g.v_rule().weights[j] * std::pow(std::abs(f.at(i, j)), p);
    return std::pow(pairwise_sum(partial), 1.0 / p);
}

}  // namespace ksd
