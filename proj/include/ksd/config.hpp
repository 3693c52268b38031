#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ksd/collision.hpp"
#include "ksd/geometry.hpp"
#include "ksd/kernel.hpp"
#include "ksd/norms.hpp"
#include "ksd/solver.hpp"
#include "ksd/transport.hpp"

namespace ksd {

using json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scenario {
    verify_geometry,
    verify_kernel,
    verify_collision,
    verify_norms,
    contraction,
    solve_linear,
    solve_nonlinear,
    full_suite
};

struct QuadratureConfig {
    int n_r = 24, n_theta = 16, n_phi = 32;
    int sphere_n = 32;
    int line_panels = 4;
};

struct RunConfig {
    Scenario scenario = Scenario::full_suite;
    std::uint64_t seed = 1;
    int samples = 10000;
    std::string output_dir = ".";
    Domain domain = Domain::ball(1.0);
    std::vector<Domain> domains;  // contraction scenario
    BoundaryData boundary = BoundaryData::zero();
    KernelParams kernel;
    QuadratureConfig quadrature;
    GridConfig grid;
    SolverConfig solver;
    NormConfig norms;
    GammaGridQuadrature gamma_quadrature;
    std::string config_hash;
};

namespace detail {

inline void reject_unknown(const json& j, const std::string& where,
                           std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("key \"") + key + "\": " + e.what());
    }
}

inline Vec3 get_vec3(const json& j, const char* key, Vec3 fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw ConfigError(std::string(key) + ": expected [x,y,z]");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline Domain parse_domain(const json& j, const std::string& where) {
    reject_unknown(j, where, {"kind", "center", "semiaxes"});
    const std::string kind = get_or<std::string>(j, "kind", "ball");
    const Vec3 center = get_vec3(j, "center", {0, 0, 0});
    if (kind == "ball") {
        double r0 = 1.0;
        if (j.contains("semiaxes")) {
            const auto& a = j.at("semiaxes");
            if (!a.is_array() || a.empty()) throw ConfigError(where + ".semiaxes: expected array");
            r0 = a[0].get<double>();
            for (const auto& v : a)
                if (v.get<double>() != r0)
                    throw ConfigError(where + ": ball requires equal semiaxes");
        }
        return Domain::ball(r0, center);
    }
    if (kind == "ellipsoid") {
        if (!j.contains("semiaxes")) throw ConfigError(where + ": ellipsoid requires semiaxes");
        const auto& a = j.at("semiaxes");
        if (!a.is_array() || a.size() != 3) throw ConfigError(where + ".semiaxes: expected [a,b,c]");
        return Domain::ellipsoid(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), center);
    }
    throw ConfigError(where + ".kind: expected \"ball\" or \"ellipsoid\"");
}

inline Scenario parse_scenario(const std::string& s) {
    if (s == "verify_geometry") return Scenario::verify_geometry;
    if (s == "verify_kernel") return Scenario::verify_kernel;
    if (s == "verify_collision") return Scenario::verify_collision;
    if (s == "verify_norms") return Scenario::verify_norms;
    if (s == "contraction") return Scenario::contraction;
    if (s == "solve_linear") return Scenario::solve_linear;
    if (s == "solve_nonlinear") return Scenario::solve_nonlinear;
    if (s == "full_suite") return Scenario::full_suite;
    throw ConfigError("scenario: unknown value \"" + s + "\"");
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

inline const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::verify_geometry: return "verify_geometry";
        case Scenario::verify_kernel: return "verify_kernel";
        case Scenario::verify_collision: return "verify_collision";
        case Scenario::verify_norms: return "verify_norms";
        case Scenario::contraction: return "contraction";
        case Scenario::solve_linear: return "solve_linear";
        case Scenario::solve_nonlinear: return "solve_nonlinear";
        case Scenario::full_suite: return "full_suite";
    }
    return "?";
}

inline RunConfig parse_config(const json& root) {
    using detail::get_or;
    using detail::reject_unknown;
    reject_unknown(root, "config",
                   {"scenario", "seed", "samples", "output_dir", "domain", "domains", "boundary",
                    "kernel", "quadrature", "grid", "solver", "norms", "gamma_quadrature"});
    RunConfig cfg;
    if (!root.contains("scenario")) throw ConfigError("config: missing required key \"scenario\"");
    cfg.scenario = detail::parse_scenario(root.at("scenario").get<std::string>());
    cfg.seed = get_or<std::uint64_t>(root, "seed", 1);
    cfg.samples = get_or<int>(root, "samples", 10000);
    if (cfg.samples < 1) throw ConfigError("samples: must be >= 1");
    cfg.output_dir = get_or<std::string>(root, "output_dir", ".");

    if (root.contains("domain")) cfg.domain = detail::parse_domain(root.at("domain"), "domain");
    if (root.contains("domains")) {
        if (!root.at("domains").is_array()) throw ConfigError("domains: expected array");
        for (const auto& d : root.at("domains"))
            cfg.domains.push_back(detail::parse_domain(d, "domains[]"));
    }

    if (root.contains("boundary")) {
        const json& b = root.at("boundary");
        reject_unknown(b, "boundary", {"family", "amplitude", "beta"});
        const std::string fam = get_or<std::string>(b, "family", "zero");
        const double A = get_or<double>(b, "amplitude", 0.0);
        const double beta = get_or<double>(b, "beta", 0.25);
        if (fam == "zero")
            cfg.boundary = BoundaryData::zero();
        else if (fam == "scaled_maxwellian")
            cfg.boundary = BoundaryData::scaled_maxwellian(A, beta);
        else if (fam == "tangential_bump")
            cfg.boundary = BoundaryData::tangential_bump(A, beta);
        else
            throw ConfigError("boundary.family: unknown value \"" + fam + "\"");
    }

    if (root.contains("kernel")) {
        const json& k = root.at("kernel");
        reject_unknown(k, "kernel", {"C", "gamma", "rho", "alpha", "v_max"});
        try {
            cfg.kernel = KernelParams(
                CrossSection(get_or<double>(k, "C", 1.0), get_or<double>(k, "gamma", 1.0)),
                get_or<double>(k, "rho", 0.0), get_or<double>(k, "alpha", 0.25),
                get_or<double>(k, "v_max", 6.0));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("kernel: ") + e.what());
        }
    }

    if (root.contains("quadrature")) {
        const json& q = root.at("quadrature");
        reject_unknown(q, "quadrature", {"n_r", "n_theta", "n_phi", "sphere_n", "line_panels"});
        cfg.quadrature.n_r = get_or<int>(q, "n_r", 24);
        cfg.quadrature.n_theta = get_or<int>(q, "n_theta", 16);
        cfg.quadrature.n_phi = get_or<int>(q, "n_phi", 32);
        cfg.quadrature.sphere_n = get_or<int>(q, "sphere_n", 32);
        cfg.quadrature.line_panels = get_or<int>(q, "line_panels", 4);
    }

    if (root.contains("grid")) {
        const json& g = root.at("grid");
        reject_unknown(g, "grid",
                       {"n_x", "seed", "n_v_r", "n_v_theta", "n_v_phi", "line_panels"});
        cfg.grid.n_x = get_or<int>(g, "n_x", 200);
        cfg.grid.seed = get_or<std::uint64_t>(g, "seed", 1);
        cfg.grid.n_v_r = get_or<int>(g, "n_v_r", 10);
        cfg.grid.n_v_theta = get_or<int>(g, "n_v_theta", 6);
        cfg.grid.n_v_phi = get_or<int>(g, "n_v_phi", 10);
        cfg.grid.line_panels = get_or<int>(g, "line_panels", 2);
        if (cfg.grid.n_x < 8) throw ConfigError("grid.n_x: must be >= 8");
    }
    cfg.grid.v_max = cfg.kernel.v_max;

    if (root.contains("solver")) {
        const json& s = root.at("solver");
        reject_unknown(s, "solver",
                       {"series_tol", "max_terms", "max_outer", "outer_tol", "smallness_threshold"});
        cfg.solver.series_tol = get_or<double>(s, "series_tol", 1e-8);
        cfg.solver.max_terms = get_or<int>(s, "max_terms", 20);
        cfg.solver.max_outer = get_or<int>(s, "max_outer", 8);
        cfg.solver.outer_tol = get_or<double>(s, "outer_tol", 1e-7);
        cfg.solver.smallness_threshold = get_or<double>(s, "smallness_threshold", 0.15);
        try {
            cfg.solver.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("solver: ") + e.what());
        }
    }

    if (root.contains("norms")) {
        const json& n = root.at("norms");
        reject_unknown(n, "norms", {"alpha", "fd_step_x", "fd_step_v", "sub_x", "sub_v", "p_list"});
        cfg.norms.alpha = get_or<double>(n, "alpha", cfg.kernel.alpha);
        cfg.norms.fd_step_x_rel = get_or<double>(n, "fd_step_x", 1e-4);
        cfg.norms.fd_step_v = get_or<double>(n, "fd_step_v", 1e-3);
        cfg.norms.sub_x = get_or<int>(n, "sub_x", 64);
        cfg.norms.sub_v = get_or<int>(n, "sub_v", 128);
        (void)get_or<std::vector<double>>(n, "p_list", {1.0, 2.0, 2.9});
    } else {
        cfg.norms.alpha = cfg.kernel.alpha;
    }

    if (root.contains("gamma_quadrature")) {
        const json& g = root.at("gamma_quadrature");
        reject_unknown(g, "gamma_quadrature", {"n_r", "n_theta", "n_phi", "sphere_n"});
        cfg.gamma_quadrature.n_r = get_or<int>(g, "n_r", 8);
        cfg.gamma_quadrature.n_theta = get_or<int>(g, "n_theta", 6);
        cfg.gamma_quadrature.n_phi = get_or<int>(g, "n_phi", 8);
        cfg.gamma_quadrature.sphere_n = get_or<int>(g, "sphere_n", 8);
    }
    cfg.gamma_quadrature.v_max = cfg.kernel.v_max;

    if (cfg.boundary.family != BoundaryFamily::zero && cfg.boundary.beta < cfg.norms.alpha)
        throw ConfigError("boundary.beta must be >= norms.alpha (Gaussian envelope)");

    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(root.dump())));
    cfg.config_hash = buf;
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(root);
}

inline std::string config_schema() {
    json s;
    s["scenario"] = "verify_geometry|verify_kernel|verify_collision|verify_norms|contraction|"
                    "solve_linear|solve_nonlinear|full_suite (required)";
    s["seed"] = "uint64, default 1";
    s["samples"] = "int >= 1, default 10000 (verification suites)";
    s["output_dir"] = "string, default \".\"";
    s["domain"] = {{"kind", "ball|ellipsoid"},
                   {"center", "[x,y,z], default [0,0,0]"},
                   {"semiaxes", "[a,b,c] with a >= b >= c > 0 (ball: all equal)"}};
    s["domains"] = "array of domain objects (contraction scenario)";
    s["boundary"] = {{"family", "zero|scaled_maxwellian|tangential_bump"},
                     {"amplitude", "double"},
                     {"beta", "double >= norms.alpha"}};
    s["kernel"] = {{"C", "double >= 0, default 1"},
                   {"gamma", "double in [0,1], default 1 (exact kernel needs 1)"},
                   {"rho", "double in [0,1), default 0"},
                   {"alpha", "double in [0,(1-rho)/2), default 0.25"},
                   {"v_max", "double > 0, default 6"}};
    s["quadrature"] = {{"n_r", 24}, {"n_theta", 16}, {"n_phi", 32}, {"sphere_n", 32},
                       {"line_panels", 4}};
    s["grid"] = {{"n_x", 200}, {"seed", 1},        {"n_v_r", 10},
                 {"n_v_theta", 6}, {"n_v_phi", 10}, {"line_panels", 2}};
    s["solver"] = {{"series_tol", 1e-8},
                   {"max_terms", 20},
                   {"max_outer", 8},
                   {"outer_tol", 1e-7},
                   {"smallness_threshold", 0.15}};
    s["norms"] = {{"alpha", "default kernel.alpha"}, {"fd_step_x", 1e-4}, {"fd_step_v", 1e-3},
                  {"sub_x", 64},                     {"sub_v", 128},      {"p_list", {1.0, 2.0, 2.9}}};
    s["gamma_quadrature"] = {{"n_r", 8}, {"n_theta", 6}, {"n_phi", 8}, {"sphere_n", 8}};
    return s.dump(2) + "\n";
}

}  // namespace ksd
