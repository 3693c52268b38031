#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ksd/config.hpp"
#include "ksd/suites.hpp"

namespace ksd {

inline void emit_convergence_csv(const IterationHistory& hist, const std::string& path) {
    if (hist.term_sup.empty() && hist.outer_diff.empty())
        throw std::invalid_argument("emit_convergence_csv: empty history");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_convergence_csv: cannot write " + path);
    out << "index,term_norm_sup,term_norm_full,diff_norm,ratio\n";
    char buf[512];
    if (!hist.outer_diff.empty()) {
        for (std::size_t i = 0; i < hist.outer_diff.size(); ++i) {
            const double ratio = i >= 1 && hist.outer_diff[i - 1] > 0.0
                                     ? hist.outer_diff[i] / hist.outer_diff[i - 1]
                                     : 0.0;
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", i,
                          hist.outer_norm[i], hist.outer_norm[i], hist.outer_diff[i], ratio);
            out << buf;
        }
    } else {
        for (std::size_t i = 0; i < hist.term_sup.size(); ++i) {
            const double ratio =
                i >= 2 && hist.term_sup[i - 2] > 0.0 ? hist.term_sup[i] / hist.term_sup[i - 2] : 0.0;
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", i, hist.term_sup[i],
                          hist.term_full[i], 0.0, ratio);
            out << buf;
        }
    }
}

inline json report_to_json(const Report& rep, const RunConfig& cfg,
                           const std::vector<std::string>& artifacts) {
    json j;
    j["version"] = library_version;
    j["config_hash"] = cfg.config_hash;
    j["scenario"] = scenario_name(cfg.scenario);
    j["seed"] = cfg.seed;
    j["passed"] = rep.all_hard_passed();
    int hard = 0, failed = 0;
    json checks = json::array();
    for (const Check& c : rep.checks) {
        json e;
        e["name"] = c.name;
        e["anchor"] = c.anchor;
        e["lhs"] = c.lhs;
        e["rhs"] = c.rhs;
        e["ratio"] = c.ratio;
        e["pass"] = c.pass;
        e["hard"] = c.hard;
        checks.push_back(e);
        if (c.hard) {
            ++hard;
            if (!c.pass) ++failed;
        }
    }
    j["counts"] = {{"checks", rep.checks.size()}, {"hard", hard}, {"failed", failed}};
    j["checks"] = checks;
    j["artifacts"] = artifacts;
    return j;
}

// Scenario execution: builds the report and CSV artifacts for the configured
// scenario, writes report.json, returns the process exit code.
inline int run_scenario(const RunConfig& cfg, bool verbose = false) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    Report rep;
    std::vector<std::string> artifacts;

    auto solver_inputs = [&](const PhaseGrid& grid, const KernelOperator& K,
                             const NormWorkspace& norms) {
        LinearSolveInputs in;
        in.grid = &grid;
        in.params = &cfg.kernel;
        in.K = &K;
        in.norms = &norms;
        in.config = cfg.solver;
        return in;
    };

    auto add_solve_rows = [&](const IterationHistory& hist, const SmallnessReport& sm,
                              const char* prefix) {
        rep.add_fitted(std::string(prefix) + "/smallness-diam", "diam(domain)", sm.diam);
        rep.add_fitted(std::string(prefix) + "/smallness-geom", "sqrt(R r)(1 + R/r)", sm.geom);
        rep.add_fitted(std::string(prefix) + "/smallness-boundary", "||Jg||_{inf,a}", sm.jg_norm);
        rep.add_fitted(std::string(prefix) + "/smallness-max", "max of the three", sm.max_of_three);
        rep.add_bound(std::string(prefix) + "/residual",
                      "residual of f = Jg + S K f + S phi <= 10x quadrature error estimate",
                      hist.residual, 10.0 * std::max(hist.quad_error_estimate, 1e-300), 1e-9);
    };

    switch (cfg.scenario) {
        case Scenario::verify_geometry:
            rep = geometry_suite(cfg.domain, cfg.samples, cfg.seed);
            break;
        case Scenario::verify_kernel:
            rep = kernel_suite(cfg.kernel, cfg.samples, cfg.seed);
            break;
        case Scenario::verify_collision:
            rep = collision_suite(cfg.kernel.cross_section, cfg.samples, cfg.seed);
            break;
        case Scenario::verify_norms:
            rep = norms_suite(cfg.domain, cfg.norms.alpha);
            break;
        case Scenario::contraction: {
            std::vector<Domain> domains = cfg.domains;
            if (domains.empty())
                throw ConfigError("contraction scenario requires \"domains\" (>= 2 entries)");
            ContractionResult res = contraction_report(domains, cfg.boundary, cfg.grid, cfg.kernel,
                                                       cfg.quadrature.n_r, cfg.quadrature.n_theta,
                                                       cfg.quadrature.n_phi);
            rep = res.report;
            const std::string csv = (fs::path(cfg.output_dir) / "ratio_vs_diam.csv").string();
            std::ofstream out(csv);
            out << "diam,ratio,ratio_over_diam\n";
            char buf[256];
            for (const auto& row : res.rows) {
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", row.diam, row.ratio,
                              row.ratio / row.diam);
                out << buf;
            }
            artifacts.push_back("ratio_vs_diam.csv");
            break;
        }
        case Scenario::solve_linear: {
            PhaseGrid grid(cfg.domain, cfg.grid);
            KernelOperator K(grid, cfg.kernel, cfg.quadrature.n_r, cfg.quadrature.n_theta,
                             cfg.quadrature.n_phi);
            NormWorkspace norms(grid, cfg.norms);
            auto [f, hist] = solve_linear(cfg.boundary, nullptr, solver_inputs(grid, K, norms));
            rep.scenario = "solve_linear";
            const SmallnessReport sm = smallness_report(grid, cfg.boundary, cfg.kernel, norms);
            add_solve_rows(hist, sm, "solve_linear");
            Check trunc;
            trunc.name = "solve_linear/series-truncated";
            trunc.anchor = "||term||_{inf,a} < series_tol within max_terms";
            trunc.lhs = static_cast<double>(hist.term_full.size());
            trunc.rhs = static_cast<double>(cfg.solver.max_terms);
            trunc.ratio = trunc.lhs / trunc.rhs;
            trunc.pass = !hist.truncated;
            trunc.hard = true;
            rep.add(trunc);
            const std::string csv = (fs::path(cfg.output_dir) / "series_terms.csv").string();
            emit_convergence_csv(hist, csv);
            artifacts.push_back("series_terms.csv");
            break;
        }
        case Scenario::solve_nonlinear: {
            PhaseGrid grid(cfg.domain, cfg.grid);
            KernelOperator K(grid, cfg.kernel, cfg.quadrature.n_r, cfg.quadrature.n_theta,
                             cfg.quadrature.n_phi);
            NormWorkspace norms(grid, cfg.norms);
            auto [f, hist] =
                solve_nonlinear(cfg.boundary, solver_inputs(grid, K, norms), cfg.gamma_quadrature);
            rep.scenario = "solve_nonlinear";
            const SmallnessReport sm = smallness_report(grid, cfg.boundary, cfg.kernel, norms);
            add_solve_rows(hist, sm, "solve_nonlinear");
            double worst_ratio = 0.0;
            for (std::size_t i = 2; i < hist.outer_diff.size(); ++i)
                if (hist.outer_diff[i - 1] > 0.0)
                    worst_ratio = std::max(worst_ratio, hist.outer_diff[i] / hist.outer_diff[i - 1]);
            Check decay;
            decay.name = "solve_nonlinear/outer-geometric-decay";
            decay.anchor = "||f_{i+1}-f_i|| <= 0.6 ||f_i-f_{i-1}|| from step 2 on";
            decay.lhs = worst_ratio;
            decay.rhs = 0.6;
            decay.ratio = worst_ratio / 0.6;
            decay.pass = worst_ratio <= 0.6 || hist.smallness_warning;
            decay.hard = !hist.smallness_warning;
            rep.add(decay);
            double nmin = 1e300, nmax = 0.0;
            for (double n : hist.outer_norm) {
                if (n > 0.0) nmin = std::min(nmin, n);
                nmax = std::max(nmax, n);
            }
            Check bounded;
            bounded.name = "solve_nonlinear/uniform-bound";
            bounded.anchor = "max_i ||f_i|| / min_i ||f_i|| <= 3";
            bounded.lhs = nmax;
            bounded.rhs = 3.0 * nmin;
            bounded.ratio = nmin > 0.0 ? nmax / (3.0 * nmin) : 0.0;
            bounded.pass = nmin > 0.0 ? nmax <= 3.0 * nmin : true;
            bounded.hard = !hist.smallness_warning;
            rep.add(bounded);
            const std::string csv = (fs::path(cfg.output_dir) / "outer_iterations.csv").string();
            emit_convergence_csv(hist, csv);
            artifacts.push_back("outer_iterations.csv");
            break;
        }
        case Scenario::full_suite: {
            rep = geometry_suite(cfg.domain, cfg.samples, cfg.seed);
            rep.merge(kernel_suite(cfg.kernel, cfg.samples, cfg.seed));
            rep.merge(collision_suite(cfg.kernel.cross_section, cfg.samples, cfg.seed));
            rep.merge(norms_suite(cfg.domain, cfg.norms.alpha));
            rep.scenario = "full_suite";
            break;
        }
    }
    if (rep.scenario.empty()) rep.scenario = scenario_name(cfg.scenario);

    const json out = report_to_json(rep, cfg, artifacts);
    const std::string report_path =
        (std::filesystem::path(cfg.output_dir) / "report.json").string();
    std::ofstream rf(report_path);
    if (!rf) throw std::runtime_error("cannot write " + report_path);
    rf << out.dump(2) << "\n";

    if (verbose) {
        for (const Check& c : rep.checks)
            std::cout << (c.pass ? "[ ok ] " : (c.hard ? "[FAIL] " : "[info] ")) << c.name << "  ("
                      << c.anchor << ")  lhs=" << c.lhs << " rhs=" << c.rhs << " ratio=" << c.ratio
                      << "\n";
    }
    if (!rep.all_hard_passed()) {
        std::cerr << "failed checks:\n";
        for (const std::string& name : rep.failing()) std::cerr << "  " << name << "\n";
        return 1;
    }
    return 0;
}

}  // namespace ksd
