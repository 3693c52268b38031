#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ksd {

inline constexpr const char* library_version = "0.1.0";

// One verification check. `anchor` is the mathematical statement the row
// implements; `hard` rows gate the exit status, fitted-constant rows are
// informational and only require finiteness.
struct Check {
    std::string name;
    std::string anchor;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool pass = false;
    bool hard = true;
};

struct Report {
    std::string scenario;
    std::vector<Check> checks;

    // Explicit-constant inequality lhs <= rhs, tracked as max ratio.
    void add_bound(const std::string& name, const std::string& anchor, double lhs, double rhs,
                   double tol = 1e-8) {
        Check c;
        c.name = name;
        c.anchor = anchor;
        c.lhs = lhs;
        c.rhs = rhs;
        c.ratio = rhs != 0.0 ? lhs / rhs : (lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        c.pass = std::isfinite(c.ratio) && c.ratio <= 1.0 + tol;
        c.hard = true;
        checks.push_back(c);
    }

    // |value - expected| <= tol * max(|expected|, floor)
    void add_match(const std::string& name, const std::string& anchor, double value, double expected,
                   double rel_tol, double abs_floor = 0.0) {
        Check c;
        c.name = name;
        c.anchor = anchor;
        c.lhs = value;
        c.rhs = expected;
        const double scale = std::max(std::abs(expected), abs_floor);
        c.ratio = scale > 0.0 ? std::abs(value - expected) / scale : std::abs(value - expected);
        c.pass = std::isfinite(value) && c.ratio <= rel_tol;
        c.hard = true;
        checks.push_back(c);
    }

    // Fitted constant: informational, passes when finite.
    void add_fitted(const std::string& name, const std::string& anchor, double fitted) {
        Check c;
        c.name = name;
        c.anchor = anchor;
        c.lhs = fitted;
        c.rhs = 0.0;
        c.ratio = fitted;
        c.pass = std::isfinite(fitted);
        c.hard = false;
        checks.push_back(c);
    }

    void add(const Check& c) { checks.push_back(c); }

    void merge(const Report& other) {
        for (const auto& c : other.checks) checks.push_back(c);
    }

    bool all_hard_passed() const {
        for (const auto& c : checks)
            if (c.hard && !c.pass) return false;
        return true;
    }

    std::vector<std::string> failing() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (c.hard && !c.pass) out.push_back(c.name);
        return out;
    }
};

}  // namespace ksd
