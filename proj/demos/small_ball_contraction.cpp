// Picard-term decay of the linear solve on a family of shrinking balls:
// prints the even-index term ratios and the residual for each radius.

#include <cstdio>

#include "ksd/solver.hpp"

int main() {
    using namespace ksd;
    const KernelParams params(CrossSection(1.0, 1.0), 0.0, 0.25);
    const BoundaryData g = BoundaryData::scaled_maxwellian(0.01, 0.25);

    GridConfig gc;
    gc.n_x = 96;
    gc.n_v_r = 8;
    gc.n_v_theta = 6;
    gc.n_v_phi = 8;

    for (double r0 : {0.1, 0.05, 0.025}) {
        PhaseGrid grid(Domain::ball(r0), gc);
        KernelOperator K(grid, params);
        NormConfig nc;
        nc.alpha = params.alpha;
        NormWorkspace norms(grid, nc);
        LinearSolveInputs in{&grid, &params, &K, &norms, SolverConfig{}};
        auto [f, hist] = solve_linear(g, nullptr, in);
        std::printf("r0 = %-6g terms = %zu residual = %.3e\n", r0, hist.term_sup.size(),
                    hist.residual);
        for (std::size_t i = 2; i < hist.term_sup.size(); ++i) {
            if (hist.term_sup[i - 2] > 0.0)
                std::printf("  |term_%zu| / |term_%zu| = %.4f\n", i, i - 2,
                            hist.term_sup[i] / hist.term_sup[i - 2]);
        }
    }
    return 0;
}
