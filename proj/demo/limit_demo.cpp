// Distributed HUM controls on shrinking windows next to the boundary control they approach.

#include <cmath>
#include <cstdio>

#include "dwc/limit_analysis.hpp"

int main(int argc, char** argv) {
    using namespace dwc;
    const double alpha = argc > 1 ? std::atof(argv[1]) : 0.5;
    const int N = argc > 2 ? std::atoi(argv[2]) : 60;
    const auto op = build_operator(alpha, default_regime(alpha), N);
    const TimeGrid tg = TimeGrid::covering(1.2 * minimal_time(alpha), default_dt(op));
    const double pi = std::acos(-1.0);
    const StatePair target{op.sample([&](double x) { return std::sin(pi * x); }), Eigen::VectorXd::Zero(op.dofs())};

    const LimitDiagnostics d = run_limit_sweep(op, target, tg, {0.4, 0.3, 0.2, 0.1});
    std::printf("%6s %12s %12s %12s\n", "eps", "scaled_cost", "h_step", "terminal");
    for (const auto& e : d.entries)
        std::printf("%6.2f %12.4e %12.4e %12.4e\n", e.epsilon, e.scaled_cost, e.h_step, e.terminal_weak);
    std::printf("|h - boundary HUM| = %.3e, |h| = %.3e\n", d.h_boundary_distance, l2_time(d.h_extracted, tg.dt()));
}
