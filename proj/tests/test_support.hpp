#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "dwc/wave_solver.hpp"

namespace dwc::test_util {

inline Eigen::VectorXd random_field(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

inline StatePair random_state(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return {random_field(n, rng), random_field(n, rng)};
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace dwc::test_util
