#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace tailnet {

struct OrthantResult {
    double value = 0.0;
    /// Three standard errors over the random lattice shifts (0 when exact).
    double error = 0.0;
    std::size_t points = 0;
};

struct OrthantOptions {
    double relTarget = 1e-3;
    double absFloor = 1e-300;
    std::size_t minPoints = 1024;
    std::size_t maxPoints = std::size_t(1) << 20;
    unsigned shifts = 16;
};

/// P(X_i > lower_i for all i) for X ~ N(0, cov).
///
/// Entries of `lower` equal to -infinity impose no constraint. Uses the
/// separation-of-variables transform with variable prioritisation, integrated
/// by a randomly shifted Richtmyer lattice rule. The shifts come from a fixed
/// internal stream, so the result is a pure function of its inputs.
OrthantResult mvn_upper_orthant(const Eigen::MatrixXd& cov, const Eigen::VectorXd& lower,
                                const OrthantOptions& options = {});

} // namespace tailnet
