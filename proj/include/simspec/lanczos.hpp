#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>

namespace simspec {

using LinearMap = std::function<void(const Eigen::VectorXd& in, Eigen::VectorXd& out)>;

struct LanczosOptions {
    /// Ritz pair i is accepted when |beta_m s_{m,i}| <= tolerance * |theta_i|.
    double tolerance = 1e-8;
    /// 0 means 50 * count, capped at the dimension.
    int max_iterations = 0;
    std::uint64_t seed = 0x5eed;
};

struct LanczosResult {
    Eigen::VectorXd values;  ///< descending
    Eigen::MatrixXd vectors; ///< orthonormal columns
    int iterations = 0;
};

/// Largest algebraic eigenpairs of a symmetric linear map by Lanczos with
/// full (twice-applied Gram-Schmidt) reorthogonalization. Throws
/// ConvergenceFailure when `count` pairs are not accepted within the
/// iteration limit.
LanczosResult lanczos_largest(const LinearMap& apply, Eigen::Index dimension, int count,
                              const LanczosOptions& options = {});

} // namespace simspec
