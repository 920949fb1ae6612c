#pragma once

#include "simspec/mesh.hpp"
#include "simspec/operator.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace simspec {

/// Per-vertex local covariance C_k of the simulation cloud (a stand-in for
/// J J^T up to a global scale) and its truncated pseudo-inverse.
struct LocalJacobianField {
    std::vector<Eigen::Matrix3d> jjt;
    std::vector<Eigen::Matrix3d> jjt_inv;
    std::vector<int> rank;

    std::size_t size() const { return jjt.size(); }

    /// Field from known J J^T matrices (pseudo-inverted with the same rule).
    static LocalJacobianField from_jjt(std::vector<Eigen::Matrix3d> jjt);
};

/// Relative singular-value cutoff for the pseudo-inverse.
inline constexpr double kPseudoInverseTolerance = 1e-8;

Eigen::Matrix3d pseudo_inverse_sym(const Eigen::Matrix3d& m, int* rank = nullptr,
                                   double tolerance = kPseudoInverseTolerance);

/// Sample covariance (denominator m - 1) of each vertex's positions across
/// simulations at `step`. Vertices whose cloud has rank 0 get a zero inverse
/// and a single aggregated DegenerateCloud warning.
LocalJacobianField estimate_local_jacobians(const SimulationBundle& bundle, int step,
                                            unsigned threads = 0);

enum class NicaVariant {
    /// 2 d^T [JJ^T_k + JJ^T_l]^+ d
    InverseOfSum,
    /// 1/2 d^T [(JJ^T_k)^+ + (JJ^T_l)^+] d
    SumOfInverses,
};

double nica_distance(const LocalJacobianField& field, const Eigen::Vector3d& eta_k,
                     const Eigen::Vector3d& eta_l, int k, int l,
                     NicaVariant variant = NicaVariant::SumOfInverses);

struct FpParams {
    /// Kernel bandwidth; median of the nonzero pairwise squared distances if unset.
    std::optional<double> epsilon;
    NicaVariant variant = NicaVariant::SumOfInverses;
    /// Simulation whose positions at the step serve as reference; -1 = bundle mean.
    int reference_sim = 0;
    /// Keep only the k nearest (by NICA distance) kernel entries per row,
    /// symmetrized by union. 0 keeps the dense kernel.
    int knn = 0;
};

/// Symmetric form W_s = D_d^{-1/2} W_d D_d^{-1/2} of the density-normalized
/// kernel, with D_d. Eigenvectors of the row-stochastic W_rs = D_d^{-1} W_d are
/// D_d^{-1/2} times eigenvectors of W_s, and the two share eigenvalues.
struct FpOperatorPair {
    SymmetricOperator ws;
    Eigen::VectorXd d_d;
    double epsilon = 0;
};

/// Squared NICA distances between all vertex pairs at the reference positions.
Eigen::MatrixXd nica_distance_matrix(const LocalJacobianField& field, const Points& reference,
                                     NicaVariant variant, unsigned threads = 0);

FpOperatorPair assemble_fp(const SimulationBundle& bundle, int step, const FpParams& params,
                           unsigned threads = 0);

/// Same construction from a precomputed field and reference positions.
FpOperatorPair assemble_fp(const LocalJacobianField& field, const Points& reference,
                           const FpParams& params, unsigned threads = 0);

/// Dense W_rs = D_d^{-1/2} W_s D_d^{1/2}.
Eigen::MatrixXd row_stochastic_matrix(const FpOperatorPair& pair);

} // namespace simspec
