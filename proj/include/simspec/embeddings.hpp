#pragma once

#include "simspec/mesh.hpp"
#include "simspec/spectral.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace simspec {

/// Low-dimensional coordinates for a set of items (rows).
struct Embedding {
    Eigen::MatrixXd points;
    /// (sim, step) per row when the rows come from a coefficient set.
    std::vector<std::pair<int, int>> items;
    std::string method;
    std::map<std::string, double> params;
    /// Eigenvalue attached to each embedding column.
    Eigen::VectorXd eigenvalues;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

/// Squared Euclidean distances between all rows.
Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& data, unsigned threads = 0);

struct DiffusionMapOptions {
    /// Gaussian bandwidth; median of the nonzero squared pairwise distances if unset.
    std::optional<double> epsilon;
    /// Density normalization exponent in [0, 1].
    double alpha = 1.0;
};

/// Diffusion map at diffusion time 1: Gaussian kernel exp(-d^2 / epsilon),
/// density normalization K_ij / (q_i q_j)^alpha, row normalization, and
/// coordinates lambda_i psi_i for the `dim` leading nontrivial eigenpairs.
/// psi is scaled so the trivial eigenvector is 1. Throws EpsilonTooSmall when
/// the kernel graph is disconnected.
Embedding diffusion_maps(const Eigen::MatrixXd& data, int dim,
                         const DiffusionMapOptions& options = {}, unsigned threads = 0);

struct PcaResult {
    Embedding embedding;               ///< scores U_k s_k
    Eigen::MatrixXd components;        ///< features x dim, orthonormal columns
    Eigen::VectorXd singular_values;   ///< all nonzero-rank values, descending
    Eigen::VectorXd explained_ratio;   ///< s_k^2 / sum s^2 for the kept columns
    Eigen::RowVectorXd mean;
};

/// PCA from the eigendecomposition of the centered second-moment matrix.
PcaResult pca(const Eigen::MatrixXd& data, int dim);

/// mean + sum_{k < p} score_k component_k^T for every row.
Eigen::MatrixXd pca_reconstruct(const PcaResult& result, int p);

struct ProcrustesResult {
    Eigen::MatrixXd aligned; ///< moving after the best similarity transform
    double scale = 1;
    double rms = 0; ///< root mean squared row distance to the reference
};

/// Best orthogonal (reflections allowed) plus uniform-scale fit of `moving`
/// onto `reference` after centering both.
ProcrustesResult procrustes(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& moving);

/// Largest pairwise row distance.
double diameter(const Eigen::MatrixXd& points);

/// Mean silhouette coefficient. Points in singleton clusters score 0.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels);

/// Deterministic 2-means: seeded with the point farthest from the centroid
/// and the point farthest from that, then Lloyd iterations.
std::vector<int> two_means(const Eigen::MatrixXd& points, int max_iterations = 100);

/// Stacks the coefficient columns [j_begin, j_end) of the given channels into
/// one feature row per (sim, step).
Eigen::MatrixXd coefficient_features(const CoefficientSet& coeffs,
                                     const std::vector<std::string>& channels, int j_begin,
                                     int j_end, std::vector<std::pair<int, int>>* items = nullptr);

struct TrajectoryRow {
    int sim = 0;
    int step = 0;
    double alpha_x = 0, alpha_y = 0, alpha_z = 0;
    /// step / (n_steps - 1), 0 for single-step bundles.
    double step_color = 0;
};

/// One row per (sim, step) of component j for the channels named in `channels`
/// (x, y, z order).
std::vector<TrajectoryRow> time_trajectory_export(const CoefficientSet& coeffs, int j,
                                                  const std::array<std::string, 3>& channels = {
                                                      "x", "y", "z"});

/// Header "sim,step,alpha_x,alpha_y,alpha_z,step_color".
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

/// Header "row,sim,step,c0,c1,...".
std::string embedding_csv(const Embedding& embedding);

/// Reconstructed positions while the (x, y, z) coefficients of component p are
/// set to each sweep value in turn; all other coefficients stay at `alpha`.
/// `alpha` holds the x, y and z coefficient vectors as its three columns.
std::vector<Points> mode_morph(const SpectralBasis& basis, const Eigen::MatrixXd& alpha,
                               int component, const std::vector<Eigen::Vector3d>& sweep);

/// Rotation + translation least-squares fit of `moving` onto `reference`;
/// returns the root mean squared vertex residual.
double rigid_fit_residual(const Points& reference, const Points& moving);

} // namespace simspec
