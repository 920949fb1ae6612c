#pragma once

#include "simspec/fp_operator.hpp"
#include "simspec/mesh.hpp"
#include "simspec/operator.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace simspec {

/// Truncated eigenbasis of an operator.
///
/// Laplace-Beltrami: eigenvalues of D - W ascending from 0, columns orthonormal
/// in the plain Euclidean inner product.
///
/// Fokker-Planck: eigenvalues of the row-stochastic W_rs descending from 1;
/// columns are W_rs eigenvectors D_d^{-1/2} psi_s, orthonormal in the
/// D_d-weighted inner product <f, g> = f^T D_d g. `weight` holds D_d.
///
/// Index 0 is the trivial (constant) mode in both cases. Each column's first
/// entry of largest magnitude is positive.
struct SpectralBasis {
    OperatorKind kind = OperatorKind::LaplaceBeltrami;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    std::optional<Eigen::VectorXd> weight;
    std::map<std::string, double> params;

    Eigen::Index dimension() const { return eigenvectors.rows(); }
    Eigen::Index size() const { return eigenvectors.cols(); }

    /// <a, b> under the basis inner product.
    double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    double norm(const Eigen::VectorXd& f) const { return std::sqrt(inner(f, f)); }
};

enum class Solver { Auto, Dense, Lanczos };

/// Dense is used for Auto up to this many vertices.
inline constexpr Eigen::Index kDenseSolverLimit = 3000;

Solver solver_from_string(const std::string& text);

/// p smallest eigenpairs of the Laplace-Beltrami operator D - W. The Lanczos
/// route runs shift-invert iterations on (D - W + delta I)^{-1}.
SpectralBasis decompose(const SymmetricOperator& op, int p, Solver solver = Solver::Auto);

/// p leading eigenpairs of W_rs via the symmetric W_s.
SpectralBasis decompose(const FpOperatorPair& pair, int p, Solver solver = Solver::Auto);

/// Flips each column so its first entry of largest magnitude is positive.
void fix_signs(Eigen::MatrixXd& vectors);

/// max_{ij} |psi_i^T M psi_j - delta_ij|.
double orthonormality_error(const SpectralBasis& basis);

/// Per-vector ||L psi_j - lambda_j psi_j|| for L = D - W.
Eigen::VectorXd eigen_residuals(const SymmetricOperator& op, const SpectralBasis& basis);
/// Per-vector ||W_rs psi_j - lambda_j psi_j||.
Eigen::VectorXd eigen_residuals(const FpOperatorPair& pair, const SpectralBasis& basis);

/// Half-open index ranges of eigenvalue clusters: a new cluster starts where
/// the gap to the previous value exceeds `relative_gap` times that value.
std::vector<std::pair<int, int>> eigenvalue_clusters(const Eigen::VectorXd& values,
                                                     double relative_gap = 0.05);

// -----------------------------------------------------------------------------
// Projection and reconstruction
// -----------------------------------------------------------------------------

/// alpha_j = psi_j^T M f. Throws LengthMismatch.
Eigen::VectorXd project(const SpectralBasis& basis, const Eigen::VectorXd& f);
inline Eigen::VectorXd project(const SpectralBasis& basis, const MeshFunction& f) {
    return project(basis, f.values);
}

/// sum_{j < p} alpha_j psi_j.
MeshFunction reconstruct(const SpectralBasis& basis, const Eigen::VectorXd& alpha, int p);

/// ||alpha_1 - alpha_2||_2. Throws BasisMismatch on length mismatch.
double parseval_distance(const Eigen::VectorXd& alpha_1, const Eigen::VectorXd& alpha_2);

/// Coefficients for every (sim, step, channel); rows are ordered
/// ((sim * n_steps + step) * n_channels + channel), columns by eigen index.
struct CoefficientSet {
    int n_sims = 0;
    int n_steps = 0;
    std::vector<std::string> channels;
    Eigen::MatrixXd alpha;

    Eigen::Index n_coeffs() const { return alpha.cols(); }
    Eigen::Index row_index(int sim, int step, int channel) const;
    Eigen::VectorXd at(int sim, int step, int channel) const;
    int channel_index(const std::string& name) const;
};

/// Projects every frame's channels onto the first p basis vectors (all if p < 0).
CoefficientSet project_bundle(const SpectralBasis& basis, const SimulationBundle& bundle,
                              const std::vector<Channel>& channels, int p = -1,
                              unsigned threads = 0);

// -----------------------------------------------------------------------------
// Decay statistics
// -----------------------------------------------------------------------------

struct ChannelDecay {
    std::string channel;
    Eigen::VectorXd max_abs;  ///< max |alpha_j| over simulations and steps
    Eigen::VectorXd variance; ///< sample variance over simulations, averaged over steps
    Eigen::VectorXd energy;   ///< sum of alpha_j^2 over simulations and steps
    /// Least-squares slope of log max|alpha_j| against log j over j >= 1.
    double loglog_slope = 0;
};

struct DecayReport {
    std::vector<ChannelDecay> channels;
    /// Smallest p whose leading coefficients hold `energy_fraction` of the
    /// total squared mass over all channels.
    int threshold_p = 0;
    double energy_fraction = 0.99;
};

DecayReport decay_report(const CoefficientSet& coeffs, double energy_fraction = 0.99);

// -----------------------------------------------------------------------------
// Files
// -----------------------------------------------------------------------------

/// eigenvalues.csv, eigenvectors.bin (row-major N x p float64), basis.json and,
/// for Fokker-Planck bases, weight.bin plus degree.csv.
void save_basis(const SpectralBasis& basis, const std::filesystem::path& directory);
SpectralBasis load_basis(const std::filesystem::path& directory);

/// Header "sim,step,channel,j,alpha".
void save_coefficients_csv(const CoefficientSet& coeffs, const std::filesystem::path& path);
CoefficientSet load_coefficients_csv(const std::filesystem::path& path);

} // namespace simspec
