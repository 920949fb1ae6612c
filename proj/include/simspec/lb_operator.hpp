#pragma once

#include "simspec/mesh.hpp"
#include "simspec/operator.hpp"

#include <vector>

namespace simspec {

/// How vertex areas enter the kernel weights.
///  - Symmetric: W[k,l] = a_k a_l exp(-d^2 / 4h) / (4 pi h^2).
///  - OneSided:  row k weighted by the neighbor area a_l only; the stored
///    matrix is the symmetrized half-sum of that non-symmetric matrix.
enum class LbWeighting { Symmetric, OneSided };

struct LbParams {
    double h = 0;
    double rho = 3.0;
    LbWeighting weighting = LbWeighting::Symmetric;

    double radius() const;
};

/// h = (2 * mean edge length)^2, rho = 3: kernel support of about six edges.
LbParams default_lb_params(const TriMesh& mesh);

/// Graph-distance heat-kernel Laplacian. Row k collects every vertex within
/// graph distance rho * sqrt(h) of k; each pair's weight is taken from the
/// smaller index's row so W is exactly symmetric. Throws RadiusTooSmall when
/// some vertex has no neighbor inside the radius.
SymmetricOperator assemble_lb(const TriMesh& mesh, const LbParams& params, unsigned threads = 0);

/// (D - W) f divided by the vertex areas: the pointwise operator value,
/// approximating the positive Laplace-Beltrami operator -div grad f.
Eigen::VectorXd apply_pointwise(const SymmetricOperator& op, const Eigen::VectorXd& vertex_area,
                                const Eigen::VectorXd& f);

enum class AnalyticSurface { Sphere, FlatPatch };

struct ConvergenceRow {
    int level = 0;
    Eigen::Index n_vertices = 0;
    Eigen::Index n_evaluated = 0;
    double h = 0;
    double sup_error = 0;
};

struct ConvergenceOptions {
    /// h = scale * (mean edge)^exponent at every level. An exponent below 2
    /// lets the kernel width shrink more slowly than the mesh spacing, which
    /// keeps discretization error from dominating on fine levels.
    double scale = 1.0;
    double exponent = 1.0;
    double rho = 6.0;
};

/// Sup-norm error between the pointwise discrete operator and the analytic
/// Laplace-Beltrami operator at each refinement level.
///  - Sphere: unit icosphere of the given subdivision level, f = z, -div grad f = 2z.
///  - FlatPatch: unit square grid with 4 * 2^level cells per side,
///    f = x + 0.5 y, -div grad f = 0; only vertices farther than the kernel
///    radius from the boundary are evaluated.
std::vector<ConvergenceRow> lb_convergence_probe(AnalyticSurface surface,
                                                 const std::vector<int>& levels,
                                                 const ConvergenceOptions& options = {},
                                                 unsigned threads = 0);

} // namespace simspec
