#include "helpers.hpp"

#include "simspec/lb_operator.hpp"
#include "simspec/shapes.hpp"
#include "simspec/spectral.hpp"
#include "simspec/synthetic.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace simspec;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

} // namespace

TEST_CASE("kernel matrix structure on a sphere") {
    const TriMesh m = shapes::icosphere(2);
    const SymmetricOperator op = assemble_lb(m, default_lb_params(m));
    const Eigen::MatrixXd w = dense(op.weights);

    CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(w.minCoeff() >= 0.0);
    CHECK(w.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((w.rowwise().sum() - op.degree).cwiseAbs().maxCoeff() < 1e-14 * op.degree.maxCoeff());

    const Eigen::MatrixXd lap = dense(op.laplacian());
    CHECK((lap * Eigen::VectorXd::Ones(lap.rows())).cwiseAbs().maxCoeff() < 1e-14 * op.degree.maxCoeff());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lap).eigenvalues();
    CHECK(ev.minCoeff() > -1e-12 * ev.maxCoeff());
}

TEST_CASE("kernel radius checks") {
    const TriMesh m = shapes::icosphere(1);
    LbParams p = default_lb_params(m);
    CHECK(p.radius() == doctest::Approx(p.rho * std::sqrt(p.h)));
    p.h = 1e-6;
    CHECK_ERROR_CODE(assemble_lb(m, p), ErrorCode::RadiusTooSmall);
    p.h = -1.0;
    CHECK_ERROR_CODE(assemble_lb(m, p), ErrorCode::InvalidArgument);
}

TEST_CASE("pointwise operator annihilates constants and flat linear functions") {
    const TriMesh m = shapes::grid(1.0, 1.0, 40, 40);
    LbParams p;
    p.h = std::pow(mean_edge_length(m.vertices, m.faces), 1.0);
    p.rho = 4.0;
    const SymmetricOperator op = assemble_lb(m, p);

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_vertices());
    CHECK(apply_pointwise(op, m.vertex_area, ones).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::VectorXd f = m.vertices.col(0) + 0.5 * m.vertices.col(1);
    const Eigen::VectorXd g = apply_pointwise(op, m.vertex_area, f);
    const double margin = p.radius();
    double interior = 0, boundary = 0;
    for (Eigen::Index k = 0; k < m.n_vertices(); ++k) {
        const double x = m.vertices(k, 0), y = m.vertices(k, 1);
        const bool inside = x > margin && x < 1 - margin && y > margin && y < 1 - margin;
        double& slot = inside ? interior : boundary;
        slot = std::max(slot, std::abs(g(k)));
    }
    CHECK(interior < 0.05 * boundary);
    CHECK_ERROR_CODE(apply_pointwise(op, m.vertex_area, Eigen::VectorXd::Ones(3)), ErrorCode::LengthMismatch);
}

TEST_CASE("convergence probe") {
    // Symmetric interior stencils reproduce harmonic linear functions exactly.
    const auto flat = lb_convergence_probe(AnalyticSurface::FlatPatch, {2, 3}, {4.0, 2.0, 3.0});
    REQUIRE(flat.size() == 2);
    for (const auto& row : flat) {
        CHECK(row.n_evaluated > 0);
        CHECK(row.sup_error < 1e-10);
    }
    CHECK(flat[1].h < flat[0].h);

    const auto sphere = lb_convergence_probe(AnalyticSurface::Sphere, {1, 2, 3});
    REQUIRE(sphere.size() == 3);
    CHECK(sphere[0].n_vertices == 42);
    CHECK(sphere[2].n_evaluated == sphere[2].n_vertices);
    CHECK(sphere[2].sup_error < sphere[1].sup_error);
}

TEST_CASE("one-sided weighting stays symmetric with zero row sums") {
    const TriMesh m = shapes::icosphere(2);
    LbParams p = default_lb_params(m);
    p.weighting = LbWeighting::OneSided;
    const SymmetricOperator op = assemble_lb(m, p);
    const Eigen::MatrixXd w = dense(op.weights);
    CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((dense(op.laplacian()).rowwise().sum()).cwiseAbs().maxCoeff() < 1e-14 * op.degree.maxCoeff());
}

TEST_CASE("low spectrum is stable under a near-isometric bend") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::IsometricBend;
    spec.n_sims = 1;
    spec.strip_nx = 40;
    spec.strip_ny = 10;
    spec.min_bend_angle = spec.max_bend_angle = 1.5;
    const GeneratedBundle g = gen_isometric_bend(spec);
    const TriMesh flat = g.bundle.mesh();
    const TriMesh bent = with_positions(flat, g.bundle.frame(0, 0));

    const LbParams p = default_lb_params(flat);
    const SpectralBasis a = decompose(assemble_lb(flat, p), 8, Solver::Dense);
    const SpectralBasis b = decompose(assemble_lb(bent, p), 8, Solver::Dense);
    for (int j = 1; j < 8; ++j) CHECK(std::abs(b.eigenvalues(j) / a.eigenvalues(j) - 1) < 0.05);
}
