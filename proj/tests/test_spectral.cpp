#include "helpers.hpp"

#include "simspec/lb_operator.hpp"
#include "simspec/shapes.hpp"
#include "simspec/spectral.hpp"

#include <filesystem>

using namespace simspec;
namespace fs = std::filesystem;

namespace {

SymmetricOperator path_graph() {
    std::vector<Eigen::Triplet<double>> t{{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}};
    SymmetricOperator op;
    op.weights.resize(3, 3);
    op.weights.setFromTriplets(t.begin(), t.end());
    op.degree = Eigen::Vector3d(1, 2, 1);
    return op;
}

SymmetricOperator sphere_lb(int level) {
    const TriMesh m = shapes::icosphere(level);
    return assemble_lb(m, default_lb_params(m));
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("simspec_test_spectral_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("path graph Laplacian spectrum") {
    const SpectralBasis b = decompose(path_graph(), 3, Solver::Dense);
    CHECK(b.eigenvalues(0) == doctest::Approx(0.0));
    CHECK(b.eigenvalues(1) == doctest::Approx(1.0));
    CHECK(b.eigenvalues(2) == doctest::Approx(3.0));
    CHECK(orthonormality_error(b) < 1e-14);
    // Trivial mode is the positive constant.
    CHECK(b.eigenvectors.col(0).minCoeff() > 0);
    CHECK_ERROR_CODE(decompose(path_graph(), 4), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(solver_from_string("qr"), ErrorCode::InvalidArgument);
    CHECK(solver_from_string("lanczos") == Solver::Lanczos);
}

TEST_CASE("dense and Lanczos solvers agree") {
    const SymmetricOperator op = sphere_lb(3);
    const SpectralBasis d = decompose(op, 12, Solver::Dense);
    const SpectralBasis l = decompose(op, 12, Solver::Lanczos);
    const double scale = d.eigenvalues(11);
    CHECK((d.eigenvalues - l.eigenvalues).cwiseAbs().maxCoeff() < 1e-8 * scale);
    CHECK(orthonormality_error(l) < 1e-8);
    CHECK(eigen_residuals(op, l).maxCoeff() < 1e-6 * scale);
    // The trivial mode is nondegenerate, so its vectors match after the sign rule.
    CHECK((d.eigenvectors.col(0) - l.eigenvectors.col(0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("projection and reconstruction") {
    const TriMesh m = shapes::icosphere(1);
    const SymmetricOperator op = assemble_lb(m, default_lb_params(m));
    const SpectralBasis full = decompose(op, static_cast<int>(m.n_vertices()), Solver::Dense);

    const Eigen::VectorXd f = m.vertices.col(0).array().exp();
    const Eigen::VectorXd alpha = project(full, f);
    CHECK(alpha.norm() == doctest::Approx(f.norm()).epsilon(1e-12));
    CHECK((reconstruct(full, alpha, full.size()).values - f).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(reconstruct(full, alpha, 0).values.isZero());

    const Eigen::VectorXd c = Eigen::VectorXd::Constant(m.n_vertices(), 2.0);
    const Eigen::VectorXd ac = project(full, c);
    CHECK(ac.tail(ac.size() - 1).cwiseAbs().maxCoeff() < 1e-12);

    CHECK(parseval_distance(project(full, f), project(full, c)) == doctest::Approx((f - c).norm()));
    CHECK_ERROR_CODE(project(full, Eigen::VectorXd::Ones(5)), ErrorCode::LengthMismatch);
    CHECK_ERROR_CODE(parseval_distance(alpha, alpha.head(3)), ErrorCode::BasisMismatch);
    CHECK_ERROR_CODE(reconstruct(full, alpha, full.size() + 1), ErrorCode::InvalidArgument);
}

TEST_CASE("eigenvalue clusters on the sphere") {
    const SpectralBasis b = decompose(sphere_lb(3), 9, Solver::Dense);
    const auto clusters = eigenvalue_clusters(b.eigenvalues, 0.1);
    REQUIRE(clusters.size() == 3);
    CHECK(clusters[0] == std::pair{0, 1});
    CHECK(clusters[1] == std::pair{1, 4});
    CHECK(clusters[2] == std::pair{4, 9});
}

TEST_CASE("basis files round trip") {
    const fs::path dir = scratch("basis");
    SpectralBasis b = decompose(sphere_lb(1), 6, Solver::Dense);
    b.params["h"] = 0.125;
    save_basis(b, dir);
    const SpectralBasis back = load_basis(dir);
    CHECK(back.kind == b.kind);
    CHECK(back.eigenvalues == b.eigenvalues);
    CHECK(back.eigenvectors == b.eigenvectors);
    CHECK(back.params.at("h") == 0.125);
    CHECK_FALSE(back.weight.has_value());
    CHECK_ERROR_CODE(load_basis(dir / "none"), ErrorCode::IoError);

    fs::resize_file(dir / "eigenvectors.bin", 16);
    CHECK_ERROR_CODE(load_basis(dir), ErrorCode::FrameSizeMismatch);
}

TEST_CASE("bundle projection, decay statistics and coefficient files") {
    const TriMesh m = shapes::icosphere(2);
    const SpectralBasis b = decompose(assemble_lb(m, default_lb_params(m)), 10, Solver::Dense);

    std::vector<Points> frames;
    for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 2; ++t) frames.push_back(m.vertices * (1.0 + 0.1 * s + 0.01 * t));
    const SimulationBundle bundle(m, 3, 2, frames);
    const CoefficientSet coeffs = project_bundle(b, bundle, {Channel::x(), Channel::z()}, 6);
    CHECK(coeffs.alpha.rows() == 12);
    CHECK(coeffs.n_coeffs() == 6);
    CHECK(coeffs.channel_index("z") == 1);
    CHECK((coeffs.at(2, 1, 1) - project(b, frames[5].col(2)).head(6)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_ERROR_CODE(coeffs.channel_index("y"), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(coeffs.at(3, 0, 0), ErrorCode::IndexOutOfRange);

    const DecayReport report = decay_report(coeffs);
    REQUIRE(report.channels.size() == 2);
    // Coordinates live in the first non-trivial cluster, so 4 modes carry everything.
    CHECK(report.threshold_p <= 4);
    CHECK(report.channels[0].variance.maxCoeff() > 0);

    const fs::path dir = scratch("coeffs");
    save_coefficients_csv(coeffs, dir / "c.csv");
    const CoefficientSet back = load_coefficients_csv(dir / "c.csv");
    CHECK(back.channels == coeffs.channels);
    CHECK(back.alpha == coeffs.alpha);

    const TriMesh other = shapes::icosphere(1);
    const SimulationBundle wrong(other, 1, 1, {other.vertices});
    CHECK_ERROR_CODE(project_bundle(b, wrong, {Channel::x()}), ErrorCode::BasisMismatch);
}

TEST_CASE("a single simulation has zero variance") {
    const TriMesh m = shapes::icosphere(1);
    const SpectralBasis b = decompose(assemble_lb(m, default_lb_params(m)), 5, Solver::Dense);
    const SimulationBundle bundle(m, 1, 1, {m.vertices});
    const DecayReport report = decay_report(project_bundle(b, bundle, {Channel::y()}));
    CHECK(report.channels[0].variance.isZero());
    CHECK(report.channels[0].energy.sum() > 0);
}
