#include "helpers.hpp"

#include "simspec/embeddings.hpp"
#include "simspec/lb_operator.hpp"
#include "simspec/rng.hpp"
#include "simspec/shapes.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <numeric>

using namespace simspec;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    CounterRng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

/// n points on a unit circle placed in a random plane of R^100.
Eigen::MatrixXd circle_in_100d(int n) {
    const Eigen::MatrixXd frame = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(100, 2, 5))
                                      .householderQ() * Eigen::MatrixXd::Identity(100, 2);
    Eigen::MatrixXd planar(n, 2);
    for (int i = 0; i < n; ++i) {
        const double t = 2 * M_PI * i / n;
        planar.row(i) << std::cos(t), std::sin(t);
    }
    return planar * frame.transpose();
}

Eigen::MatrixXd two_blobs() {
    Eigen::MatrixXd p = 0.1 * random_matrix(40, 3, 9);
    p.topRows(20).col(0).array() += 5.0;
    return p;
}

} // namespace

TEST_CASE("diffusion maps recover the cyclic order of a circle") {
    const int n = 60;
    const Embedding e = diffusion_maps(circle_in_100d(n), 2);
    CHECK(e.size() == n);
    CHECK(e.dim() == 2);
    CHECK(e.method == "diffusion_maps");
    CHECK(e.eigenvalues(0) == doctest::Approx(e.eigenvalues(1)).epsilon(1e-6));

    // Consecutive angle steps all share one sign and add up to one full turn.
    double total = 0;
    int sign = 0;
    for (int i = 0; i < n; ++i) {
        const int k = (i + 1) % n;
        double step = std::atan2(e.points(k, 1), e.points(k, 0)) - std::atan2(e.points(i, 1), e.points(i, 0));
        step = std::remainder(step, 2 * M_PI);
        const int s = step > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        CHECK(s == sign);
        total += step;
    }
    CHECK(std::abs(total) == doctest::Approx(2 * M_PI));
}

TEST_CASE("diffusion maps respect duplicates and row permutations") {
    Eigen::MatrixXd data = random_matrix(30, 4, 21);
    data.row(7) = data.row(3);
    const Embedding e = diffusion_maps(data, 3);
    CHECK((e.points.row(7) - e.points.row(3)).norm() < 1e-12);

    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    Eigen::MatrixXd permuted(30, 4);
    for (int i = 0; i < 30; ++i) permuted.row(i) = data.row(perm[i]);
    const Embedding p = diffusion_maps(permuted, 3);
    CHECK((p.eigenvalues - e.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
    for (int c = 0; c < 3; ++c) {
        // Columns agree up to the sign convention.
        double same = 0, flipped = 0;
        for (int i = 0; i < 30; ++i) {
            same = std::max(same, std::abs(p.points(i, c) - e.points(perm[i], c)));
            flipped = std::max(flipped, std::abs(p.points(i, c) + e.points(perm[i], c)));
        }
        CHECK(std::min(same, flipped) < 1e-9);
    }
}

TEST_CASE("diffusion map input checks") {
    CHECK_ERROR_CODE(diffusion_maps(Eigen::MatrixXd::Ones(10, 3), 2), ErrorCode::EpsilonTooSmall);
    CHECK_ERROR_CODE(diffusion_maps(two_blobs(), 2, {1e-4, 1.0}), ErrorCode::EpsilonTooSmall);
    CHECK_ERROR_CODE(diffusion_maps(random_matrix(3, 2, 1), 2), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(diffusion_maps(random_matrix(10, 2, 1), 2, {std::nullopt, 2.0}),
                     ErrorCode::InvalidArgument);
}

TEST_CASE("PCA of rank-2 data") {
    const Eigen::MatrixXd data = random_matrix(50, 2, 3) * random_matrix(2, 7, 4);
    const PcaResult r = pca(data, 3);
    CHECK(r.explained_ratio.head(2).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.embedding.points.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.components.transpose() * r.components - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((pca_reconstruct(r, 2) - data).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(centered).singularValues();
    CHECK((r.singular_values.head(2) - sv.head(2)).cwiseAbs().maxCoeff() < 1e-9 * sv(0));

    const PcaResult shifted = pca(data.rowwise() + Eigen::RowVectorXd::Constant(7, 3.0), 2);
    CHECK((shifted.embedding.points - r.embedding.points.leftCols(2)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_ERROR_CODE(pca(data, 8), ErrorCode::InvalidArgument);
}

TEST_CASE("Procrustes alignment") {
    const Eigen::MatrixXd ref = random_matrix(25, 3, 13);
    Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
    reflect(1, 1) = -1;
    const Eigen::MatrixXd moved =
        (2.5 * ref * reflect).rowwise() + Eigen::RowVector3d(1, 2, 3);
    const ProcrustesResult r = procrustes(ref, moved);
    CHECK(r.rms < 1e-12);
    CHECK(r.scale == doctest::Approx(0.4));
    CHECK(diameter(r.aligned) == doctest::Approx(diameter(ref)));
    CHECK_ERROR_CODE(procrustes(ref, ref.topRows(5)), ErrorCode::LengthMismatch);
}

TEST_CASE("clustering helpers") {
    const Eigen::MatrixXd p = two_blobs();
    const std::vector<int> labels = two_means(p);
    for (int i = 1; i < 20; ++i) CHECK(labels[i] == labels[0]);
    for (int i = 21; i < 40; ++i) CHECK(labels[i] == labels[20]);
    CHECK(labels[0] != labels[20]);
    CHECK(silhouette(p, labels) > 0.9);

    std::vector<int> mixed(40);
    for (int i = 0; i < 40; ++i) mixed[i] = i % 2;
    CHECK(silhouette(p, mixed) < 0.1);
    CHECK_ERROR_CODE(silhouette(p, std::vector<int>(40, 0)), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(silhouette(p, {0, 1}), ErrorCode::LengthMismatch);
}

TEST_CASE("coefficient features and trajectory export") {
    CoefficientSet c;
    c.n_sims = 2;
    c.n_steps = 3;
    c.channels = {"x", "y", "z"};
    c.alpha.resize(18, 4);
    for (Eigen::Index r = 0; r < 18; ++r)
        for (Eigen::Index j = 0; j < 4; ++j) c.alpha(r, j) = 100 * r + j;

    std::vector<std::pair<int, int>> items;
    const Eigen::MatrixXd f = coefficient_features(c, {"z", "x"}, 1, 3, &items);
    CHECK(f.rows() == 6);
    CHECK(f.cols() == 4);
    CHECK(items[4] == std::pair{1, 1});
    CHECK(f(4, 0) == c.alpha(c.row_index(1, 1, 2), 1));
    CHECK(f(4, 3) == c.alpha(c.row_index(1, 1, 0), 2));
    CHECK_ERROR_CODE(coefficient_features(c, {"x"}, 2, 5), ErrorCode::InvalidArgument);

    const auto rows = time_trajectory_export(c, 2);
    REQUIRE(rows.size() == 6);
    CHECK(rows[5].sim == 1);
    CHECK(rows[5].step == 2);
    CHECK(rows[5].step_color == 1.0);
    CHECK(rows[1].step_color == 0.5);
    CHECK(rows[5].alpha_y == c.alpha(c.row_index(1, 2, 1), 2));
    const std::string csv = trajectory_csv(rows);
    CHECK(csv.rfind("sim,step,alpha_x,alpha_y,alpha_z,step_color\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("mode morphing") {
    const TriMesh m = shapes::icosphere(1);
    const SpectralBasis b = decompose(assemble_lb(m, default_lb_params(m)),
                                      static_cast<int>(m.n_vertices()), Solver::Dense);
    Eigen::MatrixXd alpha(b.size(), 3);
    for (int c = 0; c < 3; ++c) alpha.col(c) = project(b, Eigen::VectorXd(m.vertices.col(c)));

    const Eigen::Vector3d own = alpha.row(0).transpose();
    const double shift = std::sqrt(static_cast<double>(m.n_vertices()));
    const auto frames = mode_morph(b, alpha, 0, {own, own + Eigen::Vector3d(shift, 0, 0)});
    REQUIRE(frames.size() == 2);
    CHECK((frames[0] - m.vertices).cwiseAbs().maxCoeff() < 1e-12);
    // The trivial mode is constant, so its x coefficient translates the shape.
    const Points delta = frames[1] - frames[0];
    CHECK((delta.col(0).array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(delta.rightCols(2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rigid_fit_residual(frames[0], frames[1]) < 1e-12);

    const auto bent = mode_morph(b, alpha, 5, {Eigen::Vector3d(1, 1, 1)});
    CHECK(rigid_fit_residual(m.vertices, bent[0]) > 1e-3);
    CHECK_ERROR_CODE(mode_morph(b, alpha, static_cast<int>(b.size()), {own}), ErrorCode::IndexOutOfRange);
    CHECK_ERROR_CODE(mode_morph(b, alpha.leftCols(2), 0, {own}), ErrorCode::BasisMismatch);
}
