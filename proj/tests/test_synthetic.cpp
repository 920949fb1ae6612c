#include "helpers.hpp"

#include "simspec/geodesics.hpp"
#include "simspec/synthetic.hpp"

#include <cmath>

using namespace simspec;

namespace {

Eigen::VectorXd edge_lengths(const Points& v, const Faces& f) {
    Eigen::VectorXd out(3 * f.rows());
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (int c = 0; c < 3; ++c) out(3 * i + c) = (v.row(f(i, c)) - v.row(f(i, (c + 1) % 3))).norm();
    return out;
}

GeneratorSpec strip_spec(GeneratorKind kind) {
    GeneratorSpec spec;
    spec.kind = kind;
    spec.seed = 4;
    spec.n_sims = 3;
    spec.strip_nx = 40;
    spec.strip_ny = 10;
    return spec;
}

} // namespace

TEST_CASE("generator names round trip") {
    for (auto k : {GeneratorKind::CylinderRigid, GeneratorKind::IsometricBend, GeneratorKind::NoisyIsometry,
                   GeneratorKind::LatentIto, GeneratorKind::Bifurcating})
        CHECK(generator_kind_from_string(to_string(k)) == k);
    CHECK(to_string(GeneratorKind::LatentIto) == "latent_ito");
    CHECK_ERROR_CODE(generator_kind_from_string("sphere"), ErrorCode::InvalidArgument);
    CHECK(observation_map_from_string("polynomial_warp") == ObservationMap::PolynomialWarp);
}

TEST_CASE("random rotations are proper orthogonal") {
    CounterRng rng(1);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Matrix3d r = random_rotation(rng);
        CHECK((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(r.determinant() == doctest::Approx(1.0));
    }
}

TEST_CASE("rigid cylinder motions") {
    GeneratorSpec spec;
    spec.n_sims = 4;
    spec.n_steps = 2;
    spec.cylinder_around = 16;
    spec.cylinder_along = 6;
    const GeneratedBundle g = gen_cylinder_rigid(spec);
    REQUIRE(g.motions.size() == 4);
    const Eigen::VectorXd rest = edge_lengths(g.rest, g.bundle.mesh().faces);
    for (int s = 0; s < 4; ++s) {
        const Points& frame = g.bundle.frame(s, 1);
        CHECK((edge_lengths(frame, g.bundle.mesh().faces) - rest).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(g.motions[s].translation.cwiseAbs().maxCoeff() <= spec.max_translation);
    }

    spec.max_translation = 0;
    spec.rotation_scale = 0;
    const GeneratedBundle still = gen_cylinder_rigid(spec);
    for (int s = 0; s < 4; ++s) CHECK((still.bundle.frame(s, 1) - still.rest).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("generators are deterministic in the seed") {
    for (auto kind : {GeneratorKind::CylinderRigid, GeneratorKind::NoisyIsometry, GeneratorKind::LatentIto,
                      GeneratorKind::Bifurcating}) {
        GeneratorSpec spec = strip_spec(kind);
        spec.sigma = 0.1;
        spec.n_steps = 3;
        spec.latent_nx = 6;
        spec.latent_ny = 3;
        const GeneratedBundle a = generate(spec, 1);
        const GeneratedBundle b = generate(spec, 4);
        spec.seed = 5;
        const GeneratedBundle c = generate(spec, 1);
        bool any_diff = false;
        for (int s = 0; s < spec.n_sims; ++s)
            for (int t = 0; t < spec.n_steps; ++t) {
                CHECK(a.bundle.frame(s, t) == b.bundle.frame(s, t));
                any_diff = any_diff || a.bundle.frame(s, t) != c.bundle.frame(s, t);
            }
        CHECK(any_diff);
    }
}

TEST_CASE("isometric bending") {
    GeneratorSpec spec = strip_spec(GeneratorKind::IsometricBend);
    spec.min_bend_angle = spec.max_bend_angle = 0.0;
    const GeneratedBundle flat = gen_isometric_bend(spec);
    CHECK(flat.bundle.frame(0, 0).col(2).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((flat.bundle.frame(0, 0) - flat.rest).cwiseAbs().maxCoeff() < 1e-15);

    spec = strip_spec(GeneratorKind::IsometricBend);
    spec.n_steps = 4;
    const GeneratedBundle g = gen_isometric_bend(spec);
    const TriMesh rest = g.bundle.mesh();
    for (int s = 0; s < spec.n_sims; ++s) {
        const double angle = g.bundle.label("bend_angle", s);
        CHECK(angle >= spec.min_bend_angle);
        CHECK(angle <= spec.max_bend_angle);
        // Chord between the strip ends shrinks as the bend progresses.
        double previous = 1e300;
        for (int t = 0; t < 4; ++t) {
            const Points& f = g.bundle.frame(s, t);
            const double chord = (f.row(0) - f.row(spec.strip_nx)).norm();
            CHECK(chord < previous + 1e-12);
            previous = chord;
        }
    }

    // Short paths keep their length up to the chord-versus-arc error.
    const TriMesh bent = with_positions(rest, g.bundle.frame(0, 3));
    const double radius = 6 * mean_edge_length(rest.vertices, rest.faces);
    const LocalDistanceField before = graph_distances(rest, 205, radius);
    const LocalDistanceField after = graph_distances(bent, 205, 2 * radius);
    for (const auto& e : before.neighbors)
        if (e.distance > 0) CHECK(std::abs(after.distance_to(e.vertex) / e.distance - 1) < 0.02);
}

TEST_CASE("noisy isometry") {
    GeneratorSpec spec = strip_spec(GeneratorKind::NoisyIsometry);
    const GeneratedBundle clean = gen_isometric_bend(spec);
    const GeneratedBundle zero = gen_noisy_isometry(spec);
    CHECK(zero.bundle.frame(1, 0) == clean.bundle.frame(1, 0));

    spec.sigma = 0.05;
    const GeneratedBundle noisy = gen_noisy_isometry(spec);
    const double edge = mean_edge_length(clean.rest, clean.bundle.mesh().faces);
    const Points diff = noisy.bundle.frame(1, 0) - clean.bundle.frame(1, 0);
    const double std_est = std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
    CHECK(std_est == doctest::Approx(0.05 * edge).epsilon(0.1));

    spec.sigma = -1;
    CHECK_ERROR_CODE(gen_noisy_isometry(spec), ErrorCode::InvalidArgument);
}

TEST_CASE("latent Ito bundles") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::LatentIto;
    spec.n_sims = 3;
    spec.n_steps = 4;
    spec.latent_nx = 6;
    spec.latent_ny = 3;
    spec.phi = ObservationMap::Linear;

    spec.ou_noise = 0;
    const GeneratedBundle still = gen_latent_ito(spec);
    REQUIRE(still.latent.has_value());
    CHECK(still.latent->stationary_variance == 0.0);
    CHECK(still.bundle.n_vertices() == 28);
    for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 4; ++t) CHECK(still.bundle.frame(s, t) == still.latent->vertex_latent);

    // The latent grid is centered at the origin.
    CHECK(still.latent->vertex_latent.colwise().mean().norm() < 1e-14);

    spec.ou_noise = 0.05;
    const GeneratedBundle moving = gen_latent_ito(spec);
    const Points disp = moving.bundle.frame(0, 2) - moving.latent->vertex_latent;
    CHECK(disp.col(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(disp.leftCols(2).cwiseAbs().maxCoeff() > 0.0);
    const double var = 0.05 * 0.05 * spec.dt / (1 - std::pow(1 - spec.ou_theta * spec.dt, 2));
    CHECK(moving.latent->stationary_variance == doctest::Approx(var));

    Points q(1, 3);
    q << 1.0, 2.0, 0.0;
    spec.phi = ObservationMap::PolynomialWarp;
    const Points w = observe(spec, q);
    CHECK(w(0, 0) == doctest::Approx(1.0 + 0.2 * 4.0));
    CHECK(w(0, 1) == doctest::Approx(2.0 + 0.1 * 1.0));
    CHECK(w(0, 2) == doctest::Approx(0.3 - 0.8));
}

TEST_CASE("bifurcating bundles split by branch late in time") {
    GeneratorSpec spec = strip_spec(GeneratorKind::Bifurcating);
    spec.n_sims = 6;
    spec.n_steps = 5;
    const GeneratedBundle g = gen_bifurcating(spec);
    for (int s = 0; s < 6; ++s) CHECK(g.bundle.label("branch", s) == s % 2);
    CHECK((g.bundle.frame(0, 0) - g.rest).cwiseAbs().maxCoeff() < 1e-12);

    // The branches have mirrored lifted terms, so their final shapes differ in
    // their asymmetry about the strip center.
    const Points& a = g.bundle.frame(0, 4);
    const Points& b = g.bundle.frame(1, 4);
    const Eigen::Index left = 0, right = spec.strip_nx;
    CHECK((a(right, 2) - a(left, 2)) * (b(right, 2) - b(left, 2)) < 0);
}

TEST_CASE("sidecar files") {
    GeneratorSpec spec;
    spec.n_sims = 2;
    const GeneratedBundle g = gen_cylinder_rigid(spec);
    const std::string csv = motions_csv(g.motions);
    CHECK(csv.rfind("sim,r00,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK_ERROR_CODE(generate(GeneratorSpec{.kind = GeneratorKind::CylinderRigid, .n_sims = 0}),
                     ErrorCode::InvalidArgument);
}
