#include "helpers.hpp"

#include "simspec/mesh.hpp"
#include "simspec/rng.hpp"
#include "simspec/shapes.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>

using namespace simspec;

namespace {

Points triangle_points() {
    Points v(3, 3);
    v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    return v;
}

Faces one_face() {
    Faces f(1, 3);
    f << 0, 1, 2;
    return f;
}

} // namespace

TEST_CASE("icosahedron area matches the closed form") {
    for (double s : {0.5, 1.0, 2.3}) {
        const TriMesh m = shapes::icosahedron(s);
        CHECK(m.n_vertices() == 12);
        CHECK(m.n_faces() == 20);
        CHECK(m.total_area() == doctest::Approx(20 * std::sqrt(3.0) / 4 * s * s).epsilon(1e-12));
        CHECK(mean_edge_length(m.vertices, m.faces) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("lumped areas give each vertex a third of its faces") {
    const TriMesh m = make_trimesh(triangle_points(), one_face());
    CHECK(m.total_area() == doctest::Approx(0.5));
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(m.vertex_area(k) == doctest::Approx(0.5 / 3));

    const TriMesh sphere = shapes::icosphere(2);
    CHECK(sphere.vertex_area.sum() == doctest::Approx(face_areas(sphere.vertices, sphere.faces).sum()));
    CHECK(sphere.n_vertices() == 162);
}

TEST_CASE("geometry helpers agree in float and double") {
    const TriMesh m = shapes::icosphere(1);
    const PointsT<float> vf = m.vertices.cast<float>();
    CHECK(face_areas(vf, m.faces).sum() == doctest::Approx(m.total_area()).epsilon(1e-5));
}

TEST_CASE("mesh validation errors") {
    Faces bad_index(1, 3);
    bad_index << 0, 1, 3;
    CHECK_ERROR_CODE(make_trimesh(triangle_points(), bad_index), ErrorCode::IndexOutOfRange);

    Faces repeated(1, 3);
    repeated << 0, 1, 1;
    CHECK_ERROR_CODE(make_trimesh(triangle_points(), repeated), ErrorCode::InvalidArgument);

    Points nan = triangle_points();
    nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_ERROR_CODE(make_trimesh(nan, one_face()), ErrorCode::NonFiniteValue);

    Points two(6, 3);
    two << 0, 0, 0, 1, 0, 0, 0, 1, 0, 5, 0, 0, 6, 0, 0, 5, 1, 0;
    Faces f(2, 3);
    f << 0, 1, 2, 3, 4, 5;
    CHECK_ERROR_CODE(make_trimesh(two, f), ErrorCode::DisconnectedMesh);
    CHECK(make_trimesh(two, f, {false}).n_vertices() == 6);
    CHECK(count_components(6, f) == 2);
}

TEST_CASE("degenerate and non-manifold faces are kept with a warning") {
    WarningCapture capture;
    Points v(3, 3);
    v << 0, 0, 0, 1, 0, 0, 2, 0, 0;
    const TriMesh m = make_trimesh(v, one_face());
    CHECK(m.n_faces() == 1);
    CHECK(capture.contains("degenerate"));

    Points w(5, 3);
    w << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1;
    Faces f(3, 3);
    f << 0, 1, 2, 0, 1, 3, 0, 1, 4;
    make_trimesh(w, f);
    CHECK(capture.contains("NonManifoldInput"));
}

TEST_CASE("rigid transforms preserve face areas") {
    const TriMesh m = shapes::icosphere(2);
    CounterRng rng(3);
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    const Points moved = rigid_transform(m.vertices, q.toRotationMatrix(),
                                         Eigen::RowVector3d(1, -2, 3), Eigen::RowVector3d(0.5, 0, 0));
    CHECK((face_areas(moved, m.faces) - face_areas(m.vertices, m.faces)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("channels parse and name round trip") {
    for (const std::string name : {"x", "y", "z", "dnd:0:3"}) CHECK(Channel::parse(name).name() == name);
    CHECK_ERROR_CODE(Channel::parse("w"), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(Channel::parse("dnd:1"), ErrorCode::InvalidArgument);
}

TEST_CASE("simulation bundle access and extraction") {
    const TriMesh m = make_trimesh(triangle_points(), one_face());
    Points shifted = triangle_points();
    shifted.col(0).array() += 4.0; // displacement norm 4 at every vertex
    const SimulationBundle b(m, 1, 2, {triangle_points(), shifted}, {{"tag", {7.0}}});
    CHECK(b.label("tag", 0) == 7.0);
    CHECK_ERROR_CODE(b.frame(0, 2), ErrorCode::IndexOutOfRange);
    CHECK_ERROR_CODE(b.frame(1, 0), ErrorCode::IndexOutOfRange);

    const MeshFunction x = extract_function(b, 0, 1, Channel::x());
    CHECK(x.values(1) == 5.0);
    const MeshFunction d = extract_function(b, 0, 0, Channel::displacement_norm_diff(0, 1));
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(d.values(k) == doctest::Approx(2.0));

    CHECK_ERROR_CODE(SimulationBundle(m, 1, 2, {triangle_points()}), ErrorCode::MissingFrame);
    CHECK_ERROR_CODE(SimulationBundle(m, 2, 1, {triangle_points(), shifted}, {{"tag", {1.0}}}),
                     ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(SimulationBundle(m, 1, 1, {Points::Zero(4, 3)}), ErrorCode::FrameSizeMismatch);
}
