#include "helpers.hpp"

#include "simspec/geodesics.hpp"
#include "simspec/shapes.hpp"
#include "simspec/synthetic.hpp"

#include <cmath>
#include <limits>

using namespace simspec;

TEST_CASE("edge graph of a single triangle") {
    Points v(3, 3);
    v << 0, 0, 0, 3, 0, 0, 0, 4, 0;
    Faces f(1, 3);
    f << 0, 1, 2;
    const EdgeGraph g = build_edge_graph(v, f);
    CHECK(g.n_vertices() == 3);
    CHECK(g.neighbors.size() == 6);
    // Vertex 1's neighbors are 0 and 2, at 3 and 5.
    CHECK(g.neighbors[2] == 0);
    CHECK(g.lengths[2] == 3.0);
    CHECK(g.lengths[3] == 5.0);
}

TEST_CASE("grid distances follow edges and cell diagonals") {
    // 2 x 2 unit cells; shortest paths may use the triangulation diagonals.
    const TriMesh m = shapes::grid(2.0, 2.0, 2, 2);
    const LocalDistanceField field = graph_distances(m, 0, 10.0);
    CHECK(field.neighbors.size() == 9);
    CHECK(field.distance_to(0) == 0.0);
    CHECK(field.distance_to(1) == doctest::Approx(1.0));
    CHECK(field.distance_to(2) == doctest::Approx(2.0));
    // The far corner is two cell diagonals or a diagonal plus two edges away.
    const double corner = field.distance_to(8);
    CHECK((corner == doctest::Approx(2 * std::sqrt(2.0)) || corner == doctest::Approx(2 + std::sqrt(2.0)) ||
           corner == doctest::Approx(4.0)));
    CHECK(corner >= 2 * std::sqrt(2.0) - 1e-12);
}

TEST_CASE("radius truncation and sorted output") {
    const TriMesh m = shapes::grid(4.0, 1.0, 4, 1);
    const LocalDistanceField field = graph_distances(m, 0, 1.5);
    for (std::size_t i = 1; i < field.neighbors.size(); ++i)
        CHECK(field.neighbors[i - 1].vertex < field.neighbors[i].vertex);
    for (const auto& e : field.neighbors) CHECK(e.distance <= 1.5);
    CHECK(field.distance_to(4) == std::numeric_limits<double>::infinity());
    CHECK_ERROR_CODE(graph_distances(m, 99, 1.0), ErrorCode::IndexOutOfRange);
    CHECK_ERROR_CODE(graph_distances(m, 0, 0.0), ErrorCode::InvalidArgument);
}

TEST_CASE("unbounded targeted distances agree with the bounded search") {
    const TriMesh m = shapes::icosphere(2);
    const EdgeGraph g = build_edge_graph(m);
    GraphDistanceSolver solver(g);
    const LocalDistanceField field = solver.distances(5, 100.0);
    const std::vector<double> d = solver.distances_to(5, {0, 17, 161});
    CHECK(d[0] == field.distance_to(0));
    CHECK(d[1] == field.distance_to(17));
    CHECK(d[2] == field.distance_to(161));
}

TEST_CASE("graph distance on the sphere approximates the great circle") {
    const TriMesh m = shapes::icosphere(4);
    // Antipodal pair: the icosphere keeps the icosahedron's antipodal vertices.
    Eigen::Index far = 0;
    (m.vertices.rowwise() + m.vertices.row(0)).rowwise().squaredNorm().minCoeff(&far);
    const double d = graph_distances(m, 0, 10.0).distance_to(static_cast<int>(far));
    CHECK(d >= M_PI);
    CHECK(d <= 1.1 * M_PI);
}

TEST_CASE("epsilon-isometry defect") {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::NoisyIsometry;
    spec.n_sims = 1;
    spec.strip_nx = 20;
    spec.strip_ny = 5;
    const TriMesh rest = gen_isometric_bend(spec).bundle.mesh();

    Points moved = rest.vertices;
    moved.col(0).array() += 3.0;
    CHECK(epsilon_isometry_defect(rest, with_positions(rest, moved), 0.6) < 1e-12);

    double previous = -1;
    for (double sigma : {0.0, 1e-3, 1e-2}) {
        spec.sigma = sigma;
        const GeneratedBundle g = gen_noisy_isometry(spec);
        const TriMesh noisy = with_positions(rest, g.bundle.frame(0, 0));
        const TriMesh clean = with_positions(rest, gen_isometric_bend(spec).bundle.frame(0, 0));
        const double defect = epsilon_isometry_defect(clean, noisy, 0.6);
        CHECK(defect > previous);
        previous = defect;
    }

    const TriMesh other = shapes::grid(1.0, 1.0, 5, 20);
    CHECK_ERROR_CODE(epsilon_isometry_defect(rest, other, 0.5), ErrorCode::ConnectivityMismatch);
}
