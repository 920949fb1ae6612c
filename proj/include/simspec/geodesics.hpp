#pragma once

#include "simspec/mesh.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace simspec {

/// Undirected edge graph of a mesh in CSR form; neighbors sorted by index,
/// weights are Euclidean edge lengths.
struct EdgeGraph {
    std::vector<int> offsets;
    std::vector<int> neighbors;
    std::vector<double> lengths;

    int n_vertices() const { return static_cast<int>(offsets.size()) - 1; }
};

EdgeGraph build_edge_graph(const Points& vertices, const Faces& faces);
inline EdgeGraph build_edge_graph(const TriMesh& mesh) {
    return build_edge_graph(mesh.vertices, mesh.faces);
}

struct DistanceEntry {
    int vertex;
    double distance;
};

/// Shortest-path distances from `source` truncated at a radius. Entries are
/// sorted by vertex index and include the source at distance 0.
struct LocalDistanceField {
    int source = -1;
    std::vector<DistanceEntry> neighbors;

    /// Distance to `vertex`, or +inf when it lies outside the radius.
    double distance_to(int vertex) const;
};

/// Bounded Dijkstra with reusable scratch buffers. One instance per thread.
class GraphDistanceSolver {
public:
    explicit GraphDistanceSolver(const EdgeGraph& graph);

    /// Expansion stops once the frontier exceeds `radius`. Ties in the queue
    /// are broken by the smaller vertex index.
    LocalDistanceField distances(int source, double radius);

    /// Distances from `source` to each of `targets`, expanding only until all
    /// of them are settled (unbounded radius).
    std::vector<double> distances_to(int source, const std::vector<int>& targets);

private:
    const EdgeGraph& m_graph;
    std::vector<double> m_dist;
    std::vector<char> m_settled;
    std::vector<int> m_touched;

    void reset();
};

LocalDistanceField graph_distances(const TriMesh& mesh, int source, double radius);

/// Largest |d_a(p, w) - d_b(p, w)| over vertex pairs lying within `radius` of
/// each other on either mesh. Every vertex is used as a source unless
/// `source_stride` > 1. Throws ConnectivityMismatch when face lists differ.
double epsilon_isometry_defect(const TriMesh& mesh_a, const TriMesh& mesh_b, double radius,
                               int source_stride = 1, unsigned threads = 0);

} // namespace simspec
