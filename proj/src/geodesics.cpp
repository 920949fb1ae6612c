#include "simspec/geodesics.hpp"

#include "simspec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace simspec {

EdgeGraph build_edge_graph(const Points& vertices, const Faces& faces) {
    const auto n = static_cast<int>(vertices.rows());
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(faces.rows()) * 6);
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int i = 0; i < 3; ++i) {
            const int a = faces(f, i), b = faces(f, (i + 1) % 3);
            edges.emplace_back(a, b);
            edges.emplace_back(b, a);
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    EdgeGraph g;
    g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& e : edges) ++g.offsets[static_cast<std::size_t>(e.first) + 1];
    for (int v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];
    g.neighbors.reserve(edges.size());
    g.lengths.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        g.neighbors.push_back(b);
        g.lengths.push_back((vertices.row(a) - vertices.row(b)).norm());
    }
    return g;
}

double LocalDistanceField::distance_to(int vertex) const {
    const auto it = std::lower_bound(neighbors.begin(), neighbors.end(), vertex,
                                     [](const DistanceEntry& e, int v) { return e.vertex < v; });
    if (it != neighbors.end() && it->vertex == vertex) return it->distance;
    return std::numeric_limits<double>::infinity();
}

GraphDistanceSolver::GraphDistanceSolver(const EdgeGraph& graph)
    : m_graph(graph),
      m_dist(static_cast<std::size_t>(graph.n_vertices()), std::numeric_limits<double>::infinity()),
      m_settled(static_cast<std::size_t>(graph.n_vertices()), 0) {}

void GraphDistanceSolver::reset() {
    for (int v : m_touched) {
        m_dist[v] = std::numeric_limits<double>::infinity();
        m_settled[v] = 0;
    }
    m_touched.clear();
}

LocalDistanceField GraphDistanceSolver::distances(int source, double radius) {
    if (source < 0 || source >= m_graph.n_vertices())
        throw Error(ErrorCode::IndexOutOfRange, "source vertex " + std::to_string(source));
    if (!(radius > 0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");

    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    m_dist[source] = 0;
    m_touched.push_back(source);
    queue.emplace(0.0, source);

    LocalDistanceField field;
    field.source = source;
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (m_settled[v]) continue;
        if (d > radius) break;
        m_settled[v] = 1;
        field.neighbors.push_back({v, d});
        for (int e = m_graph.offsets[v]; e < m_graph.offsets[v + 1]; ++e) {
            const int w = m_graph.neighbors[e];
            const double nd = d + m_graph.lengths[e];
            if (!m_settled[w] && nd < m_dist[w]) {
                if (std::isinf(m_dist[w])) m_touched.push_back(w);
                m_dist[w] = nd;
                queue.emplace(nd, w);
            }
        }
    }
    reset();
    std::sort(field.neighbors.begin(), field.neighbors.end(),
              [](const DistanceEntry& a, const DistanceEntry& b) { return a.vertex < b.vertex; });
    return field;
}

std::vector<double> GraphDistanceSolver::distances_to(int source, const std::vector<int>& targets) {
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::vector<char> wanted(m_dist.size(), 0);
    std::size_t remaining = 0;
    for (int t : targets)
        if (!wanted[t]) {
            wanted[t] = 1;
            ++remaining;
        }

    m_dist[source] = 0;
    m_touched.push_back(source);
    queue.emplace(0.0, source);
    while (!queue.empty() && remaining > 0) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (m_settled[v]) continue;
        m_settled[v] = 1;
        if (wanted[v]) --remaining;
        for (int e = m_graph.offsets[v]; e < m_graph.offsets[v + 1]; ++e) {
            const int w = m_graph.neighbors[e];
            const double nd = d + m_graph.lengths[e];
            if (!m_settled[w] && nd < m_dist[w]) {
                if (std::isinf(m_dist[w])) m_touched.push_back(w);
                m_dist[w] = nd;
                queue.emplace(nd, w);
            }
        }
    }
    std::vector<double> out;
    out.reserve(targets.size());
    for (int t : targets) out.push_back(m_dist[t]);
    reset();
    return out;
}

LocalDistanceField graph_distances(const TriMesh& mesh, int source, double radius) {
    const EdgeGraph graph = build_edge_graph(mesh);
    GraphDistanceSolver solver(graph);
    return solver.distances(source, radius);
}

double epsilon_isometry_defect(const TriMesh& mesh_a, const TriMesh& mesh_b, double radius,
                               int source_stride, unsigned threads) {
    if (mesh_a.n_vertices() != mesh_b.n_vertices() || mesh_a.faces != mesh_b.faces)
        throw Error(ErrorCode::ConnectivityMismatch, "meshes do not share connectivity");
    if (source_stride < 1) source_stride = 1;

    const EdgeGraph graph_a = build_edge_graph(mesh_a);
    const EdgeGraph graph_b = build_edge_graph(mesh_b);
    const auto n = static_cast<std::size_t>(mesh_a.n_vertices());
    const std::size_t n_sources = (n + source_stride - 1) / source_stride;
    std::vector<double> row_defect(n_sources, 0.0);

    if (threads == 0) threads = default_thread_count();
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n_sources));
    const std::size_t block = (n_sources + workers - 1) / workers;
    parallel_for(workers, threads, [&](std::size_t w) {
        GraphDistanceSolver solver_a(graph_a), solver_b(graph_b);
        const std::size_t end = std::min(n_sources, (w + 1) * block);
        for (std::size_t i = w * block; i < end; ++i) {
            const int source = static_cast<int>(i) * source_stride;
            // Pairs inside the radius on either mesh; the partner distance is
            // computed without truncation.
            const LocalDistanceField fa = solver_a.distances(source, radius);
            const LocalDistanceField fb = solver_b.distances(source, radius);
            std::vector<int> only_b, only_a;
            for (const auto& e : fb.neighbors)
                if (std::isinf(fa.distance_to(e.vertex))) only_b.push_back(e.vertex);
            for (const auto& e : fa.neighbors)
                if (std::isinf(fb.distance_to(e.vertex))) only_a.push_back(e.vertex);
            const std::vector<double> da_extra = solver_a.distances_to(source, only_b);
            const std::vector<double> db_extra = solver_b.distances_to(source, only_a);

            double worst = 0;
            for (const auto& e : fa.neighbors) {
                const double db = fb.distance_to(e.vertex);
                if (!std::isinf(db)) worst = std::max(worst, std::abs(e.distance - db));
            }
            for (std::size_t t = 0; t < only_a.size(); ++t)
                worst = std::max(worst, std::abs(fa.distance_to(only_a[t]) - db_extra[t]));
            for (std::size_t t = 0; t < only_b.size(); ++t)
                worst = std::max(worst, std::abs(da_extra[t] - fb.distance_to(only_b[t])));
            row_defect[i] = worst;
        }
    });
    return *std::max_element(row_defect.begin(), row_defect.end());
}

} // namespace simspec
