#include "simspec/lb_operator.hpp"

#include "simspec/geodesics.hpp"
#include "simspec/parallel.hpp"
#include "simspec/shapes.hpp"

#include <cmath>
#include <numbers>

namespace simspec {

double LbParams::radius() const { return rho * std::sqrt(h); }

LbParams default_lb_params(const TriMesh& mesh) {
    LbParams p;
    const double edge = mean_edge_length(mesh.vertices, mesh.faces);
    p.h = (2.0 * edge) * (2.0 * edge);
    p.rho = 3.0;
    return p;
}

SymmetricOperator assemble_lb(const TriMesh& mesh, const LbParams& params, unsigned threads) {
    if (!(params.h > 0) || !(params.rho > 0))
        throw Error(ErrorCode::InvalidArgument, "h and rho must be positive");
    const auto n = static_cast<std::size_t>(mesh.n_vertices());
    const EdgeGraph graph = build_edge_graph(mesh);
    const double radius = params.radius();
    const double norm = 1.0 / (4.0 * std::numbers::pi * params.h * params.h);
    const Eigen::VectorXd& area = mesh.vertex_area;

    // Upper-triangle entries per row (l > k), owned by row k.
    std::vector<std::vector<std::pair<int, double>>> upper(n);
    std::vector<char> isolated(n, 0);
    if (threads == 0) threads = default_thread_count();
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    const std::size_t block = (n + workers - 1) / workers;
    parallel_for(workers, threads, [&](std::size_t w) {
        GraphDistanceSolver solver(graph);
        const std::size_t end = std::min(n, (w + 1) * block);
        for (std::size_t k = w * block; k < end; ++k) {
            const LocalDistanceField field = solver.distances(static_cast<int>(k), radius);
            if (field.neighbors.size() < 2) isolated[k] = 1;
            for (const auto& [l, d] : field.neighbors) {
                if (l <= static_cast<int>(k)) continue;
                const double kernel = std::exp(-d * d / (4.0 * params.h)) * norm;
                const double weight = params.weighting == LbWeighting::Symmetric
                                          ? area(k) * area(l) * kernel
                                          : 0.5 * (area(k) + area(l)) * kernel;
                upper[k].emplace_back(l, weight);
            }
        }
    });
    for (std::size_t k = 0; k < n; ++k)
        if (isolated[k])
            throw Error(ErrorCode::RadiusTooSmall,
                        "vertex " + std::to_string(k) + " has no neighbor within rho*sqrt(h) = " +
                            std::to_string(radius));

    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t k = 0; k < n; ++k)
        for (const auto& [l, w] : upper[k]) {
            triplets.emplace_back(static_cast<int>(k), l, w);
            triplets.emplace_back(l, static_cast<int>(k), w);
        }

    SymmetricOperator op;
    op.kind = OperatorKind::LaplaceBeltrami;
    op.weights.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.weights.setFromTriplets(triplets.begin(), triplets.end());
    op.weights.makeCompressed();
    op.degree = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < op.weights.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(op.weights, k); it; ++it) op.degree(k) += it.value();
    op.params = {{"h", params.h},
                 {"rho", params.rho},
                 {"radius", radius},
                 {"weighting_one_sided", params.weighting == LbWeighting::OneSided ? 1.0 : 0.0}};
    return op;
}

Eigen::VectorXd apply_pointwise(const SymmetricOperator& op, const Eigen::VectorXd& vertex_area,
                                const Eigen::VectorXd& f) {
    if (f.size() != op.dimension() || vertex_area.size() != op.dimension())
        throw Error(ErrorCode::LengthMismatch, "function length differs from operator dimension");
    const Eigen::VectorXd lf = op.degree.cwiseProduct(f) - op.weights * f;
    return lf.cwiseQuotient(vertex_area);
}

std::vector<ConvergenceRow> lb_convergence_probe(AnalyticSurface surface,
                                                 const std::vector<int>& levels,
                                                 const ConvergenceOptions& options,
                                                 unsigned threads) {
    std::vector<ConvergenceRow> rows;
    for (const int level : levels) {
        TriMesh mesh;
        if (surface == AnalyticSurface::Sphere) {
            mesh = shapes::icosphere(level);
        } else {
            const int cells = 4 << level;
            mesh = shapes::grid(1.0, 1.0, cells, cells);
        }
        const double edge = mean_edge_length(mesh.vertices, mesh.faces);
        LbParams params;
        params.h = options.scale * std::pow(edge, options.exponent);
        params.rho = options.rho;
        const SymmetricOperator op = assemble_lb(mesh, params, threads);

        Eigen::VectorXd f, expected;
        std::vector<char> evaluate(static_cast<std::size_t>(mesh.n_vertices()), 1);
        if (surface == AnalyticSurface::Sphere) {
            f = mesh.vertices.col(2);
            expected = 2.0 * f;
        } else {
            f = mesh.vertices.col(0) + 0.5 * mesh.vertices.col(1);
            expected = Eigen::VectorXd::Zero(f.size());
            const double margin = params.radius();
            for (Eigen::Index k = 0; k < mesh.n_vertices(); ++k) {
                const double x = mesh.vertices(k, 0), y = mesh.vertices(k, 1);
                const double to_boundary = std::min({x, 1.0 - x, y, 1.0 - y});
                evaluate[static_cast<std::size_t>(k)] = to_boundary > margin;
            }
        }
        const Eigen::VectorXd lf = apply_pointwise(op, mesh.vertex_area, f);

        ConvergenceRow row;
        row.level = level;
        row.n_vertices = mesh.n_vertices();
        row.h = params.h;
        for (Eigen::Index k = 0; k < lf.size(); ++k) {
            if (!evaluate[static_cast<std::size_t>(k)]) continue;
            ++row.n_evaluated;
            row.sup_error = std::max(row.sup_error, std::abs(lf(k) - expected(k)));
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace simspec
