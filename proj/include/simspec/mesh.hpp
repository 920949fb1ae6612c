#pragma once

#include "simspec/error.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace simspec {

template <typename Scalar>
using PointsT = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points = PointsT<double>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

// -----------------------------------------------------------------------------
// Geometry helpers. Free functions over dense point/face arrays.
// -----------------------------------------------------------------------------

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> face_areas(const PointsT<Scalar>& vertices,
                                                   const Faces& faces) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> areas(faces.rows());
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        const auto a = vertices.row(faces(f, 0));
        const auto b = vertices.row(faces(f, 1));
        const auto c = vertices.row(faces(f, 2));
        areas(f) = Scalar(0.5) * (b - a).cross(c - a).norm();
    }
    return areas;
}

/// One third of every incident face area, accumulated per vertex.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lumped_vertex_areas(const PointsT<Scalar>& vertices,
                                                            const Faces& faces) {
    const auto areas = face_areas(vertices, faces);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lumped =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(vertices.rows());
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int i = 0; i < 3; ++i) lumped(faces(f, i)) += areas(f) / Scalar(3);
    return lumped;
}

/// Mean length over unique undirected edges.
template <typename Scalar>
Scalar mean_edge_length(const PointsT<Scalar>& vertices, const Faces& faces) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(faces.rows()) * 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int i = 0; i < 3; ++i) {
            int a = faces(f, i), b = faces(f, (i + 1) % 3);
            if (a > b) std::swap(a, b);
            edges.emplace_back(a, b);
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    Scalar total(0);
    for (const auto& [a, b] : edges) total += (vertices.row(a) - vertices.row(b)).norm();
    return edges.empty() ? Scalar(0) : total / Scalar(edges.size());
}

/// x -> R (x - center) + center + translation, applied row-wise.
template <typename Scalar>
PointsT<Scalar> rigid_transform(const PointsT<Scalar>& vertices,
                                const Eigen::Matrix<Scalar, 3, 3>& rotation,
                                const Eigen::Matrix<Scalar, 1, 3>& translation,
                                const Eigen::Matrix<Scalar, 1, 3>& center =
                                    Eigen::Matrix<Scalar, 1, 3>::Zero()) {
    PointsT<Scalar> out(vertices.rows(), 3);
    for (Eigen::Index k = 0; k < vertices.rows(); ++k)
        out.row(k) = (vertices.row(k) - center) * rotation.transpose() + center + translation;
    return out;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.derived().array().isFinite().all();
}

// -----------------------------------------------------------------------------
// TriMesh
// -----------------------------------------------------------------------------

/// Indexed triangle mesh with per-vertex lumped areas. Built through
/// make_trimesh(), which validates indices and connectivity; immutable after.
template <typename Scalar>
struct TriMeshT {
    PointsT<Scalar> vertices;
    Faces faces;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vertex_area;

    Eigen::Index n_vertices() const { return vertices.rows(); }
    Eigen::Index n_faces() const { return faces.rows(); }
    Scalar total_area() const { return vertex_area.sum(); }
};
using TriMesh = TriMeshT<double>;

/// Number of connected components of the vertex adjacency graph.
int count_components(Eigen::Index n_vertices, const Faces& faces);

struct MeshCheckOptions {
    bool require_connected = true;
};

/// Validates connectivity and computes lumped areas. Throws IndexOutOfRange for
/// bad indices, InvalidArgument for repeated vertices in a face,
/// NonFiniteValue for NaN/Inf coordinates and DisconnectedMesh when the edge
/// graph has more than one component. Degenerate faces and non-manifold
/// edges are kept and reported through warn().
TriMesh make_trimesh(Points vertices, Faces faces, MeshCheckOptions options = {});

/// Same connectivity, new vertex positions (areas recomputed, no re-validation
/// of the face list).
TriMesh with_positions(const TriMesh& mesh, Points vertices);

// -----------------------------------------------------------------------------
// Bundles and mesh functions
// -----------------------------------------------------------------------------

struct MeshFunction {
    Eigen::VectorXd values;
    std::string channel;
};

enum class ChannelKind { X, Y, Z, DisplacementNormDiff };

struct Channel {
    ChannelKind kind = ChannelKind::X;
    int step_a = 0;
    int step_b = 0;

    static Channel x() { return {ChannelKind::X}; }
    static Channel y() { return {ChannelKind::Y}; }
    static Channel z() { return {ChannelKind::Z}; }
    static Channel displacement_norm_diff(int a, int b) {
        return {ChannelKind::DisplacementNormDiff, a, b};
    }
    /// Parses "x", "y", "z" or "dnd:A:B".
    static Channel parse(const std::string& text);
    std::string name() const;
};

/// m simulations x tau steps of vertex positions over one shared TriMesh.
class SimulationBundle {
public:
    SimulationBundle() = default;
    /// `frames` is laid out sim-major: frames[sim * n_steps + step].
    SimulationBundle(TriMesh mesh, int n_sims, int n_steps, std::vector<Points> frames,
                     std::map<std::string, std::vector<double>> labels = {});

    const TriMesh& mesh() const { return m_mesh; }
    int n_sims() const { return m_sims; }
    int n_steps() const { return m_steps; }
    Eigen::Index n_vertices() const { return m_mesh.n_vertices(); }

    const Points& frame(int sim, int step) const;
    const std::vector<Points>& frames() const { return m_frames; }
    const std::map<std::string, std::vector<double>>& labels() const { return m_labels; }
    double label(const std::string& name, int sim) const;

private:
    TriMesh m_mesh;
    int m_sims = 0;
    int m_steps = 0;
    std::vector<Points> m_frames;
    std::map<std::string, std::vector<double>> m_labels;
};

/// Per-vertex coordinate column of a frame, or sqrt(|u_k - v_k|) between the
/// positions at two steps (square root of the Euclidean norm).
MeshFunction extract_function(const SimulationBundle& bundle, int sim, int step,
                              const Channel& channel);

} // namespace simspec
