#include "simspec/mesh.hpp"

#include <numeric>
#include <sstream>

namespace simspec {

namespace {

int find_root(std::vector<int>& parent, int v) {
    while (parent[v] != v) {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    return v;
}

void report_mesh_warnings(const Points& vertices, const Faces& faces) {
    const Eigen::VectorXd areas = face_areas(vertices, faces);
    const double scale = areas.size() ? areas.maxCoeff() : 0.0;
    int degenerate = 0;
    for (Eigen::Index f = 0; f < areas.size(); ++f)
        if (areas(f) <= 1e-14 * scale) ++degenerate;
    if (degenerate > 0)
        warn(std::to_string(degenerate) + " degenerate (zero-area) face(s) kept in connectivity");

    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(faces.rows()) * 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int i = 0; i < 3; ++i) {
            int a = faces(f, i), b = faces(f, (i + 1) % 3);
            if (a > b) std::swap(a, b);
            edges.emplace_back(a, b);
        }
    std::sort(edges.begin(), edges.end());
    int non_manifold = 0;
    for (std::size_t i = 0; i < edges.size();) {
        std::size_t j = i;
        while (j < edges.size() && edges[j] == edges[i]) ++j;
        if (j - i > 2) ++non_manifold;
        i = j;
    }
    if (non_manifold > 0)
        warn("NonManifoldInput: " + std::to_string(non_manifold) +
             " edge(s) shared by more than two faces");
}

} // namespace

int count_components(Eigen::Index n_vertices, const Faces& faces) {
    std::vector<int> parent(static_cast<std::size_t>(n_vertices));
    std::iota(parent.begin(), parent.end(), 0);
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int i = 0; i < 3; ++i) {
            const int a = find_root(parent, faces(f, i));
            const int b = find_root(parent, faces(f, (i + 1) % 3));
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    int components = 0;
    for (int v = 0; v < static_cast<int>(n_vertices); ++v)
        if (find_root(parent, v) == v) ++components;
    return components;
}

TriMesh make_trimesh(Points vertices, Faces faces, MeshCheckOptions options) {
    const Eigen::Index n = vertices.rows();
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "mesh has no vertices");
    if (!all_finite(vertices))
        throw Error(ErrorCode::NonFiniteValue, "vertex coordinates contain NaN or Inf");
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int i = 0; i < 3; ++i)
            if (faces(f, i) < 0 || faces(f, i) >= n) {
                std::ostringstream msg;
                msg << "face " << f << " references vertex " << faces(f, i) << " of " << n;
                throw Error(ErrorCode::IndexOutOfRange, msg.str());
            }
        if (faces(f, 0) == faces(f, 1) || faces(f, 1) == faces(f, 2) || faces(f, 0) == faces(f, 2))
            throw Error(ErrorCode::InvalidArgument,
                        "face " + std::to_string(f) + " has repeated vertices");
    }
    if (options.require_connected) {
        const int components = count_components(n, faces);
        if (components != 1)
            throw Error(ErrorCode::DisconnectedMesh,
                        "vertex graph has " + std::to_string(components) + " components");
    }
    report_mesh_warnings(vertices, faces);

    TriMesh mesh;
    mesh.vertex_area = lumped_vertex_areas(vertices, faces);
    mesh.vertices = std::move(vertices);
    mesh.faces = std::move(faces);
    return mesh;
}

TriMesh with_positions(const TriMesh& mesh, Points vertices) {
    if (vertices.rows() != mesh.n_vertices())
        throw Error(ErrorCode::FrameSizeMismatch, "position count differs from mesh");
    TriMesh out;
    out.vertex_area = lumped_vertex_areas(vertices, mesh.faces);
    out.vertices = std::move(vertices);
    out.faces = mesh.faces;
    return out;
}

Channel Channel::parse(const std::string& text) {
    if (text == "x") return x();
    if (text == "y") return y();
    if (text == "z") return z();
    if (text.rfind("dnd:", 0) == 0) {
        const auto sep = text.find(':', 4);
        if (sep != std::string::npos) {
            try {
                return displacement_norm_diff(std::stoi(text.substr(4, sep - 4)),
                                              std::stoi(text.substr(sep + 1)));
            } catch (const std::exception&) {
            }
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown channel '" + text + "'");
}

std::string Channel::name() const {
    switch (kind) {
    case ChannelKind::X: return "x";
    case ChannelKind::Y: return "y";
    case ChannelKind::Z: return "z";
    case ChannelKind::DisplacementNormDiff:
        return "dnd:" + std::to_string(step_a) + ":" + std::to_string(step_b);
    }
    return "?";
}

SimulationBundle::SimulationBundle(TriMesh mesh, int n_sims, int n_steps,
                                   std::vector<Points> frames,
                                   std::map<std::string, std::vector<double>> labels)
    : m_mesh(std::move(mesh)), m_sims(n_sims), m_steps(n_steps), m_frames(std::move(frames)),
      m_labels(std::move(labels)) {
    if (n_sims < 1 || n_steps < 1)
        throw Error(ErrorCode::InvalidArgument, "bundle needs at least one simulation and step");
    if (m_frames.size() != static_cast<std::size_t>(n_sims) * static_cast<std::size_t>(n_steps))
        throw Error(ErrorCode::MissingFrame, "expected " + std::to_string(n_sims * n_steps) +
                                                 " frames, got " + std::to_string(m_frames.size()));
    for (const auto& frame : m_frames) {
        if (frame.rows() != m_mesh.n_vertices())
            throw Error(ErrorCode::FrameSizeMismatch, "frame vertex count differs from mesh");
        if (!all_finite(frame))
            throw Error(ErrorCode::NonFiniteValue, "frame contains NaN or Inf");
    }
    for (const auto& [name, values] : m_labels)
        if (values.size() != static_cast<std::size_t>(n_sims))
            throw Error(ErrorCode::InvalidArgument,
                        "label '" + name + "' must have one value per simulation");
}

const Points& SimulationBundle::frame(int sim, int step) const {
    if (sim < 0 || sim >= m_sims || step < 0 || step >= m_steps)
        throw Error(ErrorCode::IndexOutOfRange, "frame (" + std::to_string(sim) + ", " +
                                                    std::to_string(step) + ") out of range");
    return m_frames[static_cast<std::size_t>(sim) * m_steps + step];
}

double SimulationBundle::label(const std::string& name, int sim) const {
    const auto it = m_labels.find(name);
    if (it == m_labels.end()) throw Error(ErrorCode::InvalidArgument, "no label '" + name + "'");
    if (sim < 0 || sim >= m_sims) throw Error(ErrorCode::IndexOutOfRange, "simulation index");
    return it->second[static_cast<std::size_t>(sim)];
}

MeshFunction extract_function(const SimulationBundle& bundle, int sim, int step,
                              const Channel& channel) {
    MeshFunction out;
    out.channel = channel.name();
    switch (channel.kind) {
    case ChannelKind::X:
    case ChannelKind::Y:
    case ChannelKind::Z:
        out.values = bundle.frame(sim, step).col(static_cast<int>(channel.kind));
        break;
    case ChannelKind::DisplacementNormDiff: {
        const Points& u = bundle.frame(sim, channel.step_a);
        const Points& v = bundle.frame(sim, channel.step_b);
        out.values = (u - v).rowwise().norm().array().sqrt();
        break;
    }
    }
    return out;
}

} // namespace simspec
