#include "simspec/io.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace simspec {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "raw frame I/O assumes a little-endian host");

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
    return std::string(buf.data(), end);
}

void write_raw_f64(const fs::path& path, const double* data, std::size_t count) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<double> read_raw_f64(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFrame, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    if (bytes % sizeof(double) != 0)
        throw Error(ErrorCode::FrameSizeMismatch,
                    path.string() + " size is not a multiple of 8 bytes");
    std::vector<double> values(bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
    return values;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// -----------------------------------------------------------------------------
// OFF / OBJ
// -----------------------------------------------------------------------------

namespace {

struct SoupBuilder {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::array<int, 3>> faces;

    void add_polygon(const std::vector<int>& poly) {
        if (poly.size() == 3) {
            faces.push_back({poly[0], poly[1], poly[2]});
        } else if (poly.size() == 4) {
            // Split along the shorter diagonal; ties go to the 0-2 diagonal.
            auto dist2 = [&](int a, int b) {
                double s = 0;
                for (int i = 0; i < 3; ++i) {
                    const double d = vertices.at(a)[i] - vertices.at(b)[i];
                    s += d * d;
                }
                return s;
            };
            for (int v : poly)
                if (v < 0 || v >= static_cast<int>(vertices.size()))
                    throw Error(ErrorCode::ParseError, "quad references missing vertex");
            if (dist2(poly[1], poly[3]) < dist2(poly[0], poly[2])) {
                faces.push_back({poly[0], poly[1], poly[3]});
                faces.push_back({poly[1], poly[2], poly[3]});
            } else {
                faces.push_back({poly[0], poly[1], poly[2]});
                faces.push_back({poly[0], poly[2], poly[3]});
            }
        } else {
            throw Error(ErrorCode::ParseError, "only triangles and quads are supported, got a " +
                                                   std::to_string(poly.size()) + "-gon");
        }
    }

    MeshSoup finish() const {
        MeshSoup soup;
        soup.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
        for (std::size_t k = 0; k < vertices.size(); ++k)
            for (int i = 0; i < 3; ++i) soup.vertices(static_cast<Eigen::Index>(k), i) = vertices[k][i];
        soup.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
        for (std::size_t f = 0; f < faces.size(); ++f)
            for (int i = 0; i < 3; ++i) soup.faces(static_cast<Eigen::Index>(f), i) = faces[f][i];
        return soup;
    }
};

/// Reads whitespace-separated tokens, skipping '#' comments.
class TokenStream {
public:
    explicit TokenStream(const std::string& text) : m_in(text) {}

    bool next(std::string& token) {
        while (m_in >> token) {
            if (token[0] == '#') {
                std::string rest;
                std::getline(m_in, rest);
                continue;
            }
            return true;
        }
        return false;
    }

    template <typename T>
    T read(const char* what) {
        std::string token;
        if (!next(token)) throw Error(ErrorCode::ParseError, std::string("missing ") + what);
        T value{};
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size())
            throw Error(ErrorCode::ParseError, std::string("bad ") + what + " '" + token + "'");
        return value;
    }

private:
    std::istringstream m_in;
};

} // namespace

MeshSoup parse_off(const std::string& text) {
    TokenStream tokens(text);
    std::string header;
    if (!tokens.next(header) || header != "OFF")
        throw Error(ErrorCode::ParseError, "missing OFF header");
    const auto nv = tokens.read<long>("vertex count");
    const auto nf = tokens.read<long>("face count");
    tokens.read<long>("edge count");
    if (nv < 0 || nf < 0) throw Error(ErrorCode::ParseError, "negative element count");

    SoupBuilder builder;
    builder.vertices.resize(static_cast<std::size_t>(nv));
    for (auto& v : builder.vertices)
        for (double& c : v) c = tokens.read<double>("vertex coordinate");
    std::vector<int> poly;
    for (long f = 0; f < nf; ++f) {
        const auto count = tokens.read<int>("face size");
        if (count < 3) throw Error(ErrorCode::ParseError, "face with fewer than 3 vertices");
        poly.assign(static_cast<std::size_t>(count), 0);
        for (int& idx : poly) idx = tokens.read<int>("face index");
        builder.add_polygon(poly);
    }
    return builder.finish();
}

MeshSoup parse_obj(const std::string& text) {
    SoupBuilder builder;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<int> poly;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            std::array<double, 3> p{};
            for (double& c : p)
                if (!(ls >> c))
                    throw Error(ErrorCode::ParseError, "bad vertex on line " + std::to_string(line_no));
            builder.vertices.push_back(p);
        } else if (tag == "f") {
            poly.clear();
            std::string ref;
            while (ls >> ref) {
                const std::string head = ref.substr(0, ref.find('/'));
                int idx = 0;
                const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
                if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0)
                    throw Error(ErrorCode::ParseError, "bad face index on line " + std::to_string(line_no));
                // 1-based; negative indices count back from the latest vertex.
                poly.push_back(idx > 0 ? idx - 1 : static_cast<int>(builder.vertices.size()) + idx);
            }
            builder.add_polygon(poly);
        }
    }
    return builder.finish();
}

TriMesh load_mesh(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off") return load_mesh(path, MeshFormat::Off);
    if (ext == ".obj") return load_mesh(path, MeshFormat::Obj);
    throw Error(ErrorCode::ParseError, "unrecognized mesh extension '" + ext + "'");
}

TriMesh load_mesh(const fs::path& path, MeshFormat format) {
    if (!fs::exists(path)) throw Error(ErrorCode::IoError, "mesh file not found: " + path.string());
    const std::string text = read_text_file(path);
    MeshSoup soup = format == MeshFormat::Off ? parse_off(text) : parse_obj(text);
    return make_trimesh(std::move(soup.vertices), std::move(soup.faces));
}

void save_off(const fs::path& path, const Points& vertices, const Faces& faces) {
    std::string out = "OFF\n" + std::to_string(vertices.rows()) + ' ' +
                      std::to_string(faces.rows()) + " 0\n";
    for (Eigen::Index k = 0; k < vertices.rows(); ++k)
        out += format_double(vertices(k, 0)) + ' ' + format_double(vertices(k, 1)) + ' ' +
               format_double(vertices(k, 2)) + '\n';
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        out += "3 " + std::to_string(faces(f, 0)) + ' ' + std::to_string(faces(f, 1)) + ' ' +
               std::to_string(faces(f, 2)) + '\n';
    write_text_file(path, out);
}

// -----------------------------------------------------------------------------
// Bundles
// -----------------------------------------------------------------------------

BundleManifest parse_manifest(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
    }
    BundleManifest m;
    try {
        m.mesh = j.at("mesh").get<std::string>();
        m.n_vertices = j.at("n_vertices").get<Eigen::Index>();
        m.n_faces = j.at("n_faces").get<Eigen::Index>();
        m.n_simulations = j.at("n_simulations").get<int>();
        m.n_timesteps = j.at("n_timesteps").get<int>();
        m.frame_pattern = j.at("frame_pattern").get<std::string>();
        if (j.contains("labels"))
            m.labels = j.at("labels").get<std::map<std::string, std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
    }
    return m;
}

std::string manifest_to_json(const BundleManifest& m) {
    nlohmann::ordered_json j;
    j["mesh"] = m.mesh;
    j["n_vertices"] = m.n_vertices;
    j["n_faces"] = m.n_faces;
    j["n_simulations"] = m.n_simulations;
    j["n_timesteps"] = m.n_timesteps;
    j["frame_pattern"] = m.frame_pattern;
    if (!m.labels.empty()) j["labels"] = m.labels;
    return j.dump(2) + '\n';
}

std::string frame_file_name(const std::string& pattern, int sim, int step) {
    std::string out = pattern;
    auto replace = [&out](const std::string& key, int value) {
        for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key))
            out.replace(pos, key.size(), std::to_string(value));
    };
    replace("{sim}", sim);
    replace("{step}", step);
    return out;
}

SimulationBundle load_bundle(const fs::path& manifest_path) {
    const BundleManifest m = parse_manifest(read_text_file(manifest_path));
    const fs::path root = manifest_path.parent_path();
    TriMesh mesh = load_mesh(root / m.mesh);
    if (mesh.n_vertices() != m.n_vertices || mesh.n_faces() != m.n_faces)
        throw Error(ErrorCode::FrameSizeMismatch, "mesh size disagrees with manifest");

    std::vector<Points> frames;
    frames.reserve(static_cast<std::size_t>(m.n_simulations) * m.n_timesteps);
    for (int sim = 0; sim < m.n_simulations; ++sim)
        for (int step = 0; step < m.n_timesteps; ++step) {
            const fs::path file = root / frame_file_name(m.frame_pattern, sim, step);
            if (!fs::exists(file)) throw Error(ErrorCode::MissingFrame, file.string());
            const std::vector<double> raw = read_raw_f64(file);
            if (raw.size() != static_cast<std::size_t>(m.n_vertices) * 3)
                throw Error(ErrorCode::FrameSizeMismatch,
                            file.string() + " holds " + std::to_string(raw.size()) +
                                " values, expected " + std::to_string(m.n_vertices * 3));
            Points frame = Eigen::Map<const Points>(raw.data(), m.n_vertices, 3);
            if (!all_finite(frame)) throw Error(ErrorCode::NonFiniteValue, file.string());
            frames.push_back(std::move(frame));
        }
    return SimulationBundle(std::move(mesh), m.n_simulations, m.n_timesteps, std::move(frames),
                            m.labels);
}

fs::path save_bundle(const SimulationBundle& bundle, const fs::path& directory) {
    fs::create_directories(directory / "frames");
    BundleManifest m;
    m.mesh = "mesh.off";
    m.n_vertices = bundle.n_vertices();
    m.n_faces = bundle.mesh().n_faces();
    m.n_simulations = bundle.n_sims();
    m.n_timesteps = bundle.n_steps();
    m.frame_pattern = "frames/sim{sim}_step{step}.bin";
    m.labels = bundle.labels();

    save_off(directory / m.mesh, bundle.mesh().vertices, bundle.mesh().faces);
    for (int sim = 0; sim < bundle.n_sims(); ++sim)
        for (int step = 0; step < bundle.n_steps(); ++step) {
            const Points& frame = bundle.frame(sim, step);
            write_raw_f64(directory / frame_file_name(m.frame_pattern, sim, step), frame.data(),
                          static_cast<std::size_t>(frame.size()));
        }
    const fs::path manifest_path = directory / "manifest.json";
    write_text_file(manifest_path, manifest_to_json(m));
    return manifest_path;
}

} // namespace simspec
