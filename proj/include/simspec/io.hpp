#pragma once

#include "simspec/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace simspec {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Raw float64 little-endian, row-major.
void write_raw_f64(const std::filesystem::path& path, const double* data, std::size_t count);
std::vector<double> read_raw_f64(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// -----------------------------------------------------------------------------
// Meshes
// -----------------------------------------------------------------------------

enum class MeshFormat { Off, Obj };

/// Raw indexed geometry before validation. Quads are already split along
/// their shorter diagonal.
struct MeshSoup {
    Points vertices;
    Faces faces;
};

MeshSoup parse_off(const std::string& text);
MeshSoup parse_obj(const std::string& text);

/// Loads and validates (see make_trimesh). Format is inferred from the
/// extension when not given.
TriMesh load_mesh(const std::filesystem::path& path);
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);

/// Writes OFF with round-trip exact coordinates.
void save_off(const std::filesystem::path& path, const Points& vertices, const Faces& faces);

// -----------------------------------------------------------------------------
// Bundles: manifest JSON + one raw frame file per (sim, step)
// -----------------------------------------------------------------------------

struct BundleManifest {
    std::string mesh;
    Eigen::Index n_vertices = 0;
    Eigen::Index n_faces = 0;
    int n_simulations = 0;
    int n_timesteps = 0;
    std::string frame_pattern;
    std::map<std::string, std::vector<double>> labels;
};

BundleManifest parse_manifest(const std::string& json_text);
std::string manifest_to_json(const BundleManifest& manifest);

/// Substitutes {sim} and {step} in a frame pattern.
std::string frame_file_name(const std::string& pattern, int sim, int step);

SimulationBundle load_bundle(const std::filesystem::path& manifest_path);

/// Writes `directory/manifest.json`, `directory/mesh.off` and
/// `directory/frames/sim{sim}_step{step}.bin`. Returns the manifest path.
std::filesystem::path save_bundle(const SimulationBundle& bundle,
                                  const std::filesystem::path& directory);

} // namespace simspec
