#pragma once

#include "simspec/mesh.hpp"
#include "simspec/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace simspec {

enum class GeneratorKind {
    CylinderRigid,
    IsometricBend,
    NoisyIsometry,
    LatentIto,
    /// Strip whose sims share one deformation until a switch step, then split
    /// into two labeled branches.
    Bifurcating,
};

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& text);

enum class ObservationMap { Linear, PolynomialWarp };

std::string to_string(ObservationMap phi);
ObservationMap observation_map_from_string(const std::string& text);

/// Inputs to every generator. Unused fields are ignored by a given kind.
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::CylinderRigid;
    std::uint64_t seed = 0;
    int n_sims = 10;
    int n_steps = 1;

    // cylinder_rigid
    double cylinder_radius = 1.0;
    double cylinder_height = 2.0;
    int cylinder_around = 32;
    int cylinder_along = 16;
    /// Translations are uniform in [-max_translation, max_translation]^3.
    double max_translation = 1.0;
    /// Scales the random rotation angle; 0 gives pure translations.
    double rotation_scale = 1.0;

    // isometric_bend, noisy_isometry, bifurcating (strip geometry)
    double strip_length = 4.0;
    double strip_width = 1.0;
    int strip_nx = 80;
    int strip_ny = 20;
    /// Final bend angle per sim is uniform in [min_bend_angle, max_bend_angle].
    double min_bend_angle = 0.5;
    double max_bend_angle = 3.0;

    // noisy_isometry
    /// Noise std as a multiple of the rest mesh mean edge length.
    double sigma = 0.0;

    // bifurcating
    /// Step fraction at which the branches diverge.
    double switch_fraction = 0.5;
    /// Peak out-of-plane displacement relative to the strip length.
    double amplitude = 0.25;

    // latent_ito
    int d_latent = 2;
    ObservationMap phi = ObservationMap::PolynomialWarp;
    /// Matrix of the linear map (identity if unset).
    std::optional<Eigen::Matrix3d> linear_map;
    double latent_width = 2.0;
    double latent_height = 1.0;
    int latent_nx = 20;
    int latent_ny = 10;
    double ou_theta = 1.0;
    double ou_noise = 0.05;
    double dt = 0.1;
    /// Observation noise std (absolute), from a separate stream.
    double observation_noise = 0.0;
};

struct RigidMotion {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::RowVector3d translation = Eigen::RowVector3d::Zero();
    Eigen::RowVector3d center = Eigen::RowVector3d::Zero();
};

/// Latent coordinates behind a latent_ito bundle.
struct LatentRecord {
    /// Per-vertex latent grid point q_k (N x 3, trailing zeros).
    Points vertex_latent;
    /// Stationary variance of each latent OU coordinate.
    double stationary_variance = 0;
    int d_latent = 0;
};

struct GeneratedBundle {
    SimulationBundle bundle;
    /// Rest (undeformed) positions.
    Points rest;
    /// cylinder_rigid: one motion per sim.
    std::vector<RigidMotion> motions;
    std::optional<LatentRecord> latent;
};

/// Uniformly distributed rotation (unit quaternion from four normals).
Eigen::Matrix3d random_rotation(CounterRng& rng);

GeneratedBundle gen_cylinder_rigid(const GeneratorSpec& spec, unsigned threads = 0);
/// Flat strip u in [-L/2, L/2] rolled onto a cylinder of radius L / angle;
/// each step uses angle * step / (n_steps - 1), or the full angle when
/// n_steps = 1. Label "bend_angle" holds each sim's final angle.
GeneratedBundle gen_isometric_bend(const GeneratorSpec& spec, unsigned threads = 0);
/// Isometric bend plus Gaussian vertex noise of std sigma * mean edge.
GeneratedBundle gen_noisy_isometry(const GeneratorSpec& spec, unsigned threads = 0);
/// Vertex k sits at phi(q_k + xi_k(t)), where q_k lies on a latent grid and the
/// first d_latent coordinates of xi_k follow independent Ornstein-Uhlenbeck
/// paths started from their stationary law.
GeneratedBundle gen_latent_ito(const GeneratorSpec& spec, unsigned threads = 0);
/// Label "branch" holds 0 or 1 per sim.
GeneratedBundle gen_bifurcating(const GeneratorSpec& spec, unsigned threads = 0);

GeneratedBundle generate(const GeneratorSpec& spec, unsigned threads = 0);

/// Applies the observation map to latent points (rows).
Points observe(const GeneratorSpec& spec, const Points& latent);

/// "sim,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,cx,cy,cz".
std::string motions_csv(const std::vector<RigidMotion>& motions);
/// "k,q0,q1,q2".
std::string latent_csv(const LatentRecord& record);

/// Writes the bundle plus any sidecar CSVs (motions.csv, latent.csv).
std::filesystem::path save_generated(const GeneratedBundle& generated,
                                     const std::filesystem::path& directory);

} // namespace simspec
