#include "simspec/synthetic.hpp"

#include "simspec/error.hpp"
#include "simspec/io.hpp"
#include "simspec/parallel.hpp"
#include "simspec/shapes.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace simspec {

namespace {

// Stream identifiers keep the draws of unrelated quantities independent.
constexpr std::uint64_t kMotionStream = 1;
constexpr std::uint64_t kBendStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kLatentStream = 4;
constexpr std::uint64_t kObservationStream = 5;
constexpr std::uint64_t kBranchStream = 6;

void check_counts(const GeneratorSpec& spec) {
    if (spec.n_sims < 1) throw Error(ErrorCode::InvalidArgument, "n_sims must be at least 1");
    if (spec.n_steps < 1) throw Error(ErrorCode::InvalidArgument, "n_steps must be at least 1");
}

double step_fraction(int step, int n_steps) {
    return n_steps > 1 ? static_cast<double>(step) / (n_steps - 1) : 1.0;
}

TriMesh strip_mesh(const GeneratorSpec& spec) {
    if (!(spec.strip_length > 0) || !(spec.strip_width > 0) || spec.strip_nx < 1 || spec.strip_ny < 1)
        throw Error(ErrorCode::InvalidArgument, "strip dimensions must be positive");
    return shapes::grid(spec.strip_length, spec.strip_width, spec.strip_nx, spec.strip_ny,
                        -spec.strip_length / 2, -spec.strip_width / 2);
}

Points bend_strip(const Points& rest, double angle, double length) {
    Points out = rest;
    if (std::abs(angle) < 1e-12) return out;
    const double r = length / angle;
    for (Eigen::Index k = 0; k < rest.rows(); ++k) {
        const double u = rest(k, 0);
        out(k, 0) = r * std::sin(u / r);
        out(k, 2) = r * (1 - std::cos(u / r));
    }
    return out;
}

} // namespace

std::string to_string(GeneratorKind kind) {
    switch (kind) {
    case GeneratorKind::CylinderRigid: return "cylinder_rigid";
    case GeneratorKind::IsometricBend: return "isometric_bend";
    case GeneratorKind::NoisyIsometry: return "noisy_isometry";
    case GeneratorKind::LatentIto: return "latent_ito";
    case GeneratorKind::Bifurcating: return "bifurcating";
    }
    return "unknown";
}

GeneratorKind generator_kind_from_string(const std::string& text) {
    for (auto k : {GeneratorKind::CylinderRigid, GeneratorKind::IsometricBend,
                   GeneratorKind::NoisyIsometry, GeneratorKind::LatentIto, GeneratorKind::Bifurcating})
        if (to_string(k) == text) return k;
    throw Error(ErrorCode::InvalidArgument, "unknown generator kind '" + text + "'");
}

std::string to_string(ObservationMap phi) {
    return phi == ObservationMap::Linear ? "linear" : "polynomial_warp";
}

ObservationMap observation_map_from_string(const std::string& text) {
    if (text == "linear") return ObservationMap::Linear;
    if (text == "polynomial_warp") return ObservationMap::PolynomialWarp;
    throw Error(ErrorCode::InvalidArgument, "unknown observation map '" + text + "'");
}

Eigen::Matrix3d random_rotation(CounterRng& rng) {
    Eigen::Vector4d v;
    do {
        for (int i = 0; i < 4; ++i) v(i) = rng.normal();
    } while (v.norm() < 1e-12);
    v.normalize();
    return Eigen::Quaterniond(v(0), v(1), v(2), v(3)).toRotationMatrix();
}

GeneratedBundle gen_cylinder_rigid(const GeneratorSpec& spec, unsigned threads) {
    check_counts(spec);
    TriMesh mesh = shapes::cylinder(spec.cylinder_radius, spec.cylinder_height,
                                    spec.cylinder_around, spec.cylinder_along);
    GeneratedBundle out;
    out.rest = mesh.vertices;
    const Eigen::RowVector3d center = mesh.vertices.colwise().mean();
    const CounterRng master(spec.seed, kMotionStream);

    out.motions.resize(static_cast<std::size_t>(spec.n_sims));
    std::vector<Points> frames(static_cast<std::size_t>(spec.n_sims) * spec.n_steps);
    parallel_for(static_cast<std::size_t>(spec.n_sims), threads, [&](std::size_t sim) {
        CounterRng rng = master.split(sim);
        RigidMotion m;
        m.center = center;
        Eigen::AngleAxisd aa(random_rotation(rng));
        aa.angle() *= spec.rotation_scale;
        m.rotation = aa.toRotationMatrix();
        for (int i = 0; i < 3; ++i)
            m.translation(i) = rng.uniform(-spec.max_translation, spec.max_translation);
        const Points moved = rigid_transform(out.rest, m.rotation, m.translation, m.center);
        for (int step = 0; step < spec.n_steps; ++step)
            frames[sim * static_cast<std::size_t>(spec.n_steps) + static_cast<std::size_t>(step)] = moved;
        out.motions[sim] = m;
    });
    out.bundle = SimulationBundle(std::move(mesh), spec.n_sims, spec.n_steps, std::move(frames));
    return out;
}

GeneratedBundle gen_isometric_bend(const GeneratorSpec& spec, unsigned threads) {
    check_counts(spec);
    TriMesh mesh = strip_mesh(spec);
    GeneratedBundle out;
    out.rest = mesh.vertices;
    const CounterRng master(spec.seed, kBendStream);

    std::vector<double> angles(static_cast<std::size_t>(spec.n_sims));
    std::vector<Points> frames(static_cast<std::size_t>(spec.n_sims) * spec.n_steps);
    parallel_for(static_cast<std::size_t>(spec.n_sims), threads, [&](std::size_t sim) {
        CounterRng rng = master.split(sim);
        const double angle = rng.uniform(spec.min_bend_angle, spec.max_bend_angle);
        angles[sim] = angle;
        for (int step = 0; step < spec.n_steps; ++step)
            frames[sim * static_cast<std::size_t>(spec.n_steps) + static_cast<std::size_t>(step)] =
                bend_strip(out.rest, angle * step_fraction(step, spec.n_steps), spec.strip_length);
    });
    out.bundle = SimulationBundle(std::move(mesh), spec.n_sims, spec.n_steps, std::move(frames),
                                  {{"bend_angle", angles}});
    return out;
}

GeneratedBundle gen_noisy_isometry(const GeneratorSpec& spec, unsigned threads) {
    if (!(spec.sigma >= 0)) throw Error(ErrorCode::InvalidArgument, "sigma must be non-negative");
    GeneratedBundle out = gen_isometric_bend(spec, threads);
    if (spec.sigma == 0) return out;

    const double std_dev = spec.sigma * mean_edge_length(out.rest, out.bundle.mesh().faces);
    const CounterRng master(spec.seed, kNoiseStream);
    std::vector<Points> frames = out.bundle.frames();
    parallel_for(static_cast<std::size_t>(spec.n_sims), threads, [&](std::size_t sim) {
        CounterRng rng = master.split(sim);
        for (int step = 0; step < spec.n_steps; ++step) {
            Points& f = frames[sim * static_cast<std::size_t>(spec.n_steps) + static_cast<std::size_t>(step)];
            for (Eigen::Index k = 0; k < f.rows(); ++k)
                for (int i = 0; i < 3; ++i) f(k, i) += std_dev * rng.normal();
        }
    });
    out.bundle = SimulationBundle(out.bundle.mesh(), spec.n_sims, spec.n_steps, std::move(frames),
                                  out.bundle.labels());
    return out;
}

Points observe(const GeneratorSpec& spec, const Points& latent) {
    if (spec.phi == ObservationMap::Linear) {
        const Eigen::Matrix3d a = spec.linear_map.value_or(Eigen::Matrix3d::Identity());
        return latent * a.transpose();
    }
    Points out(latent.rows(), 3);
    for (Eigen::Index k = 0; k < latent.rows(); ++k) {
        const double x = latent(k, 0), y = latent(k, 1), z = latent(k, 2);
        out(k, 0) = x + 0.2 * y * y;
        out(k, 1) = y + 0.1 * x * x;
        out(k, 2) = z + 0.3 * x * x - 0.2 * y * y;
    }
    return out;
}

GeneratedBundle gen_latent_ito(const GeneratorSpec& spec, unsigned threads) {
    check_counts(spec);
    if (spec.d_latent < 1 || spec.d_latent > 3)
        throw Error(ErrorCode::InvalidArgument, "d_latent must be 1, 2 or 3");
    if (!(spec.ou_theta >= 0) || !(spec.ou_noise >= 0) || !(spec.dt > 0) ||
        !(spec.observation_noise >= 0))
        throw Error(ErrorCode::InvalidArgument, "OU parameters must be non-negative, dt positive");
    if (spec.phi == ObservationMap::Linear && spec.linear_map &&
        std::abs(spec.linear_map->determinant()) < 1e-12)
        throw Error(ErrorCode::InvalidArgument, "linear observation map must be invertible");

    const TriMesh latent_mesh = shapes::grid(spec.latent_width, spec.latent_height, spec.latent_nx,
                                             spec.latent_ny, -spec.latent_width / 2,
                                             -spec.latent_height / 2);
    const Points& q = latent_mesh.vertices;
    const Eigen::Index n = q.rows();

    // Stationary variance of the Euler-Maruyama recursion itself, so every
    // step shares one marginal law.
    const double decay = 1 - spec.ou_theta * spec.dt;
    const double variance = spec.ou_theta > 0 && std::abs(decay) < 1
                                ? spec.ou_noise * spec.ou_noise * spec.dt / (1 - decay * decay)
                                : 0.0;
    const double step_std = spec.ou_noise * std::sqrt(spec.dt);

    GeneratedBundle out;
    out.rest = observe(spec, q);
    const CounterRng latent_master(spec.seed, kLatentStream);
    const CounterRng obs_master(spec.seed, kObservationStream);
    std::vector<Points> frames(static_cast<std::size_t>(spec.n_sims) * spec.n_steps);
    parallel_for(static_cast<std::size_t>(spec.n_sims), threads, [&](std::size_t sim) {
        CounterRng rng = latent_master.split(sim);
        CounterRng obs = obs_master.split(sim);
        Points xi = Points::Zero(n, 3);
        for (Eigen::Index k = 0; k < n; ++k)
            for (int i = 0; i < spec.d_latent; ++i) xi(k, i) = std::sqrt(variance) * rng.normal();
        for (int step = 0; step < spec.n_steps; ++step) {
            if (step > 0)
                for (Eigen::Index k = 0; k < n; ++k)
                    for (int i = 0; i < spec.d_latent; ++i)
                        xi(k, i) = decay * xi(k, i) + step_std * rng.normal();
            Points eta = observe(spec, q + xi);
            if (spec.observation_noise > 0)
                for (Eigen::Index k = 0; k < n; ++k)
                    for (int i = 0; i < 3; ++i) eta(k, i) += spec.observation_noise * obs.normal();
            frames[sim * static_cast<std::size_t>(spec.n_steps) + static_cast<std::size_t>(step)] =
                std::move(eta);
        }
    });

    LatentRecord record;
    record.vertex_latent = q;
    record.stationary_variance = variance;
    record.d_latent = spec.d_latent;
    out.latent = std::move(record);
    out.bundle = SimulationBundle(make_trimesh(out.rest, latent_mesh.faces), spec.n_sims,
                                  spec.n_steps, std::move(frames));
    return out;
}

GeneratedBundle gen_bifurcating(const GeneratorSpec& spec, unsigned threads) {
    check_counts(spec);
    if (!(spec.switch_fraction >= 0 && spec.switch_fraction < 1))
        throw Error(ErrorCode::InvalidArgument, "switch_fraction must lie in [0, 1)");
    TriMesh mesh = strip_mesh(spec);
    GeneratedBundle out;
    out.rest = mesh.vertices;
    const double length = spec.strip_length;
    const double peak = spec.amplitude * length;
    const CounterRng master(spec.seed, kBranchStream);

    std::vector<double> branch(static_cast<std::size_t>(spec.n_sims));
    std::vector<double> scale(static_cast<std::size_t>(spec.n_sims));
    std::vector<Points> frames(static_cast<std::size_t>(spec.n_sims) * spec.n_steps);
    parallel_for(static_cast<std::size_t>(spec.n_sims), threads, [&](std::size_t sim) {
        CounterRng rng = master.split(sim);
        const int b = static_cast<int>(sim % 2);
        const double a = rng.uniform(0.8, 1.2);
        const double tilt = 0.05 * rng.normal();
        branch[sim] = b;
        scale[sim] = a;
        for (int step = 0; step < spec.n_steps; ++step) {
            const double s = step_fraction(step, spec.n_steps);
            const double late =
                std::max(0.0, s - spec.switch_fraction) / (1 - spec.switch_fraction);
            Points f = out.rest;
            for (Eigen::Index k = 0; k < f.rows(); ++k) {
                const double u = f(k, 0) / length; // in [-1/2, 1/2]
                // Shared symmetric sag, a small per-sim tilt, then one end lifts.
                const double lifted = b == 0 ? std::pow(u + 0.5, 3) : std::pow(0.5 - u, 3);
                f(k, 2) = peak * a * (s * 4 * u * u + tilt * s * 2 * u + late * lifted);
            }
            frames[sim * static_cast<std::size_t>(spec.n_steps) + static_cast<std::size_t>(step)] =
                std::move(f);
        }
    });
    out.bundle = SimulationBundle(std::move(mesh), spec.n_sims, spec.n_steps, std::move(frames),
                                  {{"branch", branch}, {"amplitude", scale}});
    return out;
}

GeneratedBundle generate(const GeneratorSpec& spec, unsigned threads) {
    switch (spec.kind) {
    case GeneratorKind::CylinderRigid: return gen_cylinder_rigid(spec, threads);
    case GeneratorKind::IsometricBend: return gen_isometric_bend(spec, threads);
    case GeneratorKind::NoisyIsometry: return gen_noisy_isometry(spec, threads);
    case GeneratorKind::LatentIto: return gen_latent_ito(spec, threads);
    case GeneratorKind::Bifurcating: return gen_bifurcating(spec, threads);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown generator kind");
}

std::string motions_csv(const std::vector<RigidMotion>& motions) {
    std::string out = "sim,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,cx,cy,cz\n";
    for (std::size_t s = 0; s < motions.size(); ++s) {
        out += std::to_string(s);
        const auto& m = motions[s];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out += ',' + format_double(m.rotation(i, j));
        for (int i = 0; i < 3; ++i) out += ',' + format_double(m.translation(i));
        for (int i = 0; i < 3; ++i) out += ',' + format_double(m.center(i));
        out += '\n';
    }
    return out;
}

std::string latent_csv(const LatentRecord& record) {
    std::string out = "k,q0,q1,q2\n";
    for (Eigen::Index k = 0; k < record.vertex_latent.rows(); ++k) {
        out += std::to_string(k);
        for (int i = 0; i < 3; ++i) out += ',' + format_double(record.vertex_latent(k, i));
        out += '\n';
    }
    return out;
}

std::filesystem::path save_generated(const GeneratedBundle& generated,
                                     const std::filesystem::path& directory) {
    const auto manifest = save_bundle(generated.bundle, directory);
    if (!generated.motions.empty())
        write_text_file(directory / "motions.csv", motions_csv(generated.motions));
    if (generated.latent) write_text_file(directory / "latent.csv", latent_csv(*generated.latent));
    return manifest;
}

} // namespace simspec
