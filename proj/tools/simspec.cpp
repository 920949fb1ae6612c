// simspec command-line interface.
//
// Exit codes: 0 success, 2 invalid input or arguments, 3 solver failure.

#include "simspec/embeddings.hpp"
#include "simspec/error.hpp"
#include "simspec/fp_operator.hpp"
#include "simspec/io.hpp"
#include "simspec/lb_operator.hpp"
#include "simspec/parallel.hpp"
#include "simspec/spectral.hpp"
#include "simspec/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace simspec;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> g_argv;
unsigned g_threads = 0;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size())
            throw Error(ErrorCode::InvalidArgument, "'" + item + "' is not a number");
        out.push_back(v);
    }
    return out;
}

fs::path manifest_path(const fs::path& p) {
    return fs::is_directory(p) ? p / "manifest.json" : p;
}

/// Options of the subcommand as given or defaulted, for provenance.
json options_json(const CLI::App& sub) {
    json out = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_name();
        if (name == "--help" || name == "-h") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            std::string joined;
            for (std::size_t i = 0; i < results.size(); ++i) joined += (i ? "," : "") + results[i];
            out[name] = joined;
        } else {
            out[name] = opt->get_default_str();
        }
    }
    return out;
}

void write_provenance(const fs::path& dir, const CLI::App& sub, json resolved = json::object()) {
    json p;
    p["tool"] = "simspec";
    p["version"] = kVersion;
    p["command"] = sub.get_name();
    p["argv"] = g_argv;
    p["options"] = options_json(sub);
    p["resolved"] = std::move(resolved);
    write_text_file(dir / "provenance.json", p.dump(2) + '\n');
}

json params_json(const std::map<std::string, double>& params) {
    json out = json::object();
    for (const auto& [k, v] : params) out[k] = v;
    return out;
}

std::vector<Channel> parse_channels(const std::string& text) {
    std::vector<Channel> out;
    for (const auto& item : split_list(text)) out.push_back(Channel::parse(item));
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no channels given");
    return out;
}

/// Channel names to use for a coefficient set: the requested ones, or all.
std::vector<std::string> select_channels(const CoefficientSet& coeffs, const std::string& text) {
    if (text.empty()) return coeffs.channels;
    std::vector<std::string> names = split_list(text);
    for (const auto& n : names) coeffs.channel_index(n);
    return names;
}

void write_basis_outputs(const fs::path& out, const SymmetricOperator& op, const SpectralBasis& basis,
                         const std::string& coo_name) {
    fs::create_directories(out);
    export_coo_csv(out / coo_name, op.weights);
    write_text_file(out / "operator.json", operator_params_json(op));
    save_basis(basis, out);
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string kind = "cylinder_rigid";
    std::string phi = "polynomial_warp";
    std::string out;
    GeneratorSpec spec;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
    CLI::App* sub = app.add_subcommand("generate", "Write a synthetic simulation bundle");
    auto& s = a.spec;
    sub->add_option("--kind", a.kind,
                    "cylinder_rigid | isometric_bend | noisy_isometry | latent_ito | bifurcating")
        ->capture_default_str();
    sub->add_option("--seed", s.seed, "Master seed")->capture_default_str();
    sub->add_option("--sims", s.n_sims, "Number of simulations m")->capture_default_str();
    sub->add_option("--steps", s.n_steps, "Time steps per simulation")->capture_default_str();
    sub->add_option("--out", a.out, "Output directory")->required();

    auto* g = "Cylinder";
    sub->add_option("--radius", s.cylinder_radius, "Cylinder radius")->capture_default_str()->group(g);
    sub->add_option("--height", s.cylinder_height, "Cylinder height")->capture_default_str()->group(g);
    sub->add_option("--around", s.cylinder_around, "Vertices per ring")->capture_default_str()->group(g);
    sub->add_option("--along", s.cylinder_along, "Ring intervals")->capture_default_str()->group(g);
    sub->add_option("--max-translation", s.max_translation, "Translation box half-width")
        ->capture_default_str()->group(g);
    sub->add_option("--rotation-scale", s.rotation_scale, "Rotation angle multiplier (0 = none)")
        ->capture_default_str()->group(g);

    g = "Strip";
    sub->add_option("--length", s.strip_length, "Strip length")->capture_default_str()->group(g);
    sub->add_option("--width", s.strip_width, "Strip width")->capture_default_str()->group(g);
    sub->add_option("--nx", s.strip_nx, "Cells along the strip")->capture_default_str()->group(g);
    sub->add_option("--ny", s.strip_ny, "Cells across the strip")->capture_default_str()->group(g);
    sub->add_option("--min-angle", s.min_bend_angle, "Smallest final bend angle (rad)")
        ->capture_default_str()->group(g);
    sub->add_option("--max-angle", s.max_bend_angle, "Largest final bend angle (rad)")
        ->capture_default_str()->group(g);
    sub->add_option("--sigma", s.sigma, "Vertex noise std in mean edge lengths (noisy_isometry)")
        ->capture_default_str()->group(g);
    sub->add_option("--switch-fraction", s.switch_fraction, "Branch split point in [0, 1) (bifurcating)")
        ->capture_default_str()->group(g);
    sub->add_option("--amplitude", s.amplitude, "Peak lift relative to length (bifurcating)")
        ->capture_default_str()->group(g);

    g = "Latent";
    sub->add_option("--d-latent", s.d_latent, "Latent OU factors per vertex (1-3)")
        ->capture_default_str()->group(g);
    sub->add_option("--phi", a.phi, "linear | polynomial_warp")->capture_default_str()->group(g);
    sub->add_option("--latent-width", s.latent_width, "Latent grid width")->capture_default_str()->group(g);
    sub->add_option("--latent-height", s.latent_height, "Latent grid height")->capture_default_str()->group(g);
    sub->add_option("--latent-nx", s.latent_nx, "Latent grid cells in x")->capture_default_str()->group(g);
    sub->add_option("--latent-ny", s.latent_ny, "Latent grid cells in y")->capture_default_str()->group(g);
    sub->add_option("--theta", s.ou_theta, "OU mean reversion rate")->capture_default_str()->group(g);
    sub->add_option("--ou-noise", s.ou_noise, "OU diffusion coefficient")->capture_default_str()->group(g);
    sub->add_option("--dt", s.dt, "Euler-Maruyama step")->capture_default_str()->group(g);
    sub->add_option("--obs-noise", s.observation_noise, "Observation noise std")
        ->capture_default_str()->group(g);
}

void run_generate(const CLI::App& sub, GenerateArgs& a) {
    a.spec.kind = generator_kind_from_string(a.kind);
    a.spec.phi = observation_map_from_string(a.phi);
    const GeneratedBundle g = generate(a.spec, g_threads);
    const fs::path out = a.out;
    save_generated(g, out);
    write_provenance(out, sub, {{"n_vertices", g.bundle.n_vertices()}});
    std::cout << "wrote " << a.spec.n_sims << " x " << a.spec.n_steps << " frames of "
              << g.bundle.n_vertices() << " vertices to " << out.string() << '\n';
}

// ---------------------------------------------------------------------------

struct BuildArgs {
    std::string mesh, bundle, out;
    std::optional<double> h, epsilon;
    double rho = 3.0;
    std::string weighting = "symmetric";
    std::string variant = "sum_of_inverses";
    std::string reference = "0";
    std::string solver = "auto";
    int p = 20;
    int step = 0;
    int knn = 0;
};

/// Requested eigenpair count, clamped to the operator dimension.
int clamp_count(int p, Eigen::Index n) {
    if (p > n) {
        warn("--p " + std::to_string(p) + " exceeds the " + std::to_string(n) + " vertices; using " +
             std::to_string(n));
        return static_cast<int>(n);
    }
    return p;
}

void add_build_common(CLI::App* sub, BuildArgs& a) {
    sub->add_option("--p", a.p, "Number of eigenpairs (including the trivial one)")->capture_default_str();
    sub->add_option("--solver", a.solver, "auto | dense | lanczos (auto: dense up to 3000 vertices)")
        ->capture_default_str();
    sub->add_option("--out", a.out, "Output directory")->required();
}

void add_build_lb(CLI::App& app, BuildArgs& a) {
    CLI::App* sub = app.add_subcommand("build-lb", "Assemble the Laplace-Beltrami operator and its eigenbasis");
    sub->set_help_flag("--help", "Print this help message and exit"); // frees -h for the kernel width
    auto* src = sub->add_option("--mesh", a.mesh, "OFF or OBJ mesh");
    sub->add_option("--bundle", a.bundle, "Bundle manifest (or its directory); its mesh is used")
        ->excludes(src);
    sub->add_option("--h", a.h, "Kernel width h; default (2 * mean edge length)^2");
    sub->add_option("--rho", a.rho, "Neighborhood radius in units of sqrt(h)")->capture_default_str();
    sub->add_option("--weighting", a.weighting,
                    "symmetric (area_k * area_l) | eq31 (one-sided, symmetrized by half-sum)")
        ->capture_default_str();
    add_build_common(sub, a);
}

void run_build_lb(const CLI::App& sub, const BuildArgs& a) {
    if (a.mesh.empty() == a.bundle.empty())
        throw Error(ErrorCode::InvalidArgument, "exactly one of --mesh or --bundle is required");
    const TriMesh mesh =
        a.mesh.empty() ? load_bundle(manifest_path(a.bundle)).mesh() : load_mesh(a.mesh);
    LbParams params = default_lb_params(mesh);
    if (a.h) params.h = *a.h;
    params.rho = a.rho;
    if (a.weighting == "eq31") params.weighting = LbWeighting::OneSided;
    else if (a.weighting != "symmetric")
        throw Error(ErrorCode::InvalidArgument, "unknown weighting '" + a.weighting + "'");

    const SymmetricOperator op = assemble_lb(mesh, params, g_threads);
    const SpectralBasis basis = decompose(op, clamp_count(a.p, op.dimension()), solver_from_string(a.solver));
    write_basis_outputs(a.out, op, basis, "operator_coo.csv");
    write_provenance(a.out, sub, {{"operator", params_json(op.params)}, {"n_vertices", mesh.n_vertices()}});
    std::cout << "lambda_0.." << basis.size() - 1 << " = " << format_double(basis.eigenvalues(0))
              << " .. " << format_double(basis.eigenvalues(basis.size() - 1)) << '\n';
}

void add_build_fp(CLI::App& app, BuildArgs& a) {
    CLI::App* sub = app.add_subcommand("build-fp", "Assemble the Fokker-Planck operator of a bundle and its eigenbasis");
    sub->add_option("--bundle", a.bundle, "Bundle manifest (or its directory)")->required();
    sub->add_option("--step", a.step, "Time step whose simulation cloud is used")->capture_default_str();
    sub->add_option("--epsilon", a.epsilon,
                    "Kernel bandwidth; default median of the nonzero squared NICA distances");
    sub->add_option("--variant", a.variant, "sum_of_inverses | inverse_of_sum")->capture_default_str();
    sub->add_option("--reference", a.reference, "Reference positions: simulation index or 'mean'")
        ->capture_default_str();
    sub->add_option("--knn", a.knn, "Keep k nearest kernel entries per row (0 = dense)")->capture_default_str();
    add_build_common(sub, a);
}

void run_build_fp(const CLI::App& sub, const BuildArgs& a) {
    const SimulationBundle bundle = load_bundle(manifest_path(a.bundle));
    FpParams params;
    params.epsilon = a.epsilon;
    params.knn = a.knn;
    if (a.variant == "sum_of_inverses") params.variant = NicaVariant::SumOfInverses;
    else if (a.variant == "inverse_of_sum") params.variant = NicaVariant::InverseOfSum;
    else throw Error(ErrorCode::InvalidArgument, "unknown variant '" + a.variant + "'");
    if (a.reference == "mean") {
        params.reference_sim = -1;
    } else {
        try {
            params.reference_sim = std::stoi(a.reference);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "--reference must be an index or 'mean'");
        }
    }
    const FpOperatorPair pair = assemble_fp(bundle, a.step, params, g_threads);
    const SpectralBasis basis = decompose(pair, clamp_count(a.p, pair.ws.dimension()), solver_from_string(a.solver));
    write_basis_outputs(a.out, pair.ws, basis, "ws_coo.csv");
    write_provenance(a.out, sub, {{"operator", params_json(pair.ws.params)}, {"epsilon", pair.epsilon}});
    std::cout << "epsilon = " << format_double(pair.epsilon) << ", lambda_1 = "
              << (basis.size() > 1 ? format_double(basis.eigenvalues(1)) : std::string("n/a")) << '\n';
}

// ---------------------------------------------------------------------------

struct ProjectArgs {
    std::string bundle, basis, coeffs, out;
    std::string channels = "x,y,z";
    int p = -1;
};

void add_project(CLI::App& app, ProjectArgs& a) {
    CLI::App* sub = app.add_subcommand("project", "Project every frame's channels onto a basis");
    sub->add_option("--bundle", a.bundle, "Bundle manifest (or its directory)")->required();
    sub->add_option("--basis", a.basis, "Basis directory from build-lb or build-fp")->required();
    sub->add_option("--channels", a.channels, "Comma list of x, y, z, dnd:A:B")->capture_default_str();
    sub->add_option("--p", a.p, "Leading coefficients kept (-1 = all)")->capture_default_str();
    sub->add_option("--out", a.out, "Output directory")->required();
}

void run_project(const CLI::App& sub, const ProjectArgs& a) {
    const SimulationBundle bundle = load_bundle(manifest_path(a.bundle));
    const SpectralBasis basis = load_basis(a.basis);
    const CoefficientSet coeffs = project_bundle(basis, bundle, parse_channels(a.channels), a.p, g_threads);
    fs::create_directories(a.out);
    save_coefficients_csv(coeffs, fs::path(a.out) / "coefficients.csv");
    write_provenance(a.out, sub, {{"n_coeffs", coeffs.n_coeffs()}});
    std::cout << coeffs.alpha.rows() << " coefficient rows of length " << coeffs.n_coeffs() << '\n';
}

void add_reconstruct(CLI::App& app, ProjectArgs& a) {
    CLI::App* sub = app.add_subcommand("reconstruct", "Rebuild frames from x, y, z coefficients");
    sub->add_option("--basis", a.basis, "Basis directory")->required();
    sub->add_option("--coeffs", a.coeffs, "coefficients.csv from project")->required();
    sub->add_option("--bundle", a.bundle, "Bundle to measure the reconstruction error against");
    sub->add_option("--p", a.p, "Number of leading components used (-1 = all)")->capture_default_str();
    sub->add_option("--out", a.out, "Output directory")->required();
}

void run_reconstruct(const CLI::App& sub, const ProjectArgs& a) {
    const SpectralBasis basis = load_basis(a.basis);
    const CoefficientSet coeffs = load_coefficients_csv(a.coeffs);
    const int p = a.p < 0 ? static_cast<int>(coeffs.n_coeffs()) : a.p;
    if (p > coeffs.n_coeffs() || p > basis.size())
        throw Error(ErrorCode::BasisMismatch, "--p exceeds the available coefficients");
    if (coeffs.n_coeffs() > basis.size())
        throw Error(ErrorCode::BasisMismatch, "coefficient set is longer than the basis");
    const int cx = coeffs.channel_index("x"), cy = coeffs.channel_index("y"), cz = coeffs.channel_index("z");

    std::optional<SimulationBundle> bundle;
    if (!a.bundle.empty()) {
        bundle = load_bundle(manifest_path(a.bundle));
        if (bundle->n_vertices() != basis.dimension() || bundle->n_sims() != coeffs.n_sims ||
            bundle->n_steps() != coeffs.n_steps)
            throw Error(ErrorCode::BasisMismatch, "bundle does not match the coefficient set");
    }
    const fs::path out = a.out;
    fs::create_directories(out / "frames");
    double max_abs = 0, num = 0, den = 0;
    for (int sim = 0; sim < coeffs.n_sims; ++sim)
        for (int step = 0; step < coeffs.n_steps; ++step) {
            Points frame(basis.dimension(), 3);
            frame.col(0) = reconstruct(basis, coeffs.at(sim, step, cx), p).values;
            frame.col(1) = reconstruct(basis, coeffs.at(sim, step, cy), p).values;
            frame.col(2) = reconstruct(basis, coeffs.at(sim, step, cz), p).values;
            write_raw_f64(out / "frames" / frame_file_name("sim{sim}_step{step}.bin", sim, step),
                          frame.data(), static_cast<std::size_t>(frame.size()));
            if (bundle) {
                const Points& truth = bundle->frame(sim, step);
                max_abs = std::max(max_abs, (frame - truth).cwiseAbs().maxCoeff());
                num += (frame - truth).squaredNorm();
                den += truth.squaredNorm();
            }
        }
    json summary;
    summary["p"] = p;
    summary["frame_layout"] = "row-major float64 little-endian, n_vertices x 3";
    if (bundle) {
        summary["max_abs_error"] = max_abs;
        summary["relative_l2_error"] = den > 0 ? std::sqrt(num / den) : 0.0;
        std::cout << "p = " << p << ": max abs error " << format_double(max_abs)
                  << ", relative L2 error " << format_double(den > 0 ? std::sqrt(num / den) : 0.0) << '\n';
    }
    write_text_file(out / "summary.json", summary.dump(2) + '\n');
    write_provenance(out, sub);
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string coeffs, basis, bundle, out;
    std::string channels;
    std::string offsets = "-1,0,1";
    std::string axes = "xyz";
    std::optional<double> epsilon;
    double alpha = 1.0;
    double energy_fraction = 0.99;
    int p = -1;
    int dim = 3;
    int step = -1;
    int j = 1;
    int sim = 0;
    int component = 1;
};

void add_analyze_decay(CLI::App& app, AnalyzeArgs& a) {
    CLI::App* sub = app.add_subcommand("analyze-decay", "Coefficient magnitude, variance and energy per index");
    sub->add_option("--coeffs", a.coeffs, "coefficients.csv")->required();
    sub->add_option("--energy-fraction", a.energy_fraction, "Energy share defining the suggested p")
        ->capture_default_str();
    sub->add_option("--out", a.out, "Output directory")->required();
}

void run_analyze_decay(const CLI::App& sub, const AnalyzeArgs& a) {
    const CoefficientSet coeffs = load_coefficients_csv(a.coeffs);
    const DecayReport report = decay_report(coeffs, a.energy_fraction);
    std::string table = "channel,j,max_abs,variance,energy\n";
    json slopes = json::object();
    for (const auto& ch : report.channels) {
        for (Eigen::Index j = 0; j < ch.max_abs.size(); ++j)
            table += ch.channel + ',' + std::to_string(j) + ',' + format_double(ch.max_abs(j)) + ',' +
                     format_double(ch.variance(j)) + ',' + format_double(ch.energy(j)) + '\n';
        slopes[ch.channel] = ch.loglog_slope;
    }
    fs::create_directories(a.out);
    write_text_file(fs::path(a.out) / "decay.csv", table);
    json summary;
    summary["energy_fraction"] = report.energy_fraction;
    summary["suggested_p"] = report.threshold_p;
    summary["loglog_slope"] = slopes;
    write_text_file(fs::path(a.out) / "summary.json", summary.dump(2) + '\n');
    write_provenance(a.out, sub);
    std::cout << "suggested truncation p = " << report.threshold_p << " ("
              << format_double(100 * report.energy_fraction) << "% of coefficient energy)\n";
    for (const auto& ch : report.channels)
        std::cout << "  " << ch.channel << ": log-log slope of max|alpha_j| = "
                  << format_double(ch.loglog_slope) << '\n';
}

void add_embed_common(CLI::App* sub, AnalyzeArgs& a) {
    sub->add_option("--coeffs", a.coeffs, "coefficients.csv")->required();
    sub->add_option("--channels", a.channels, "Comma list of channels used (default: all)");
    sub->add_option("--p", a.p, "Leading coefficient columns used per channel (-1 = all)")->capture_default_str();
    sub->add_option("--dim", a.dim, "Embedding dimension")->capture_default_str();
    sub->add_option("--step", a.step, "Use only this time step (-1 = all steps)")->capture_default_str();
    sub->add_option("--out", a.out, "Output directory")->required();
}

Eigen::MatrixXd embed_features(const AnalyzeArgs& a, std::vector<std::pair<int, int>>& items) {
    const CoefficientSet coeffs = load_coefficients_csv(a.coeffs);
    const int p = a.p < 0 ? static_cast<int>(coeffs.n_coeffs()) : a.p;
    Eigen::MatrixXd features = coefficient_features(coeffs, select_channels(coeffs, a.channels), 0, p, &items);
    if (a.step < 0) return features;
    if (a.step >= coeffs.n_steps) throw Error(ErrorCode::IndexOutOfRange, "--step out of range");
    std::vector<std::pair<int, int>> kept;
    Eigen::MatrixXd out(coeffs.n_sims, features.cols());
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].second == a.step) {
            out.row(static_cast<Eigen::Index>(kept.size())) = features.row(static_cast<Eigen::Index>(i));
            kept.push_back(items[i]);
        }
    items = kept;
    return out;
}

void add_embed_dmaps(CLI::App& app, AnalyzeArgs& a) {
    CLI::App* sub = app.add_subcommand("embed-dmaps", "Diffusion-maps embedding of coefficient rows");
    add_embed_common(sub, a);
    sub->add_option("--epsilon", a.epsilon, "Kernel bandwidth; default median squared pairwise distance");
    sub->add_option("--alpha", a.alpha, "Density normalization exponent")->capture_default_str();
}

void run_embed_dmaps(const CLI::App& sub, const AnalyzeArgs& a) {
    std::vector<std::pair<int, int>> items;
    const Eigen::MatrixXd features = embed_features(a, items);
    DiffusionMapOptions opts;
    opts.epsilon = a.epsilon;
    opts.alpha = a.alpha;
    Embedding e = diffusion_maps(features, a.dim, opts, g_threads);
    e.items = items;
    fs::create_directories(a.out);
    write_text_file(fs::path(a.out) / "embedding.csv", embedding_csv(e));
    json meta;
    meta["method"] = e.method;
    meta["params"] = params_json(e.params);
    meta["eigenvalues"] = std::vector<double>(e.eigenvalues.data(), e.eigenvalues.data() + e.eigenvalues.size());
    write_text_file(fs::path(a.out) / "embedding.json", meta.dump(2) + '\n');
    write_provenance(a.out, sub);
    std::cout << e.size() << " x " << e.dim() << " diffusion-maps embedding, epsilon = "
              << format_double(e.params.at("epsilon")) << '\n';
}

void add_embed_pca(CLI::App& app, AnalyzeArgs& a) {
    CLI::App* sub = app.add_subcommand("embed-pca", "PCA baseline embedding of coefficient rows");
    add_embed_common(sub, a);
}

void run_embed_pca(const CLI::App& sub, const AnalyzeArgs& a) {
    std::vector<std::pair<int, int>> items;
    const Eigen::MatrixXd features = embed_features(a, items);
    PcaResult r = pca(features, a.dim);
    r.embedding.items = items;
    fs::create_directories(a.out);
    write_text_file(fs::path(a.out) / "embedding.csv", embedding_csv(r.embedding));
    std::string comps = "feature";
    for (Eigen::Index c = 0; c < r.components.cols(); ++c) comps += ",c" + std::to_string(c);
    comps += '\n';
    for (Eigen::Index f = 0; f < r.components.rows(); ++f) {
        comps += std::to_string(f);
        for (Eigen::Index c = 0; c < r.components.cols(); ++c) comps += ',' + format_double(r.components(f, c));
        comps += '\n';
    }
    write_text_file(fs::path(a.out) / "components.csv", comps);
    json meta;
    meta["method"] = "pca";
    meta["singular_values"] =
        std::vector<double>(r.singular_values.data(), r.singular_values.data() + r.singular_values.size());
    meta["explained_ratio"] =
        std::vector<double>(r.explained_ratio.data(), r.explained_ratio.data() + r.explained_ratio.size());
    write_text_file(fs::path(a.out) / "embedding.json", meta.dump(2) + '\n');
    write_provenance(a.out, sub);
    std::cout << "explained variance of " << a.dim << " components: "
              << format_double(r.explained_ratio.sum()) << '\n';
}

void add_trajectory(CLI::App& app, AnalyzeArgs& a) {
    CLI::App* sub = app.add_subcommand("trajectory", "Export component j of x, y, z for every (sim, step)");
    sub->add_option("--coeffs", a.coeffs, "coefficients.csv")->required();
    sub->add_option("--j", a.j, "Component index (1 = first nontrivial)")->capture_default_str();
    sub->add_option("--channels", a.channels, "Three channel names for the axes (default x,y,z)");
    sub->add_option("--out", a.out, "Output directory")->required();
}

void run_trajectory(const CLI::App& sub, const AnalyzeArgs& a) {
    const CoefficientSet coeffs = load_coefficients_csv(a.coeffs);
    std::array<std::string, 3> names{"x", "y", "z"};
    if (!a.channels.empty()) {
        const auto list = split_list(a.channels);
        if (list.size() != 3) throw Error(ErrorCode::InvalidArgument, "--channels needs three names");
        std::copy(list.begin(), list.end(), names.begin());
    }
    const auto rows = time_trajectory_export(coeffs, a.j, names);
    fs::create_directories(a.out);
    write_text_file(fs::path(a.out) / "trajectory.csv", trajectory_csv(rows));
    write_provenance(a.out, sub);
    std::cout << rows.size() << " trajectory rows\n";
}

void add_morph(CLI::App& app, AnalyzeArgs& a) {
    CLI::App* sub = app.add_subcommand("morph", "Sweep one component of a simulation and reconstruct");
    sub->add_option("--basis", a.basis, "Basis directory")->required();
    sub->add_option("--coeffs", a.coeffs, "coefficients.csv with x, y, z channels")->required();
    sub->add_option("--sim", a.sim, "Reference simulation")->capture_default_str();
    sub->add_option("--step", a.step, "Reference time step")->default_val(0);
    sub->add_option("--component", a.component, "Swept component")->capture_default_str();
    sub->add_option("--offsets", a.offsets, "Comma list of offsets added to the original coefficients")
        ->capture_default_str();
    sub->add_option("--axes", a.axes, "Channels receiving the offset, subset of xyz")->capture_default_str();
    sub->add_option("--bundle", a.bundle, "Bundle providing faces; frames are then also written as OFF");
    sub->add_option("--out", a.out, "Output directory")->required();
}

void run_morph(const CLI::App& sub, const AnalyzeArgs& a) {
    const SpectralBasis basis = load_basis(a.basis);
    const CoefficientSet coeffs = load_coefficients_csv(a.coeffs);
    if (coeffs.n_coeffs() > basis.size())
        throw Error(ErrorCode::BasisMismatch, "coefficient set is longer than the basis");
    const int step = std::max(a.step, 0);
    Eigen::MatrixXd alpha(coeffs.n_coeffs(), 3);
    const char* names[] = {"x", "y", "z"};
    for (int c = 0; c < 3; ++c) alpha.col(c) = coeffs.at(a.sim, step, coeffs.channel_index(names[c]));

    Eigen::Vector3d mask = Eigen::Vector3d::Zero();
    for (char ch : a.axes) {
        if (ch < 'x' || ch > 'z') throw Error(ErrorCode::InvalidArgument, "--axes must use x, y, z");
        mask(ch - 'x') = 1;
    }
    if (a.component < 0 || a.component >= alpha.rows())
        throw Error(ErrorCode::IndexOutOfRange, "--component out of range");
    std::vector<Eigen::Vector3d> sweep;
    for (double off : parse_doubles(a.offsets))
        sweep.push_back(alpha.row(a.component).transpose() + off * mask);
    const auto frames = mode_morph(basis, alpha, a.component, sweep);

    std::optional<TriMesh> mesh;
    if (!a.bundle.empty()) mesh = load_bundle(manifest_path(a.bundle)).mesh();
    const fs::path out = a.out;
    fs::create_directories(out);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        write_raw_f64(out / ("morph_" + std::to_string(i) + ".bin"), frames[i].data(),
                      static_cast<std::size_t>(frames[i].size()));
        if (mesh) save_off(out / ("morph_" + std::to_string(i) + ".off"), frames[i], mesh->faces);
    }
    json meta;
    meta["frame_layout"] = "row-major float64 little-endian, n_vertices x 3";
    json values = json::array();
    for (const auto& v : sweep) values.push_back({v(0), v(1), v(2)});
    meta["values"] = values;
    write_text_file(out / "morph.json", meta.dump(2) + '\n');
    write_provenance(out, sub);
    std::cout << frames.size() << " morph frames\n";
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
    std::string mesh, bundle, basis;
};

void add_validate(CLI::App& app, ValidateArgs& a) {
    CLI::App* sub = app.add_subcommand("validate", "Check a mesh, bundle or basis and report");
    sub->add_option("--mesh", a.mesh, "OFF or OBJ mesh");
    sub->add_option("--bundle", a.bundle, "Bundle manifest (or its directory)");
    sub->add_option("--basis", a.basis, "Basis directory");
}

void run_validate(const ValidateArgs& a) {
    if (a.mesh.empty() && a.bundle.empty() && a.basis.empty())
        throw Error(ErrorCode::InvalidArgument, "nothing to validate");
    if (!a.mesh.empty()) {
        const TriMesh m = load_mesh(a.mesh);
        std::cout << "mesh: " << m.n_vertices() << " vertices, " << m.n_faces() << " faces, area "
                  << format_double(m.total_area()) << ", mean edge "
                  << format_double(mean_edge_length(m.vertices, m.faces)) << '\n';
    }
    if (!a.bundle.empty()) {
        const SimulationBundle b = load_bundle(manifest_path(a.bundle));
        std::cout << "bundle: " << b.n_sims() << " sims x " << b.n_steps() << " steps, "
                  << b.n_vertices() << " vertices\n";
    }
    if (!a.basis.empty()) {
        const SpectralBasis s = load_basis(a.basis);
        std::cout << "basis: " << to_string(s.kind) << ", " << s.size() << " vectors of length "
                  << s.dimension() << ", orthonormality error " << format_double(orthonormality_error(s))
                  << '\n';
    }
    std::cout << "ok\n";
}

int exit_code_for(const Error& e) {
    return e.code() == ErrorCode::ConvergenceFailure ? 3 : 2;
}

} // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);
    CLI::App app{"simspec: spectral analysis of simulation bundles on triangle meshes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.add_option("--threads", g_threads, "Worker threads (0 = all available cores); results do not depend on it")
        ->capture_default_str();

    GenerateArgs gen;
    BuildArgs lb, fp;
    ProjectArgs proj, recon;
    AnalyzeArgs decay, dmaps, pcaa, traj, morph;
    ValidateArgs val;
    add_generate(app, gen);
    add_build_lb(app, lb);
    add_build_fp(app, fp);
    add_project(app, proj);
    add_reconstruct(app, recon);
    add_analyze_decay(app, decay);
    add_embed_dmaps(app, dmaps);
    add_embed_pca(app, pcaa);
    add_trajectory(app, traj);
    add_morph(app, morph);
    add_validate(app, val);
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    set_warning_handler([](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; });
    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "generate") run_generate(*sub, gen);
        else if (name == "build-lb") run_build_lb(*sub, lb);
        else if (name == "build-fp") run_build_fp(*sub, fp);
        else if (name == "project") run_project(*sub, proj);
        else if (name == "reconstruct") run_reconstruct(*sub, recon);
        else if (name == "analyze-decay") run_analyze_decay(*sub, decay);
        else if (name == "embed-dmaps") run_embed_dmaps(*sub, dmaps);
        else if (name == "embed-pca") run_embed_pca(*sub, pcaa);
        else if (name == "trajectory") run_trajectory(*sub, traj);
        else if (name == "morph") run_morph(*sub, morph);
        else if (name == "validate") run_validate(val);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
