#include "simspec/spectral.hpp"

#include "simspec/io.hpp"
#include "simspec/lanczos.hpp"
#include "simspec/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <sstream>

namespace simspec {

namespace fs = std::filesystem;

double SpectralBasis::inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    if (weight) return a.dot(weight->cwiseProduct(b));
    return a.dot(b);
}

Solver solver_from_string(const std::string& text) {
    if (text == "auto") return Solver::Auto;
    if (text == "dense") return Solver::Dense;
    if (text == "lanczos") return Solver::Lanczos;
    throw Error(ErrorCode::InvalidArgument, "unknown solver '" + text + "'");
}

void fix_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1;
        for (Eigen::Index i = 0; i < vectors.rows(); ++i)
            // Strictly greater keeps the first occurrence; a relative margin
            // keeps the choice stable under last-bit noise.
            if (std::abs(vectors(i, j)) > best * (1 + 1e-9)) {
                best = std::abs(vectors(i, j));
                arg = i;
            }
        if (vectors(arg, j) < 0) vectors.col(j) = -vectors.col(j);
    }
}

namespace {

void check_count(Eigen::Index n, int p) {
    if (p < 1 || p > n)
        throw Error(ErrorCode::InvalidArgument, "p = " + std::to_string(p) +
                                                    " outside [1, " + std::to_string(n) + "]");
}

bool use_dense(Solver solver, Eigen::Index n) {
    return solver == Solver::Dense || (solver == Solver::Auto && n <= kDenseSolverLimit);
}

} // namespace

SpectralBasis decompose(const SymmetricOperator& op, int p, Solver solver) {
    if (op.kind != OperatorKind::LaplaceBeltrami)
        throw Error(ErrorCode::InvalidArgument,
                    "Fokker-Planck operators need their degree vector; pass the FpOperatorPair");
    const Eigen::Index n = op.dimension();
    check_count(n, p);
    const SparseMatrix lap = op.laplacian();

    SpectralBasis basis;
    basis.kind = op.kind;
    basis.params = op.params;
    if (use_dense(solver, n)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(lap)};
        if (es.info() != Eigen::Success)
            throw Error(ErrorCode::ConvergenceFailure, "dense eigensolver failed");
        basis.eigenvalues = es.eigenvalues().head(p);
        basis.eigenvectors = es.eigenvectors().leftCols(p);
    } else {
        const double delta = 1e-6 * op.degree.mean();
        Eigen::SparseMatrix<double> shifted = lap;
        for (Eigen::Index k = 0; k < n; ++k) shifted.coeffRef(k, k) += delta;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
        if (ldlt.info() != Eigen::Success)
            throw Error(ErrorCode::ConvergenceFailure, "factorization of shifted Laplacian failed");
        const LanczosResult lr = lanczos_largest(
            [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out = ldlt.solve(in); }, n, p);
        basis.eigenvectors = lr.vectors;
        basis.eigenvalues.resize(p);
        for (int j = 0; j < p; ++j)
            basis.eigenvalues(j) = basis.eigenvectors.col(j).dot(lap * basis.eigenvectors.col(j));
        // Ritz values arrive in descending order of (lambda + delta)^{-1}.
    }
    fix_signs(basis.eigenvectors);
    return basis;
}

SpectralBasis decompose(const FpOperatorPair& pair, int p, Solver solver) {
    const Eigen::Index n = pair.ws.dimension();
    check_count(n, p);

    Eigen::MatrixXd vs;
    Eigen::VectorXd values;
    if (use_dense(solver, n)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(pair.ws.weights)};
        if (es.info() != Eigen::Success)
            throw Error(ErrorCode::ConvergenceFailure, "dense eigensolver failed");
        values = es.eigenvalues().tail(p).reverse();
        vs = es.eigenvectors().rightCols(p).rowwise().reverse();
    } else {
        const LanczosResult lr = lanczos_largest(
            [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out = pair.ws.weights * in; },
            n, p);
        values = lr.values;
        vs = lr.vectors;
    }

    SpectralBasis basis;
    basis.kind = OperatorKind::FokkerPlanckSym;
    basis.params = pair.ws.params;
    basis.eigenvalues = values;
    basis.eigenvectors = pair.d_d.cwiseSqrt().cwiseInverse().asDiagonal() * vs;
    basis.weight = pair.d_d;
    fix_signs(basis.eigenvectors);
    return basis;
}

double orthonormality_error(const SpectralBasis& basis) {
    const Eigen::MatrixXd& v = basis.eigenvectors;
    const Eigen::MatrixXd gram =
        basis.weight ? Eigen::MatrixXd(v.transpose() * basis.weight->asDiagonal() * v)
                     : Eigen::MatrixXd(v.transpose() * v);
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

Eigen::VectorXd eigen_residuals(const SymmetricOperator& op, const SpectralBasis& basis) {
    const SparseMatrix lap = op.laplacian();
    Eigen::VectorXd r(basis.size());
    for (Eigen::Index j = 0; j < basis.size(); ++j) {
        const Eigen::VectorXd v = basis.eigenvectors.col(j);
        r(j) = (lap * v - basis.eigenvalues(j) * v).norm();
    }
    return r;
}

Eigen::VectorXd eigen_residuals(const FpOperatorPair& pair, const SpectralBasis& basis) {
    const Eigen::VectorXd sq = pair.d_d.cwiseSqrt();
    Eigen::VectorXd r(basis.size());
    for (Eigen::Index j = 0; j < basis.size(); ++j) {
        const Eigen::VectorXd v = basis.eigenvectors.col(j);
        const Eigen::VectorXd wv = (pair.ws.weights * sq.cwiseProduct(v)).cwiseQuotient(sq);
        r(j) = (wv - basis.eigenvalues(j) * v).norm();
    }
    return r;
}

std::vector<std::pair<int, int>> eigenvalue_clusters(const Eigen::VectorXd& values,
                                                     double relative_gap) {
    std::vector<std::pair<int, int>> clusters;
    if (values.size() == 0) return clusters;
    int begin = 0;
    for (int i = 1; i < values.size(); ++i) {
        const double gap = std::abs(values(i) - values(i - 1));
        if (gap > relative_gap * std::abs(values(i))) {
            clusters.emplace_back(begin, i);
            begin = i;
        }
    }
    clusters.emplace_back(begin, static_cast<int>(values.size()));
    return clusters;
}

Eigen::VectorXd project(const SpectralBasis& basis, const Eigen::VectorXd& f) {
    if (f.size() != basis.dimension())
        throw Error(ErrorCode::LengthMismatch, "function has " + std::to_string(f.size()) +
                                                   " values, basis dimension is " +
                                                   std::to_string(basis.dimension()));
    if (basis.weight) return basis.eigenvectors.transpose() * basis.weight->cwiseProduct(f);
    return basis.eigenvectors.transpose() * f;
}

MeshFunction reconstruct(const SpectralBasis& basis, const Eigen::VectorXd& alpha, int p) {
    if (p < 0 || p > basis.size() || p > alpha.size())
        throw Error(ErrorCode::InvalidArgument, "reconstruction order out of range");
    MeshFunction out;
    out.values = basis.eigenvectors.leftCols(p) * alpha.head(p);
    return out;
}

double parseval_distance(const Eigen::VectorXd& alpha_1, const Eigen::VectorXd& alpha_2) {
    if (alpha_1.size() != alpha_2.size())
        throw Error(ErrorCode::BasisMismatch, "coefficient vectors differ in length");
    return (alpha_1 - alpha_2).norm();
}

// -----------------------------------------------------------------------------

Eigen::Index CoefficientSet::row_index(int sim, int step, int channel) const {
    if (sim < 0 || sim >= n_sims || step < 0 || step >= n_steps || channel < 0 ||
        channel >= static_cast<int>(channels.size()))
        throw Error(ErrorCode::IndexOutOfRange, "coefficient index out of range");
    return (static_cast<Eigen::Index>(sim) * n_steps + step) *
               static_cast<Eigen::Index>(channels.size()) +
           channel;
}

Eigen::VectorXd CoefficientSet::at(int sim, int step, int channel) const {
    return alpha.row(row_index(sim, step, channel)).transpose();
}

int CoefficientSet::channel_index(const std::string& name) const {
    for (std::size_t c = 0; c < channels.size(); ++c)
        if (channels[c] == name) return static_cast<int>(c);
    throw Error(ErrorCode::InvalidArgument, "no channel '" + name + "' in coefficient set");
}

CoefficientSet project_bundle(const SpectralBasis& basis, const SimulationBundle& bundle,
                              const std::vector<Channel>& channels, int p, unsigned threads) {
    if (bundle.n_vertices() != basis.dimension())
        throw Error(ErrorCode::BasisMismatch, "bundle has " + std::to_string(bundle.n_vertices()) +
                                                  " vertices, basis dimension is " +
                                                  std::to_string(basis.dimension()));
    const Eigen::Index cols = p < 0 ? basis.size() : std::min<Eigen::Index>(p, basis.size());
    CoefficientSet set;
    set.n_sims = bundle.n_sims();
    set.n_steps = bundle.n_steps();
    for (const auto& c : channels) set.channels.push_back(c.name());
    const auto nc = static_cast<int>(channels.size());
    set.alpha.resize(static_cast<Eigen::Index>(set.n_sims) * set.n_steps * nc, cols);

    parallel_for(static_cast<std::size_t>(set.n_sims) * set.n_steps, threads, [&](std::size_t i) {
        const int sim = static_cast<int>(i) / set.n_steps;
        const int step = static_cast<int>(i) % set.n_steps;
        for (int c = 0; c < nc; ++c) {
            const MeshFunction f = extract_function(bundle, sim, step, channels[c]);
            set.alpha.row(set.row_index(sim, step, c)) = project(basis, f).head(cols).transpose();
        }
    });
    return set;
}

DecayReport decay_report(const CoefficientSet& coeffs, double energy_fraction) {
    DecayReport report;
    report.energy_fraction = energy_fraction;
    const Eigen::Index nj = coeffs.n_coeffs();
    Eigen::VectorXd total = Eigen::VectorXd::Zero(nj);
    for (int c = 0; c < static_cast<int>(coeffs.channels.size()); ++c) {
        ChannelDecay d;
        d.channel = coeffs.channels[c];
        d.max_abs = Eigen::VectorXd::Zero(nj);
        d.variance = Eigen::VectorXd::Zero(nj);
        d.energy = Eigen::VectorXd::Zero(nj);
        for (int step = 0; step < coeffs.n_steps; ++step) {
            Eigen::MatrixXd samples(coeffs.n_sims, nj);
            for (int sim = 0; sim < coeffs.n_sims; ++sim)
                samples.row(sim) = coeffs.alpha.row(coeffs.row_index(sim, step, c));
            d.max_abs = d.max_abs.cwiseMax(samples.cwiseAbs().colwise().maxCoeff().transpose());
            d.energy += samples.cwiseAbs2().colwise().sum().transpose();
            if (coeffs.n_sims > 1) {
                const Eigen::RowVectorXd mean = samples.colwise().mean();
                d.variance += ((samples.rowwise() - mean).cwiseAbs2().colwise().sum() /
                               (coeffs.n_sims - 1))
                                  .transpose();
            }
        }
        d.variance /= coeffs.n_steps;

        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (Eigen::Index j = 1; j < nj; ++j) {
            if (d.max_abs(j) <= 0) continue;
            const double x = std::log(static_cast<double>(j)), y = std::log(d.max_abs(j));
            sx += x, sy += y, sxx += x * x, sxy += x * y, ++count;
        }
        const double denom = count * sxx - sx * sx;
        d.loglog_slope = count >= 2 && denom > 0 ? (count * sxy - sx * sy) / denom : 0.0;

        total += d.energy;
        report.channels.push_back(std::move(d));
    }
    const double mass = total.sum();
    double acc = 0;
    report.threshold_p = static_cast<int>(nj);
    for (Eigen::Index j = 0; j < nj; ++j) {
        acc += total(j);
        if (acc >= energy_fraction * mass) {
            report.threshold_p = static_cast<int>(j) + 1;
            break;
        }
    }
    return report;
}

// -----------------------------------------------------------------------------

void save_basis(const SpectralBasis& basis, const fs::path& directory) {
    fs::create_directories(directory);
    std::string values = "j,eigenvalue\n";
    for (Eigen::Index j = 0; j < basis.eigenvalues.size(); ++j)
        values += std::to_string(j) + ',' + format_double(basis.eigenvalues(j)) + '\n';
    write_text_file(directory / "eigenvalues.csv", values);

    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows =
        basis.eigenvectors;
    write_raw_f64(directory / "eigenvectors.bin", rows.data(), static_cast<std::size_t>(rows.size()));

    nlohmann::ordered_json meta;
    meta["kind"] = to_string(basis.kind);
    meta["n_vertices"] = basis.dimension();
    meta["n_vectors"] = basis.size();
    meta["eigenvectors"] = "eigenvectors.bin";
    meta["layout"] = "row-major float64 little-endian, n_vertices x n_vectors";
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : basis.params) params[k] = v;
    meta["params"] = params;
    if (basis.weight) {
        write_raw_f64(directory / "weight.bin", basis.weight->data(),
                      static_cast<std::size_t>(basis.weight->size()));
        std::string degree = "k,d\n";
        for (Eigen::Index k = 0; k < basis.weight->size(); ++k)
            degree += std::to_string(k) + ',' + format_double((*basis.weight)(k)) + '\n';
        write_text_file(directory / "degree.csv", degree);
        meta["weight"] = "weight.bin";
    }
    write_text_file(directory / "basis.json", meta.dump(2) + '\n');
}

SpectralBasis load_basis(const fs::path& directory) {
    if (!fs::exists(directory / "basis.json"))
        throw Error(ErrorCode::IoError, "no basis.json in " + directory.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(directory / "basis.json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("basis.json: ") + e.what());
    }
    SpectralBasis basis;
    basis.kind = operator_kind_from_string(meta.at("kind").get<std::string>());
    const auto n = meta.at("n_vertices").get<Eigen::Index>();
    const auto p = meta.at("n_vectors").get<Eigen::Index>();
    for (const auto& [k, v] : meta.at("params").items()) basis.params[k] = v.get<double>();

    const std::vector<double> raw = read_raw_f64(directory / meta.at("eigenvectors").get<std::string>());
    if (raw.size() != static_cast<std::size_t>(n * p))
        throw Error(ErrorCode::FrameSizeMismatch, "eigenvector file size disagrees with basis.json");
    basis.eigenvectors =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            raw.data(), n, p);

    std::istringstream in(read_text_file(directory / "eigenvalues.csv"));
    std::string line;
    std::getline(in, line);
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        double v = 0;
        const auto res = std::from_chars(line.data() + comma + 1, line.data() + line.size(), v);
        if (comma == std::string::npos || res.ec != std::errc())
            throw Error(ErrorCode::ParseError, "bad eigenvalue line '" + line + "'");
        values.push_back(v);
    }
    if (values.size() != static_cast<std::size_t>(p))
        throw Error(ErrorCode::ParseError, "eigenvalue count disagrees with basis.json");
    basis.eigenvalues = Eigen::Map<const Eigen::VectorXd>(values.data(), p);

    if (meta.contains("weight")) {
        const std::vector<double> w = read_raw_f64(directory / meta.at("weight").get<std::string>());
        if (w.size() != static_cast<std::size_t>(n))
            throw Error(ErrorCode::FrameSizeMismatch, "weight file size disagrees with basis.json");
        basis.weight = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
    }
    return basis;
}

void save_coefficients_csv(const CoefficientSet& coeffs, const fs::path& path) {
    std::string out = "sim,step,channel,j,alpha\n";
    for (int sim = 0; sim < coeffs.n_sims; ++sim)
        for (int step = 0; step < coeffs.n_steps; ++step)
            for (int c = 0; c < static_cast<int>(coeffs.channels.size()); ++c) {
                const std::string prefix = std::to_string(sim) + ',' + std::to_string(step) + ',' +
                                           coeffs.channels[c] + ',';
                const Eigen::Index r = coeffs.row_index(sim, step, c);
                for (Eigen::Index j = 0; j < coeffs.n_coeffs(); ++j)
                    out += prefix + std::to_string(j) + ',' + format_double(coeffs.alpha(r, j)) + '\n';
            }
    write_text_file(path, out);
}

CoefficientSet load_coefficients_csv(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);
    if (line.rfind("sim,step,channel,j,alpha", 0) != 0)
        throw Error(ErrorCode::ParseError, "coefficient file lacks the expected header");

    struct Entry {
        int sim, step, channel;
        long j;
        double value;
    };
    std::vector<Entry> entries;
    std::vector<std::string> channels;
    int max_sim = -1, max_step = -1;
    long max_j = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::string fields[5];
        std::size_t start = 0;
        for (int f = 0; f < 5; ++f) {
            const auto end = f < 4 ? line.find(',', start) : line.size();
            if (end == std::string::npos) throw Error(ErrorCode::ParseError, "short line '" + line + "'");
            fields[f] = line.substr(start, end - start);
            start = end + 1;
        }
        Entry e{};
        const auto ok = [&](const std::string& s, auto& v) {
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (r.ec != std::errc() || r.ptr != s.data() + s.size())
                throw Error(ErrorCode::ParseError, "bad number in '" + line + "'");
        };
        ok(fields[0], e.sim);
        ok(fields[1], e.step);
        ok(fields[3], e.j);
        ok(fields[4], e.value);
        auto it = std::find(channels.begin(), channels.end(), fields[2]);
        if (it == channels.end()) {
            channels.push_back(fields[2]);
            it = channels.end() - 1;
        }
        e.channel = static_cast<int>(it - channels.begin());
        max_sim = std::max(max_sim, e.sim);
        max_step = std::max(max_step, e.step);
        max_j = std::max(max_j, e.j);
        entries.push_back(e);
    }
    CoefficientSet set;
    set.n_sims = max_sim + 1;
    set.n_steps = max_step + 1;
    set.channels = channels;
    const Eigen::Index rows = static_cast<Eigen::Index>(set.n_sims) * set.n_steps *
                              static_cast<Eigen::Index>(channels.size());
    if (static_cast<Eigen::Index>(entries.size()) != rows * (max_j + 1))
        throw Error(ErrorCode::ParseError, "coefficient file is not a complete table");
    set.alpha = Eigen::MatrixXd::Constant(rows, max_j + 1, std::numeric_limits<double>::quiet_NaN());
    for (const auto& e : entries) set.alpha(set.row_index(e.sim, e.step, e.channel), e.j) = e.value;
    if (!all_finite(set.alpha))
        throw Error(ErrorCode::ParseError, "coefficient file has duplicate or missing entries");
    return set;
}

} // namespace simspec
