#include "simspec/embeddings.hpp"

#include "simspec/error.hpp"
#include "simspec/io.hpp"
#include "simspec/lanczos.hpp"
#include "simspec/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace simspec {

Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& data, unsigned threads) {
    const Eigen::Index n = data.rows();
    Eigen::MatrixXd d2(n, n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t iu) {
        const auto i = static_cast<Eigen::Index>(iu);
        for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = (data.row(i) - data.row(j)).squaredNorm();
    });
    return d2;
}

namespace {

bool kernel_connected(const Eigen::MatrixXd& k) {
    const Eigen::Index n = k.rows();
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
        const Eigen::Index i = stack.back();
        stack.pop_back();
        for (Eigen::Index j = 0; j < n; ++j)
            if (!seen[static_cast<std::size_t>(j)] && k(i, j) > 0) {
                seen[static_cast<std::size_t>(j)] = 1;
                ++count;
                stack.push_back(j);
            }
    }
    return count == n;
}

/// Leading `count` eigenpairs (descending) of a dense symmetric matrix.
void top_eigenpairs(const Eigen::MatrixXd& s, int count, Eigen::VectorXd& values,
                    Eigen::MatrixXd& vectors) {
    if (s.rows() <= kDenseSolverLimit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        if (es.info() != Eigen::Success)
            throw Error(ErrorCode::ConvergenceFailure, "dense eigensolver failed");
        values = es.eigenvalues().tail(count).reverse();
        vectors = es.eigenvectors().rightCols(count).rowwise().reverse();
    } else {
        const LanczosResult lr = lanczos_largest(
            [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out.noalias() = s * in; },
            s.rows(), count);
        values = lr.values;
        vectors = lr.vectors;
    }
}

} // namespace

Embedding diffusion_maps(const Eigen::MatrixXd& data, int dim, const DiffusionMapOptions& options,
                         unsigned threads) {
    const Eigen::Index n = data.rows();
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
    if (n < dim + 2)
        throw Error(ErrorCode::InvalidArgument, "diffusion maps need at least dim + 2 rows, got " +
                                                    std::to_string(n));
    if (!all_finite(data)) throw Error(ErrorCode::NonFiniteValue, "non-finite input data");
    if (!(options.alpha >= 0 && options.alpha <= 1))
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");

    const Eigen::MatrixXd d2 = pairwise_squared_distances(data, threads);
    double epsilon = 0;
    if (options.epsilon) {
        epsilon = *options.epsilon;
    } else {
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (d2(i, j) > 0) values.push_back(d2(i, j));
        if (values.empty())
            throw Error(ErrorCode::EpsilonTooSmall, "all rows coincide; no bandwidth available");
        const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
        std::nth_element(values.begin(), mid, values.end());
        epsilon = *mid;
    }
    if (!(epsilon > 0)) throw Error(ErrorCode::EpsilonTooSmall, "epsilon must be positive");

    // Scalar exp so far pairs underflow to exactly 0; Eigen's vectorized exp
    // clamps its argument and never returns 0, which hides disconnection.
    const Eigen::MatrixXd k = (-d2 / epsilon).unaryExpr([](double x) { return std::exp(x); });
    if (!kernel_connected(k))
        throw Error(ErrorCode::EpsilonTooSmall,
                    "kernel graph is disconnected at epsilon = " + format_double(epsilon));

    const Eigen::VectorXd q = k.rowwise().sum().array().pow(-options.alpha).matrix();
    const Eigen::MatrixXd ka = q.asDiagonal() * k * q.asDiagonal();
    const Eigen::VectorXd d = ka.rowwise().sum();
    const Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd s = inv_sqrt.asDiagonal() * ka * inv_sqrt.asDiagonal();
    s = 0.5 * (s + s.transpose()).eval();

    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    top_eigenpairs(s, dim + 1, values, vectors);
    Eigen::MatrixXd psi = std::sqrt(d.sum()) * (inv_sqrt.asDiagonal() * vectors);
    fix_signs(psi);

    Embedding e;
    e.method = "diffusion_maps";
    e.params = {{"epsilon", epsilon}, {"alpha", options.alpha}, {"t", 1.0}};
    e.eigenvalues = values.tail(dim);
    e.points = psi.rightCols(dim) * e.eigenvalues.asDiagonal();
    return e;
}

PcaResult pca(const Eigen::MatrixXd& data, int dim) {
    const Eigen::Index n = data.rows(), f = data.cols();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "PCA needs at least two rows");
    if (dim < 1 || dim > std::min(n, f))
        throw Error(ErrorCode::InvalidArgument, "PCA dimension out of range");

    PcaResult r;
    r.mean = data.colwise().mean();
    const Eigen::MatrixXd xc = data.rowwise() - r.mean;
    // Decompose whichever second-moment matrix is smaller; both share the
    // nonzero spectrum s_k^2.
    const bool by_rows = n <= f;
    const Eigen::MatrixXd g = by_rows ? Eigen::MatrixXd(xc * xc.transpose())
                                      : Eigen::MatrixXd(xc.transpose() * xc);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::VectorXd lambda = es.eigenvalues().reverse().cwiseMax(0.0);
    const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    const Eigen::VectorXd s_all = lambda.cwiseSqrt();
    r.singular_values = s_all;

    Eigen::MatrixXd components(f, dim);
    if (by_rows) {
        for (int k = 0; k < dim; ++k)
            components.col(k) = s_all(k) > 0 ? Eigen::VectorXd(xc.transpose() * vecs.col(k) / s_all(k))
                                             : Eigen::VectorXd::Zero(f);
    } else {
        components = vecs.leftCols(dim);
    }
    fix_signs(components);
    r.components = components;

    const double total = lambda.sum();
    r.explained_ratio = total > 0 ? Eigen::VectorXd(lambda.head(dim) / total)
                                  : Eigen::VectorXd::Zero(dim);
    r.embedding.method = "pca";
    r.embedding.points = xc * components;
    r.embedding.eigenvalues = lambda.head(dim);
    return r;
}

Eigen::MatrixXd pca_reconstruct(const PcaResult& result, int p) {
    if (p < 0 || p > result.components.cols())
        throw Error(ErrorCode::InvalidArgument, "reconstruction order out of range");
    Eigen::MatrixXd out =
        result.embedding.points.leftCols(p) * result.components.leftCols(p).transpose();
    return out.rowwise() + result.mean;
}

ProcrustesResult procrustes(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& moving) {
    if (reference.rows() != moving.rows())
        throw Error(ErrorCode::LengthMismatch, "Procrustes inputs differ in row count");
    const Eigen::Index n = reference.rows();
    const Eigen::Index d = std::max(reference.cols(), moving.cols());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, d), b = Eigen::MatrixXd::Zero(n, d);
    a.leftCols(reference.cols()) = reference;
    b.leftCols(moving.cols()) = moving;
    const Eigen::RowVectorXd mean_a = a.colwise().mean();
    a = a.rowwise() - mean_a;
    b = b.rowwise() - b.colwise().mean();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b.transpose() * a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
    const double bb = b.squaredNorm();

    ProcrustesResult r;
    r.scale = bb > 0 ? svd.singularValues().sum() / bb : 0.0;
    const Eigen::MatrixXd fitted = r.scale * b * rotation;
    r.rms = std::sqrt((fitted - a).squaredNorm() / static_cast<double>(n));
    r.aligned = fitted.rowwise() + mean_a;
    return r;
}

double diameter(const Eigen::MatrixXd& points) {
    double best = 0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            best = std::max(best, (points.row(i) - points.row(j)).squaredNorm());
    return std::sqrt(best);
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
    const Eigen::Index n = points.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw Error(ErrorCode::LengthMismatch, "one label per point required");
    std::map<int, int> sizes;
    for (int l : labels) ++sizes[l];
    if (sizes.size() < 2) throw Error(ErrorCode::InvalidArgument, "silhouette needs two clusters");

    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = labels[static_cast<std::size_t>(i)];
        if (sizes[own] == 1) continue;
        std::map<int, double> sum;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) sum[labels[static_cast<std::size_t>(j)]] += (points.row(i) - points.row(j)).norm();
        const double a = sum[own] / (sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, s] : sum)
            if (label != own) b = std::min(b, s / sizes[label]);
        const double m = std::max(a, b);
        total += m > 0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

std::vector<int> two_means(const Eigen::MatrixXd& points, int max_iterations) {
    const Eigen::Index n = points.rows();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "2-means needs at least two points");
    const Eigen::RowVectorXd centroid = points.colwise().mean();
    Eigen::Index first = 0, second = 0;
    (points.rowwise() - centroid).rowwise().squaredNorm().maxCoeff(&first);
    (points.rowwise() - points.row(first)).rowwise().squaredNorm().maxCoeff(&second);

    Eigen::MatrixXd centers(2, points.cols());
    centers.row(0) = points.row(first);
    centers.row(1) = points.row(second);
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int l = (points.row(i) - centers.row(1)).squaredNorm() <
                                  (points.row(i) - centers.row(0)).squaredNorm()
                              ? 1
                              : 0;
            if (labels[static_cast<std::size_t>(i)] != l) changed = true;
            labels[static_cast<std::size_t>(i)] = l;
        }
        if (!changed) break;
        for (int c = 0; c < 2; ++c) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
            int count = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (labels[static_cast<std::size_t>(i)] == c) sum += points.row(i), ++count;
            if (count > 0) centers.row(c) = sum / count;
        }
    }
    return labels;
}

Eigen::MatrixXd coefficient_features(const CoefficientSet& coeffs,
                                     const std::vector<std::string>& channels, int j_begin,
                                     int j_end, std::vector<std::pair<int, int>>* items) {
    if (j_begin < 0 || j_end > coeffs.n_coeffs() || j_begin >= j_end)
        throw Error(ErrorCode::InvalidArgument, "coefficient column range out of bounds");
    std::vector<int> cidx;
    for (const auto& name : channels) cidx.push_back(coeffs.channel_index(name));
    const int width = j_end - j_begin;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(coeffs.n_sims) * coeffs.n_steps,
                        width * static_cast<Eigen::Index>(cidx.size()));
    if (items) items->clear();
    Eigen::Index row = 0;
    for (int sim = 0; sim < coeffs.n_sims; ++sim)
        for (int step = 0; step < coeffs.n_steps; ++step, ++row) {
            for (std::size_t c = 0; c < cidx.size(); ++c)
                out.block(row, static_cast<Eigen::Index>(c) * width, 1, width) =
                    coeffs.alpha.block(coeffs.row_index(sim, step, cidx[c]), j_begin, 1, width);
            if (items) items->emplace_back(sim, step);
        }
    return out;
}

std::vector<TrajectoryRow> time_trajectory_export(const CoefficientSet& coeffs, int j,
                                                  const std::array<std::string, 3>& channels) {
    if (j < 0 || j >= coeffs.n_coeffs())
        throw Error(ErrorCode::IndexOutOfRange, "component index out of range");
    const int cx = coeffs.channel_index(channels[0]);
    const int cy = coeffs.channel_index(channels[1]);
    const int cz = coeffs.channel_index(channels[2]);
    std::vector<TrajectoryRow> rows;
    rows.reserve(static_cast<std::size_t>(coeffs.n_sims) * coeffs.n_steps);
    for (int sim = 0; sim < coeffs.n_sims; ++sim)
        for (int step = 0; step < coeffs.n_steps; ++step) {
            TrajectoryRow r;
            r.sim = sim;
            r.step = step;
            r.alpha_x = coeffs.alpha(coeffs.row_index(sim, step, cx), j);
            r.alpha_y = coeffs.alpha(coeffs.row_index(sim, step, cy), j);
            r.alpha_z = coeffs.alpha(coeffs.row_index(sim, step, cz), j);
            r.step_color = coeffs.n_steps > 1 ? static_cast<double>(step) / (coeffs.n_steps - 1) : 0.0;
            rows.push_back(r);
        }
    return rows;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out = "sim,step,alpha_x,alpha_y,alpha_z,step_color\n";
    for (const auto& r : rows)
        out += std::to_string(r.sim) + ',' + std::to_string(r.step) + ',' + format_double(r.alpha_x) +
               ',' + format_double(r.alpha_y) + ',' + format_double(r.alpha_z) + ',' +
               format_double(r.step_color) + '\n';
    return out;
}

std::string embedding_csv(const Embedding& embedding) {
    std::string out = "row,sim,step";
    for (Eigen::Index c = 0; c < embedding.dim(); ++c) out += ",c" + std::to_string(c);
    out += '\n';
    const bool has_items = static_cast<Eigen::Index>(embedding.items.size()) == embedding.size();
    for (Eigen::Index i = 0; i < embedding.size(); ++i) {
        out += std::to_string(i);
        if (has_items)
            out += ',' + std::to_string(embedding.items[static_cast<std::size_t>(i)].first) + ',' +
                   std::to_string(embedding.items[static_cast<std::size_t>(i)].second);
        else
            out += ",,";
        for (Eigen::Index c = 0; c < embedding.dim(); ++c)
            out += ',' + format_double(embedding.points(i, c));
        out += '\n';
    }
    return out;
}

std::vector<Points> mode_morph(const SpectralBasis& basis, const Eigen::MatrixXd& alpha,
                               int component, const std::vector<Eigen::Vector3d>& sweep) {
    if (alpha.cols() != 3 || alpha.rows() > basis.size())
        throw Error(ErrorCode::BasisMismatch, "morph coefficients must be p x 3 with p <= basis size");
    if (component < 0 || component >= alpha.rows())
        throw Error(ErrorCode::IndexOutOfRange, "morph component out of range");
    const Eigen::Index p = alpha.rows();
    const Eigen::MatrixXd base = basis.eigenvectors.leftCols(p) * alpha;
    const Eigen::VectorXd psi = basis.eigenvectors.col(component);
    std::vector<Points> frames;
    frames.reserve(sweep.size());
    for (const auto& value : sweep) {
        const Eigen::RowVector3d delta = (value - alpha.row(component).transpose()).transpose();
        frames.emplace_back(base + psi * delta);
    }
    return frames;
}

double rigid_fit_residual(const Points& reference, const Points& moving) {
    if (reference.rows() != moving.rows())
        throw Error(ErrorCode::LengthMismatch, "frames differ in vertex count");
    const Eigen::RowVector3d ca = reference.colwise().mean(), cb = moving.colwise().mean();
    const Eigen::MatrixXd a = reference.rowwise() - ca, b = moving.rowwise() - cb;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(b.transpose() * a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) fix(2, 2) = -1;
    const Eigen::Matrix3d rotation = svd.matrixU() * fix * svd.matrixV().transpose();
    return std::sqrt((b * rotation - a).squaredNorm() / static_cast<double>(reference.rows()));
}

} // namespace simspec
