#include "simspec/fp_operator.hpp"

#include "simspec/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace simspec {

Eigen::Matrix3d pseudo_inverse_sym(const Eigen::Matrix3d& m, int* rank, double tolerance) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    const Eigen::Vector3d values = es.eigenvalues();
    const double largest = values.cwiseAbs().maxCoeff();
    Eigen::Vector3d inv = Eigen::Vector3d::Zero();
    int r = 0;
    if (largest > 0) {
        for (int i = 0; i < 3; ++i)
            if (std::abs(values(i)) > tolerance * largest) {
                inv(i) = 1.0 / values(i);
                ++r;
            }
    }
    if (rank) *rank = r;
    Eigen::Matrix3d out = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    // Exact symmetry.
    return 0.5 * (out + out.transpose());
}

LocalJacobianField LocalJacobianField::from_jjt(std::vector<Eigen::Matrix3d> jjt) {
    LocalJacobianField field;
    field.jjt_inv.resize(jjt.size());
    field.rank.resize(jjt.size());
    for (std::size_t k = 0; k < jjt.size(); ++k)
        field.jjt_inv[k] = pseudo_inverse_sym(jjt[k], &field.rank[k]);
    field.jjt = std::move(jjt);
    return field;
}

LocalJacobianField estimate_local_jacobians(const SimulationBundle& bundle, int step,
                                            unsigned threads) {
    const int m = bundle.n_sims();
    if (m < 2) throw Error(ErrorCode::InvalidArgument, "local covariance needs at least 2 simulations");
    if (step < 0 || step >= bundle.n_steps()) throw Error(ErrorCode::IndexOutOfRange, "step");
    const auto n = static_cast<std::size_t>(bundle.n_vertices());

    LocalJacobianField field;
    field.jjt.resize(n);
    field.jjt_inv.resize(n);
    field.rank.resize(n);
    parallel_for(n, threads, [&](std::size_t k) {
        const auto row = static_cast<Eigen::Index>(k);
        Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
        for (int s = 0; s < m; ++s) mean += bundle.frame(s, step).row(row);
        mean /= m;
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (int s = 0; s < m; ++s) {
            const Eigen::RowVector3d d = bundle.frame(s, step).row(row) - mean;
            cov += d.transpose() * d;
        }
        cov /= (m - 1);
        field.jjt[k] = cov;
        field.jjt_inv[k] = pseudo_inverse_sym(cov, &field.rank[k]);
    });
    const auto degenerate = std::count(field.rank.begin(), field.rank.end(), 0);
    if (degenerate > 0)
        warn("DegenerateCloud: " + std::to_string(degenerate) +
             " vertex cloud(s) have zero variance; their inverse is set to 0");
    return field;
}

double nica_distance(const LocalJacobianField& field, const Eigen::Vector3d& eta_k,
                     const Eigen::Vector3d& eta_l, int k, int l, NicaVariant variant) {
    const auto n = static_cast<int>(field.size());
    if (k < 0 || k >= n || l < 0 || l >= n)
        throw Error(ErrorCode::IndexOutOfRange, "vertex index outside Jacobian field");
    const Eigen::Vector3d d = eta_k - eta_l;
    double value = 0;
    if (variant == NicaVariant::SumOfInverses) {
        value = 0.5 * d.dot((field.jjt_inv[k] + field.jjt_inv[l]) * d);
    } else {
        value = 2.0 * d.dot(pseudo_inverse_sym(field.jjt[k] + field.jjt[l]) * d);
    }
    return std::max(0.0, value);
}

Eigen::MatrixXd nica_distance_matrix(const LocalJacobianField& field, const Points& reference,
                                     NicaVariant variant, unsigned threads) {
    const auto n = static_cast<Eigen::Index>(field.size());
    if (reference.rows() != n)
        throw Error(ErrorCode::LengthMismatch, "reference positions differ from field size");
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
    // Row k owns the entries l > k; mirrored afterwards.
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t kk) {
        const auto k = static_cast<Eigen::Index>(kk);
        const Eigen::Vector3d eta_k = reference.row(k).transpose();
        for (Eigen::Index l = k + 1; l < n; ++l)
            d2(l, k) = nica_distance(field, eta_k, reference.row(l).transpose(),
                                     static_cast<int>(k), static_cast<int>(l), variant);
    });
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = k + 1; l < n; ++l) d2(k, l) = d2(l, k);
    return d2;
}

FpOperatorPair assemble_fp(const SimulationBundle& bundle, int step, const FpParams& params,
                           unsigned threads) {
    const LocalJacobianField field = estimate_local_jacobians(bundle, step, threads);
    Points reference;
    if (params.reference_sim >= 0) {
        reference = bundle.frame(params.reference_sim, step);
    } else {
        reference = Points::Zero(bundle.n_vertices(), 3);
        for (int s = 0; s < bundle.n_sims(); ++s) reference += bundle.frame(s, step);
        reference /= bundle.n_sims();
    }
    return assemble_fp(field, reference, params, threads);
}

FpOperatorPair assemble_fp(const LocalJacobianField& field, const Points& reference,
                           const FpParams& params, unsigned threads) {
    const Eigen::MatrixXd d2 = nica_distance_matrix(field, reference, params.variant, threads);
    const Eigen::Index n = d2.rows();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "operator needs at least 2 vertices");

    double epsilon = 0;
    if (params.epsilon) {
        epsilon = *params.epsilon;
        if (!(epsilon > 0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    } else {
        std::vector<double> nonzero;
        nonzero.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = k + 1; l < n; ++l)
                if (d2(k, l) > 0) nonzero.push_back(d2(k, l));
        if (nonzero.empty())
            throw Error(ErrorCode::EpsilonTooSmall, "all pairwise distances are zero");
        const auto mid = nonzero.begin() + static_cast<std::ptrdiff_t>(nonzero.size() / 2);
        std::nth_element(nonzero.begin(), mid, nonzero.end());
        epsilon = *mid;
    }

    // Scalar exp so far pairs underflow to exactly 0.
    Eigen::MatrixXd a = (-d2 / epsilon).unaryExpr([](double x) { return std::exp(x); });
    if (params.knn > 0 && params.knn < n - 1) {
        Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> keep =
            Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
                return d2(k, x) < d2(k, y);
            });
            int taken = 0;
            for (Eigen::Index l : order) {
                if (l == k) continue;
                keep(k, l) = keep(l, k) = 1;
                if (++taken == params.knn) break;
            }
            keep(k, k) = 1;
        }
        a = keep.cast<double>().cwiseProduct(a);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        double row_max = 0;
        for (Eigen::Index l = 0; l < n; ++l)
            if (l != k) row_max = std::max(row_max, a(k, l));
        if (row_max == 0)
            throw Error(ErrorCode::EpsilonTooSmall,
                        "kernel row " + std::to_string(k) + " has no off-diagonal weight");
    }

    // W_d = D_A^{-1/2} A D_A^{-1/2}; W_s = D_d^{-1/2} W_d D_d^{-1/2}. Scalings
    // are applied as products s_k * s_l so the results stay exactly symmetric.
    const Eigen::VectorXd s_a = a.rowwise().sum().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd w_d(n, n);
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index k = 0; k < n; ++k) w_d(k, l) = a(k, l) * (s_a(k) * s_a(l));
    FpOperatorPair pair;
    pair.d_d = w_d.rowwise().sum();
    pair.epsilon = epsilon;
    const Eigen::VectorXd s_d = pair.d_d.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd w_s(n, n);
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index k = 0; k < n; ++k) w_s(k, l) = w_d(k, l) * (s_d(k) * s_d(l));

    pair.ws.kind = OperatorKind::FokkerPlanckSym;
    pair.ws.weights = w_s.sparseView(1.0, 0.0);
    pair.ws.weights.makeCompressed();
    pair.ws.degree = w_s.rowwise().sum();
    pair.ws.params = {{"epsilon", epsilon},
                      {"variant_inv_of_sum", params.variant == NicaVariant::InverseOfSum ? 1.0 : 0.0},
                      {"reference_sim", static_cast<double>(params.reference_sim)},
                      {"knn", static_cast<double>(params.knn)}};
    return pair;
}

Eigen::MatrixXd row_stochastic_matrix(const FpOperatorPair& pair) {
    const Eigen::VectorXd sq = pair.d_d.cwiseSqrt();
    Eigen::MatrixXd w_rs = Eigen::MatrixXd(pair.ws.weights);
    for (Eigen::Index l = 0; l < w_rs.cols(); ++l)
        for (Eigen::Index k = 0; k < w_rs.rows(); ++k) w_rs(k, l) *= sq(l) / sq(k);
    return w_rs;
}

} // namespace simspec
