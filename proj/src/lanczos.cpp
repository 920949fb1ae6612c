#include "simspec/lanczos.hpp"

#include "simspec/error.hpp"
#include "simspec/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace simspec {

namespace {

Eigen::VectorXd random_unit(Eigen::Index n, CounterRng& rng) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v.normalized();
}

/// Orthogonalizes `w` against the first `cols` columns of `basis` (twice).
void reorthogonalize(const Eigen::MatrixXd& basis, Eigen::Index cols, Eigen::VectorXd& w) {
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd proj = basis.leftCols(cols).transpose() * w;
        w.noalias() -= basis.leftCols(cols) * proj;
    }
}


/// One Lanczos run on the operator restricted to the orthogonal complement of
/// `locked`. Returns the `count` largest converged Ritz pairs.
LanczosResult krylov_run(const LinearMap& apply, Eigen::Index n, int count,
                         const Eigen::MatrixXd& locked, Eigen::Index max_steps, double tolerance,
                         CounterRng& rng) {
    const auto deflate = [&](Eigen::VectorXd& v) {
        if (locked.cols() == 0) return;
        for (int pass = 0; pass < 2; ++pass) v.noalias() -= locked * (locked.transpose() * v);
    };
    const auto fresh_start = [&]() {
        Eigen::VectorXd v = random_unit(n, rng);
        deflate(v);
        return Eigen::VectorXd(v.normalized());
    };

    Eigen::MatrixXd basis(n, max_steps);
    Eigen::VectorXd alpha(max_steps), beta(max_steps);
    basis.col(0) = fresh_start();

    Eigen::VectorXd w(n);
    Eigen::Index steps = 0;
    for (Eigen::Index j = 0; j < max_steps; ++j) {
        apply(basis.col(j), w);
        deflate(w);
        alpha(j) = basis.col(j).dot(w);
        reorthogonalize(basis, j + 1, w);
        beta(j) = w.norm();
        steps = j + 1;

        const bool last = steps == max_steps;
        const bool check = steps >= count && (steps % 5 == 0 || last || beta(j) < 1e-12);
        if (check) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
            tri.computeFromTridiagonal(alpha.head(steps), beta.head(steps - 1),
                                       Eigen::ComputeEigenvectors);
            const Eigen::VectorXd& theta = tri.eigenvalues();
            const double scale = theta.cwiseAbs().maxCoeff();
            bool converged = true;
            for (int i = 0; i < count; ++i) {
                const Eigen::Index idx = steps - 1 - i;
                const double residual = std::abs(beta(j) * tri.eigenvectors()(steps - 1, idx));
                const double bound = tolerance * std::max(std::abs(theta(idx)), 1e-3 * scale);
                if (residual > bound) converged = false;
            }
            if (converged || (last && steps + locked.cols() == n)) {
                LanczosResult result;
                result.iterations = static_cast<int>(steps);
                result.values.resize(count);
                result.vectors.resize(n, count);
                for (int i = 0; i < count; ++i) {
                    const Eigen::Index idx = steps - 1 - i;
                    result.values(i) = theta(idx);
                    result.vectors.col(i) =
                        (basis.leftCols(steps) * tri.eigenvectors().col(idx)).normalized();
                }
                return result;
            }
        }
        if (last) break;

        if (beta(j) < 1e-12) {
            // Invariant subspace found; continue from a fresh orthogonal direction.
            beta(j) = 0;
            Eigen::VectorXd next = fresh_start();
            reorthogonalize(basis, j + 1, next);
            basis.col(j + 1) = next.normalized();
        } else {
            basis.col(j + 1) = w / beta(j);
        }
    }
    throw Error(ErrorCode::ConvergenceFailure,
                "Lanczos did not converge in " + std::to_string(steps) + " iterations");
}

} // namespace

LanczosResult lanczos_largest(const LinearMap& apply, Eigen::Index n, int count,
                              const LanczosOptions& options) {
    if (count < 1 || count > n)
        throw Error(ErrorCode::InvalidArgument, "requested eigenpair count out of range");
    const Eigen::Index max_steps =
        std::min<Eigen::Index>(n, options.max_iterations > 0 ? options.max_iterations : 50 * count);

    CounterRng rng(options.seed);
    LanczosResult result =
        krylov_run(apply, n, count, Eigen::MatrixXd(n, 0), max_steps, options.tolerance, rng);

    // A single Krylov space holds one vector per eigenspace in exact arithmetic,
    // so repeated eigenvalues can be missed. Restart on the complement of the
    // accepted vectors until nothing larger than the last accepted value remains.
    for (int restart = 0; restart < 2 * count + 10 && count < n; ++restart) {
        const Eigen::Index room = n - count;
        const LanczosResult extra =
            krylov_run(apply, n, 1, result.vectors, std::min(max_steps, room), options.tolerance, rng);
        result.iterations += extra.iterations;
        const double floor = result.values(count - 1);
        if (extra.values(0) <= floor + options.tolerance * std::abs(floor)) return result;

        // Insert the new pair and drop the smallest.
        Eigen::Index pos = count - 1;
        while (pos > 0 && result.values(pos - 1) < extra.values(0)) {
            result.values(pos) = result.values(pos - 1);
            result.vectors.col(pos) = result.vectors.col(pos - 1);
            --pos;
        }
        result.values(pos) = extra.values(0);
        result.vectors.col(pos) = extra.vectors.col(0);
    }
    if (count == n) return result;
    throw Error(ErrorCode::ConvergenceFailure, "Lanczos restarts did not settle");
}

} // namespace simspec
