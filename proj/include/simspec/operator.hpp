#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <map>
#include <string>

namespace simspec {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class OperatorKind { LaplaceBeltrami, FokkerPlanckSym };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& text);

/// Sparse symmetric non-negative weight matrix W with zero-or-kernel diagonal
/// and its degree vector D = W 1. For the Laplace-Beltrami kind the operator
/// is the positive semidefinite Laplacian D - W; for the Fokker-Planck kind W
/// is the symmetric conjugate W_s of the row-stochastic kernel.
struct SymmetricOperator {
    OperatorKind kind = OperatorKind::LaplaceBeltrami;
    SparseMatrix weights;
    Eigen::VectorXd degree;
    std::map<std::string, double> params;

    Eigen::Index dimension() const { return weights.rows(); }

    /// D - W.
    SparseMatrix laplacian() const;
};

/// Writes "row,col,value" triplets sorted by (row, col) with a header line.
void export_coo_csv(const std::filesystem::path& path, const SparseMatrix& matrix);
SparseMatrix import_coo_csv(const std::filesystem::path& path, Eigen::Index dimension);

/// {"kind": ..., "dimension": ..., "params": {...}}
std::string operator_params_json(const SymmetricOperator& op);

} // namespace simspec
