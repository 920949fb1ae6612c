#include "simspec/operator.hpp"

#include "simspec/error.hpp"
#include "simspec/io.hpp"

#include <json.hpp>

#include <charconv>
#include <sstream>
#include <vector>

namespace simspec {

std::string to_string(OperatorKind kind) {
    return kind == OperatorKind::LaplaceBeltrami ? "laplace_beltrami" : "fokker_planck_sym";
}

OperatorKind operator_kind_from_string(const std::string& text) {
    if (text == "laplace_beltrami") return OperatorKind::LaplaceBeltrami;
    if (text == "fokker_planck_sym") return OperatorKind::FokkerPlanckSym;
    throw Error(ErrorCode::ParseError, "unknown operator kind '" + text + "'");
}

SparseMatrix SymmetricOperator::laplacian() const {
    SparseMatrix diag(weights.rows(), weights.cols());
    diag.reserve(Eigen::VectorXi::Constant(weights.rows(), 1));
    for (Eigen::Index k = 0; k < weights.rows(); ++k) diag.insert(k, k) = degree(k);
    SparseMatrix l = diag - weights;
    l.makeCompressed();
    return l;
}

void export_coo_csv(const std::filesystem::path& path, const SparseMatrix& matrix) {
    std::string out = "row,col,value\n";
    for (Eigen::Index r = 0; r < matrix.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(matrix, r); it; ++it)
            out += std::to_string(it.row()) + ',' + std::to_string(it.col()) + ',' +
                   format_double(it.value()) + '\n';
    write_text_file(path, out);
}

SparseMatrix import_coo_csv(const std::filesystem::path& path, Eigen::Index dimension) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);
    std::vector<Eigen::Triplet<double>> triplets;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw Error(ErrorCode::ParseError, "bad COO line '" + line + "'");
        long r = 0, c = 0;
        double v = 0;
        std::from_chars(line.data(), line.data() + c1, r);
        std::from_chars(line.data() + c1 + 1, line.data() + c2, c);
        const auto res = std::from_chars(line.data() + c2 + 1, line.data() + line.size(), v);
        if (res.ec != std::errc() || r < 0 || c < 0 || r >= dimension || c >= dimension)
            throw Error(ErrorCode::ParseError, "bad COO line '" + line + "'");
        triplets.emplace_back(r, c, v);
    }
    SparseMatrix m(dimension, dimension);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

std::string operator_params_json(const SymmetricOperator& op) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(op.kind);
    j["dimension"] = op.dimension();
    j["nonzeros"] = op.weights.nonZeros();
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [key, value] : op.params) params[key] = value;
    j["params"] = params;
    return j.dump(2) + '\n';
}

} // namespace simspec
