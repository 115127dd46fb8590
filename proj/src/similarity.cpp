#include "riskrules/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "riskrules/error.hpp"

namespace riskrules {

Eigen::MatrixXd raw_cosine_matrix(const Dataset& ds) {
    const Eigen::Index p = ds.values.cols();
    const Eigen::MatrixXd gram = ds.values.transpose() * ds.values;
    const Eigen::VectorXd norms = gram.diagonal().cwiseSqrt();
    Eigen::MatrixXd cos = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i; j < p; ++j) {
            const double denom = norms[i] * norms[j];
            const double c = denom > 0.0 ? std::clamp(gram(i, j) / denom, -1.0, 1.0) : 0.0;
            cos(i, j) = c;
            cos(j, i) = c;
        }
    }
    return cos;
}

SimilarityMatrix cosine_similarity_matrix(const Dataset& ds) {
    if (ds.p() < 2) throw DataError("similarity matrix needs at least two features");
    Eigen::MatrixXd s = raw_cosine_matrix(ds).cwiseMax(0.0);
    s.diagonal().setZero();
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double total = s.row(i).sum();
        if (total > 0.0) s.row(i) /= total;
    }
    return {std::move(s)};
}

void validate(const SimilarityMatrix& s) {
    if (s.entries.rows() != s.entries.cols()) throw DataError("similarity matrix must be square");
    for (Eigen::Index i = 0; i < s.entries.rows(); ++i) {
        if (s.entries(i, i) != 0.0) throw DataError(fmt::format("similarity diagonal entry {} is nonzero", i));
        if ((s.entries.row(i).array() < 0.0).any() || !s.entries.row(i).allFinite())
            throw DataError(fmt::format("similarity row {} has a negative or non-finite entry", i));
        const double total = s.entries.row(i).sum();
        if (total != 0.0 && std::abs(total - 1.0) > 1e-12)
            throw DataError(fmt::format("similarity row {} sums to {}", i, total));
    }
}

void write_similarity_csv(const SimilarityMatrix& s, std::ostream& out) {
    for (Eigen::Index i = 0; i < s.entries.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.entries.cols(); ++j) {
            if (j) out << ',';
            out << fmt::format("{}", s.entries(i, j));
        }
        out << '\n';
    }
}

} // namespace riskrules
