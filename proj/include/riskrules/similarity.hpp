#pragma once

#include <cstddef>
#include <iosfwd>

#include <Eigen/Dense>

#include "riskrules/dataset.hpp"

namespace riskrules {

/// Row-normalized nonnegative feature similarity weights with zero diagonal.
/// Each row sums to one or is entirely zero.
struct SimilarityMatrix {
    Eigen::MatrixXd entries;

    std::size_t p() const { return static_cast<std::size_t>(entries.rows()); }
};

/// Uncentered cosine between every pair of columns; 0 when either column is
/// all-zero. Symmetric, diagonal included.
Eigen::MatrixXd raw_cosine_matrix(const Dataset& ds);

/// Cosine similarities with negatives clamped to zero, diagonal zeroed and
/// rows divided by their sums.
SimilarityMatrix cosine_similarity_matrix(const Dataset& ds);

/// Throws DataError when `s` breaks a SimilarityMatrix invariant.
void validate(const SimilarityMatrix& s);

/// p x p row-major CSV, no header.
void write_similarity_csv(const SimilarityMatrix& s, std::ostream& out);

} // namespace riskrules
