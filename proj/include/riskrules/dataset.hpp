#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace riskrules {

/// Numeric feature table with binary outcome labels.
///
/// Rows are records, columns are features. Every value is finite, every
/// label is 0 or 1 and feature names are pairwise distinct; `validate`
/// enforces this and every loader calls it.
struct Dataset {
    Eigen::MatrixXd values;                 // n x p
    std::vector<int> labels;                // length n, entries in {0,1}
    std::vector<std::string> feature_names; // length p
    std::string label_name = "y";

    std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t p() const { return static_cast<std::size_t>(values.cols()); }

    Eigen::VectorXd label_vector() const;
    std::size_t positives() const;
    Eigen::VectorXd row(std::size_t r) const { return values.row(static_cast<Eigen::Index>(r)).transpose(); }
};

/// Throws DataError when any Dataset invariant is broken.
void validate(const Dataset& ds);

Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows);
Dataset select_columns(const Dataset& ds, std::span<const std::size_t> columns);

/// Index of a feature by name, or throws DataError.
std::size_t feature_index(const Dataset& ds, std::string_view name);

/// Population standard deviation of every column.
Eigen::VectorXd column_std(const Dataset& ds);

/// Reads a comma-separated table whose first row is a header.
/// `label_column` is removed from the features and becomes the label vector.
Dataset load_table(const std::filesystem::path& path, std::string_view label_column);
Dataset parse_table(std::istream& in, std::string_view label_column, std::string_view source = "<stream>");

/// Writes features followed by the label column, shortest round-trip decimals.
void write_table(const Dataset& ds, std::ostream& out);

struct FilterResult {
    Dataset data;
    std::vector<std::string> dropped;
};

/// Keeps the features whose fraction of nonzero entries is >= min_prevalence.
FilterResult filter_rare_features(const Dataset& ds, double min_prevalence = 0.01);

struct SplitSpec {
    double train_fraction = 2.0 / 3.0;
    std::uint64_t seed = 0;
};

void validate(const SplitSpec& spec);

struct Split {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_rows; // indices into the input, ascending
    std::vector<std::size_t> test_rows;
};

/// Shuffled train/test split. The test partition is balanced by
/// under-sampling its majority class; discarded hold-out rows are dropped.
Split split_balanced(const Dataset& ds, const SplitSpec& spec);

} // namespace riskrules
