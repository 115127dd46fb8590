#include "riskrules/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "riskrules/error.hpp"
#include "riskrules/random.hpp"

namespace riskrules {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::string unquote(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

} // namespace

Eigen::VectorXd Dataset::label_vector() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = labels[i];
    return y;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void validate(const Dataset& ds) {
    if (ds.labels.size() != ds.n())
        throw DataError(fmt::format("{} labels for {} rows", ds.labels.size(), ds.n()));
    if (ds.feature_names.size() != ds.p())
        throw DataError(fmt::format("{} feature names for {} columns", ds.feature_names.size(), ds.p()));
    if (!ds.values.allFinite()) throw DataError("feature values must be finite");
    for (int y : ds.labels)
        if (y != 0 && y != 1) throw DataError("label value outside {0,1}");
    std::unordered_set<std::string> seen;
    for (const auto& name : ds.feature_names)
        if (!seen.insert(name).second) throw DataError(fmt::format("duplicate feature name '{}'", name));
}

Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), ds.values.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= ds.n()) throw DataError(fmt::format("row index {} out of range", rows[i]));
        out.values.row(static_cast<Eigen::Index>(i)) = ds.values.row(static_cast<Eigen::Index>(rows[i]));
        out.labels.push_back(ds.labels[rows[i]]);
    }
    out.feature_names = ds.feature_names;
    out.label_name = ds.label_name;
    return out;
}

Dataset select_columns(const Dataset& ds, std::span<const std::size_t> columns) {
    Dataset out;
    out.values.resize(ds.values.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] >= ds.p()) throw DataError(fmt::format("column index {} out of range", columns[j]));
        out.values.col(static_cast<Eigen::Index>(j)) = ds.values.col(static_cast<Eigen::Index>(columns[j]));
        out.feature_names.push_back(ds.feature_names[columns[j]]);
    }
    out.labels = ds.labels;
    out.label_name = ds.label_name;
    return out;
}

std::size_t feature_index(const Dataset& ds, std::string_view name) {
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    if (it == ds.feature_names.end()) throw DataError(fmt::format("feature '{}' not found", name));
    return static_cast<std::size_t>(it - ds.feature_names.begin());
}

Eigen::VectorXd column_std(const Dataset& ds) {
    Eigen::VectorXd sd = Eigen::VectorXd::Zero(ds.values.cols());
    if (ds.n() == 0) return sd;
    const double n = static_cast<double>(ds.n());
    for (Eigen::Index j = 0; j < ds.values.cols(); ++j) {
        const double mean = ds.values.col(j).sum() / n;
        sd[j] = std::sqrt((ds.values.col(j).array() - mean).square().sum() / n);
    }
    return sd;
}

Dataset parse_table(std::istream& in, std::string_view label_column, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty file", source));
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string> header;
    for (auto f : split_fields(line)) header.push_back(unquote(f));
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end())
        throw DataError(fmt::format("{}: missing label column '{}'", source, label_column));
    const std::size_t label_pos = static_cast<std::size_t>(label_it - header.begin());

    Dataset ds;
    ds.label_name = std::string(label_column);
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != label_pos) ds.feature_names.push_back(header[j]);
    {
        std::unordered_set<std::string> seen;
        for (const auto& name : header)
            if (!seen.insert(name).second)
                throw DataError(fmt::format("{}: duplicate feature name '{}'", source, name));
    }

    std::vector<double> cells;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw DataError(fmt::format("{}: row {} has {} fields, header has {}", source, line_no, fields.size(),
                                        header.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            double v = 0.0;
            if (!parse_double(fields[j], v))
                throw DataError(fmt::format("{}: non-numeric cell at row {}, column '{}': '{}'", source, line_no,
                                            header[j], fields[j]));
            if (j == label_pos) {
                if (v != 0.0 && v != 1.0)
                    throw DataError(fmt::format("{}: label value outside {{0,1}} at row {}: '{}'", source, line_no,
                                                fields[j]));
                ds.labels.push_back(static_cast<int>(v));
            } else {
                cells.push_back(v);
            }
        }
        ++rows;
    }

    const auto p = static_cast<Eigen::Index>(ds.feature_names.size());
    ds.values.resize(static_cast<Eigen::Index>(rows), p);
    for (std::size_t r = 0; r < rows; ++r)
        for (Eigen::Index j = 0; j < p; ++j)
            ds.values(static_cast<Eigen::Index>(r), j) = cells[r * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)];
    validate(ds);
    return ds;
}

Dataset load_table(const std::filesystem::path& path, std::string_view label_column) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
    return parse_table(in, label_column, path.string());
}

void write_table(const Dataset& ds, std::ostream& out) {
    for (const auto& name : ds.feature_names) out << name << ',';
    out << ds.label_name << '\n';
    for (std::size_t r = 0; r < ds.n(); ++r) {
        for (std::size_t j = 0; j < ds.p(); ++j)
            out << fmt::format("{}", ds.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))) << ',';
        out << ds.labels[r] << '\n';
    }
}

FilterResult filter_rare_features(const Dataset& ds, double min_prevalence) {
    if (!(min_prevalence >= 0.0 && min_prevalence <= 1.0))
        throw ValidationError("min_prevalence must be in [0,1]");
    std::vector<std::size_t> keep;
    FilterResult result;
    const double n = static_cast<double>(ds.n());
    for (std::size_t j = 0; j < ds.p(); ++j) {
        const auto nonzero = (ds.values.col(static_cast<Eigen::Index>(j)).array() != 0.0).count();
        if (n == 0.0 || static_cast<double>(nonzero) / n >= min_prevalence)
            keep.push_back(j);
        else
            result.dropped.push_back(ds.feature_names[j]);
    }
    if (keep.empty()) throw DataError("empty feature set: every feature is rarer than the prevalence threshold");
    result.data = select_columns(ds, keep);
    return result;
}

void validate(const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ValidationError("train_fraction must be strictly between 0 and 1");
}

Split split_balanced(const Dataset& ds, const SplitSpec& spec) {
    validate(spec);
    if (ds.n() < 6) throw DataError("split needs at least 6 rows");
    const std::size_t pos = ds.positives();
    if (pos == 0 || pos == ds.n()) throw DataError("split needs both classes present");

    Engine rng = make_engine(spec.seed, {0x5eed5011});
    std::vector<std::size_t> order(ds.n());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(ds.n())));
    Split out;
    out.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));

    std::vector<std::size_t> held_pos, held_neg;
    for (auto it = order.begin() + static_cast<std::ptrdiff_t>(n_train); it != order.end(); ++it)
        (ds.labels[*it] == 1 ? held_pos : held_neg).push_back(*it);
    if (held_pos.empty() || held_neg.empty())
        throw DataError("cannot balance test set: a class is absent from the hold-out rows");

    auto& majority = held_pos.size() > held_neg.size() ? held_pos : held_neg;
    const auto& minority = held_pos.size() > held_neg.size() ? held_neg : held_pos;
    std::shuffle(majority.begin(), majority.end(), rng);
    majority.resize(minority.size());

    out.test_rows = held_pos;
    out.test_rows.insert(out.test_rows.end(), held_neg.begin(), held_neg.end());
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    out.train = select_rows(ds, out.train_rows);
    out.test = select_rows(ds, out.test_rows);
    return out;
}

} // namespace riskrules
