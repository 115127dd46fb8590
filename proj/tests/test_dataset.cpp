#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "riskrules/dataset.hpp"
#include "riskrules/error.hpp"

using namespace riskrules;

namespace {

Dataset parse(const std::string& text, const std::string& label = "y") {
    std::istringstream in(text);
    return parse_table(in, label);
}

Dataset with_column(std::size_t n, std::size_t nonzero) {
    Dataset ds;
    ds.values = Eigen::MatrixXd::Zero(static_cast<long>(n), 2);
    for (std::size_t i = 0; i < nonzero; ++i) ds.values(static_cast<long>(i), 0) = 1.0;
    ds.values.col(1).setOnes();
    ds.labels.assign(n, 0);
    ds.labels[0] = 1;
    ds.feature_names = {"rare", "common"};
    return ds;
}

Dataset imbalanced(std::size_t n, std::size_t positives) {
    Dataset ds;
    ds.values.resize(static_cast<long>(n), 1);
    for (std::size_t i = 0; i < n; ++i) ds.values(static_cast<long>(i), 0) = static_cast<double>(i);
    ds.labels.assign(n, 0);
    for (std::size_t i = 0; i < positives; ++i) ds.labels[i * (n / positives)] = 1;
    ds.feature_names = {"id"};
    return ds;
}

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("load_table parses header, features and labels") {
    const auto ds = parse("a,b,y\n1,0,1\n0,2,0\n1,1,1\n");
    CHECK(ds.n() == 3);
    CHECK(ds.p() == 2);
    CHECK(ds.labels == std::vector<int>{1, 0, 1});
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.values(1, 1) == 2.0);
    CHECK(ds.label_name == "y");
}

TEST_CASE("label column may sit anywhere in the header") {
    const auto ds = parse("y,a\r\n0,1.5\r\n1,-2e3\r\n");
    CHECK(ds.feature_names == std::vector<std::string>{"a"});
    CHECK(ds.values(1, 0) == -2000.0);
    CHECK(ds.labels == std::vector<int>{0, 1});
}

TEST_CASE("load_table errors") {
    CHECK_THROWS_WITH_AS(parse("a,b,y\n1,0,2\n"), doctest::Contains("label value outside {0,1}"), DataError);
    CHECK_THROWS_WITH_AS(parse("a,a,y\n1,0,1\n"), doctest::Contains("duplicate feature name"), DataError);
    CHECK_THROWS_WITH_AS(parse("a,b\n1,0\n"), doctest::Contains("missing label column"), DataError);
    CHECK_THROWS_WITH_AS(parse("a,b,y\n1,0,1\n1,x,0\n"), doctest::Contains("row 3, column 'b'"), DataError);
    CHECK_THROWS_AS(parse("a,b,y\n1,,1\n"), DataError);
    CHECK_THROWS_AS(parse("a,b,y\n1,nan,1\n"), DataError);
    CHECK_THROWS_AS(parse("a,b,y\n1,0\n"), DataError);
    CHECK_THROWS_AS(load_table("/nonexistent/file.csv", "y"), DataError);
}

TEST_CASE("write_table round-trips through parse_table") {
    const auto ds = oracle::random_dataset(20, 3, 5);
    std::ostringstream out;
    write_table(ds, out);
    const auto back = parse(out.str());
    CHECK(back.values == ds.values);
    CHECK(back.labels == ds.labels);
    CHECK(back.feature_names == ds.feature_names);
}

TEST_CASE("filter_rare_features boundary cases") {
    SUBCASE("1 of 100 nonzero is kept at 0.01") {
        const auto r = filter_rare_features(with_column(100, 1), 0.01);
        CHECK(r.data.p() == 2);
        CHECK(r.dropped.empty());
    }
    SUBCASE("1 of 200 nonzero is dropped at 0.01") {
        const auto r = filter_rare_features(with_column(200, 1), 0.01);
        CHECK(r.data.feature_names == std::vector<std::string>{"common"});
        CHECK(r.dropped == std::vector<std::string>{"rare"});
    }
    SUBCASE("threshold 0 keeps everything, even all-zero columns") {
        const auto r = filter_rare_features(with_column(50, 0), 0.0);
        CHECK(r.data.p() == 2);
    }
    SUBCASE("dropping everything is an error") {
        auto ds = with_column(50, 0);
        ds.values.col(1).setZero();
        CHECK_THROWS_WITH_AS(filter_rare_features(ds, 0.01), doctest::Contains("empty feature set"), DataError);
    }
    CHECK_THROWS_AS(filter_rare_features(with_column(10, 1), 1.5), ValidationError);
}

TEST_CASE("filter_rare_features is idempotent and preserves column order") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto ds = oracle::random_dataset(60, 8, seed);
        Engine rng = make_engine(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (long j = 0; j < 8; ++j) {
            const double keep = unit(rng) * 0.2;
            for (long d = 0; d < 60; ++d)
                if (unit(rng) > keep) ds.values(d, j) = 0.0;
        }
        ds.values(0, 0) = 1.0;
        ds.values.col(7).setOnes();
        const auto once = filter_rare_features(ds, 0.1);
        const auto twice = filter_rare_features(once.data, 0.1);
        CHECK(twice.data.feature_names == once.data.feature_names);
        CHECK(twice.data.values == once.data.values);
        CHECK(twice.dropped.empty());
        CHECK(std::is_sorted(once.data.feature_names.begin(), once.data.feature_names.end()));
    }
}

TEST_CASE("split_balanced sizes, balance and disjointness") {
    const auto ds = imbalanced(300, 30);
    const auto split = split_balanced(ds, {2.0 / 3.0, 11});
    CHECK(split.train.n() == 200);
    std::size_t held_pos = 0;
    for (std::size_t r = 0; r < ds.n(); ++r)
        if (ds.labels[r] == 1 && !std::binary_search(split.train_rows.begin(), split.train_rows.end(), r)) ++held_pos;
    const auto test_pos = split.test.positives();
    CHECK(test_pos == held_pos);
    CHECK(split.test.n() == 2 * test_pos);

    std::set<std::size_t> all(split.train_rows.begin(), split.train_rows.end());
    for (auto r : split.test_rows) CHECK(all.insert(r).second);
    CHECK(*all.rbegin() < ds.n());
    for (std::size_t i = 0; i < split.test_rows.size(); ++i)
        CHECK(split.test.labels[i] == ds.labels[split.test_rows[i]]);
}

TEST_CASE("split_balanced is deterministic per seed") {
    const auto ds = imbalanced(300, 30);
    const auto a = split_balanced(ds, {2.0 / 3.0, 4});
    const auto b = split_balanced(ds, {2.0 / 3.0, 4});
    const auto c = split_balanced(ds, {2.0 / 3.0, 5});
    CHECK(a.train_rows == b.train_rows);
    CHECK(a.test_rows == b.test_rows);
    CHECK(a.train_rows != c.train_rows);
}

TEST_CASE("split_balanced property over seeds and fractions") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto ds = imbalanced(90 + seed, 10 + seed % 7);
        const double frac = 0.3 + 0.01 * static_cast<double>(seed);
        Split split;
        try {
            split = split_balanced(ds, {frac, seed});
        } catch (const DataError&) {
            continue;
        }
        const long pos = static_cast<long>(split.test.positives());
        const long neg = static_cast<long>(split.test.n()) - pos;
        CHECK(std::abs(pos - neg) <= 1);
        CHECK(split.train.n() == static_cast<std::size_t>(std::llround(frac * static_cast<double>(ds.n()))));
    }
}

TEST_CASE("split_balanced errors") {
    // Only a single positive: it lands in train or test, never both.
    auto ds = imbalanced(30, 1);
    bool saw_error = false;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        try {
            split_balanced(ds, {2.0 / 3.0, seed});
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("cannot balance test set") != std::string::npos);
            saw_error = true;
        }
    }
    CHECK(saw_error);
    CHECK_THROWS_AS(split_balanced(imbalanced(5, 2), {}), DataError);
    CHECK_THROWS_AS(split_balanced(imbalanced(30, 3), {1.0, 0}), ValidationError);
    CHECK_THROWS_AS(split_balanced(imbalanced(30, 3), {0.0, 0}), ValidationError);
}

TEST_CASE("column_std is the population deviation") {
    Dataset ds;
    ds.values.resize(4, 2);
    ds.values << 1, 5, 2, 5, 3, 5, 4, 5;
    ds.labels = {0, 1, 0, 1};
    ds.feature_names = {"a", "b"};
    const auto sd = column_std(ds);
    CHECK(sd[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    CHECK(sd[1] == 0.0);
}

} // TEST_SUITE
