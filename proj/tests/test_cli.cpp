#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "riskrules/cli.hpp"
#include "riskrules/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = riskrules::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "riskrules_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help and unknown subcommands") {
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({"train", "--help"}).code == 0);
    CHECK(invoke({"bogus"}).code == 1);
    CHECK(invoke({}).code == 1);
}

TEST_CASE("full pipeline on synthetic count data") {
    const auto data = scratch("data.csv"), train = scratch("train.csv"), test = scratch("test.csv");
    const auto truth = scratch("truth.json"), model = scratch("model.json"), rule = scratch("rule.json");
    const auto ens = scratch("ens.json"), roc = scratch("roc.csv"), sim = scratch("sim.csv");

    REQUIRE(invoke({"synth", "--n", "400", "--p", "12", "--group-size", "3", "--rho", "0.5", "--signal-groups", "2",
                    "--signal-strength", "1.5", "--count-threshold", "0.3", "--intercept", "-0.5", "--seed", "3",
                    "--out", data.string(), "--truth-out", truth.string()})
                .code == 0);
    const auto truth_json = riskrules::Json::parse(slurp(truth));
    CHECK(truth_json["true_weights"].size() == 12);
    CHECK(truth_json["groups"].size() == 4);

    REQUIRE(invoke({"prep", "--data", data.string(), "--min-prevalence", "0.01", "--seed", "1", "--train-out",
                    train.string(), "--test-out", test.string()})
                .code == 0);

    const auto t = invoke({"train", "--data", train.string(), "--lambda", "2", "--out", model.string(),
                           "--similarity-out", sim.string()});
    REQUIRE(t.code == 0);
    const auto mj = riskrules::Json::parse(slurp(model));
    CHECK(mj.contains("intercept"));
    CHECK(mj["coefficients"].size() == mj["feature_names"].size());
    CHECK(fs::exists(sim));

    REQUIRE(invoke({"rule", "--data", train.string(), "--k", "4", "--B", "5", "--seed", "2", "--out", rule.string()})
                .code == 0);
    CHECK(fs::exists(scratch("rule.txt")));
    CHECK(slurp(scratch("rule.txt")).find("1. ") != std::string::npos);

    REQUIRE(invoke({"boost", "--data", train.string(), "--trees", "20", "--rate", "0.1", "--out", ens.string()}).code ==
            0);

    for (const auto& m : {model, rule, ens}) {
        const auto e = invoke({"eval", "--model", m.string(), "--data", test.string(), "--roc", roc.string()});
        REQUIRE(e.code == 0);
        const auto j = riskrules::Json::parse(e.out);
        for (const char* key : {"sensitivity", "specificity", "ppv", "npv", "f_measure", "auc", "threshold"})
            CHECK(j.contains(key));
        CHECK(slurp(roc).rfind("fpr,tpr\n", 0) == 0);
    }
}

TEST_CASE("validation errors exit 1 with a message") {
    const auto data = scratch("small.csv");
    REQUIRE(invoke({"synth", "--n", "60", "--p", "4", "--group-size", "2", "--seed", "1", "--out", data.string()})
                .code == 0);
    const auto r = invoke({"train", "--data", data.string(), "--alpha", "1.5", "--out", scratch("x.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("alpha must be in [0,1]") != std::string::npos);
    CHECK_FALSE(fs::exists(scratch("x.json")));

    CHECK(invoke({"train", "--data", data.string(), "--lambda", "-1", "--out", scratch("x.json").string()}).code == 1);
    CHECK(invoke({"rule", "--data", data.string(), "--k", "0", "--out", scratch("x.json").string()}).code == 1);
    CHECK(invoke({"train", "--data", data.string()}).code == 1); // missing --out
}

TEST_CASE("runtime errors exit 2") {
    CHECK(invoke({"train", "--data", scratch("missing.csv").string(), "--out", scratch("x.json").string()}).code == 2);
    const auto bad = scratch("bad.csv");
    std::ofstream(bad) << "a,y\n1,1\nfoo,0\n";
    const auto r = invoke({"train", "--data", bad.string(), "--out", scratch("x.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("row") != std::string::npos);
}

} // TEST_SUITE
