#include "riskrules/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "riskrules/dataset.hpp"
#include "riskrules/error.hpp"
#include "riskrules/metrics.hpp"
#include "riskrules/rgb.hpp"
#include "riskrules/rulegen.hpp"
#include "riskrules/serialize.hpp"
#include "riskrules/similarity.hpp"
#include "riskrules/sslr.hpp"
#include "riskrules/synth.hpp"

namespace riskrules {

namespace {

namespace fs = std::filesystem;

// Writes next to the target and renames, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError(fmt::format("cannot write '{}'", tmp.string()));
        f << content;
        if (!f.flush()) throw DataError(fmt::format("cannot write '{}'", tmp.string()));
    }
    fs::rename(tmp, path);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw DataError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
    }
}

/// Reorders the columns of `ds` to `names`.
Dataset align_columns(const Dataset& ds, const std::vector<std::string>& names) {
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& name : names) cols.push_back(feature_index(ds, name));
    return select_columns(ds, cols);
}

struct PrepArgs {
    std::string data, label = "y", train_out, test_out, dropped_out;
    double min_prevalence = 0.01;
    SplitSpec split;
};

struct SslrArgs {
    double lambda = 5.0, alpha = 0.5, tol = 1e-8;
    int max_iter = 10000;
    bool penalize_intercept = false;

    SslrConfig config() const {
        SslrConfig c;
        c.lambda = lambda;
        c.alpha = alpha;
        c.tolerance = tol;
        c.max_iterations = max_iter;
        c.penalize_intercept = penalize_intercept;
        return c;
    }
    Json echo() const {
        return {{"lambda", lambda}, {"alpha", alpha}, {"max_iterations", max_iter}, {"tolerance", tol},
                {"penalize_intercept", penalize_intercept}};
    }
};

struct TrainArgs {
    std::string data, label = "y", out, similarity_out;
    bool standardize = false;
    SslrArgs sslr;
};

struct RuleArgs {
    std::string data, label = "y", out, card, curve_data;
    SslrArgs sslr;
    RuleGenConfig rg;
    bool raw_scores = false;
};

struct BoostArgs {
    std::string data, label = "y", out;
    RgbConfig rgb;
};

struct EvalArgs {
    std::string model, data, label = "y", roc;
    std::optional<double> threshold;
};

struct SynthArgs {
    SynthConfig cfg;
    std::string weights, out, truth_out;
    std::vector<std::string> interactions;
    std::size_t signal_groups = 0;
    double signal_strength = 1.0;
    std::optional<double> count_threshold;
};

void run_prep(const PrepArgs& a, std::ostream& err) {
    validate(a.split);
    if (!(a.min_prevalence >= 0.0 && a.min_prevalence <= 1.0))
        throw ValidationError("min-prevalence must be in [0,1]");
    const Dataset ds = load_table(a.data, a.label);
    const auto filtered = filter_rare_features(ds, a.min_prevalence);
    const auto split = split_balanced(filtered.data, a.split);

    std::ostringstream train, test;
    write_table(split.train, train);
    write_table(split.test, test);
    write_atomic(a.train_out, train.str());
    write_atomic(a.test_out, test.str());
    if (!a.dropped_out.empty()) {
        std::string dropped;
        for (const auto& name : filtered.dropped) dropped += name + "\n";
        write_atomic(a.dropped_out, dropped);
    }
    err << fmt::format("prep: {} rows, {} of {} features kept; train {} rows, balanced test {} rows\n", ds.n(),
                       filtered.data.p(), ds.p(), split.train.n(), split.test.n());
}

void run_train(const TrainArgs& a, std::ostream& err) {
    const SslrConfig cfg = a.sslr.config();
    validate(cfg);
    const Dataset raw = load_table(a.data, a.label);

    Dataset fit_data = raw;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(raw.p()));
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(raw.p()));
    if (a.standardize) {
        const Eigen::VectorXd sd = column_std(raw);
        for (Eigen::Index j = 0; j < sd.size(); ++j) {
            mean[j] = raw.values.col(j).mean();
            scale[j] = sd[j] > 0.0 ? sd[j] : 1.0;
            fit_data.values.col(j) = (raw.values.col(j).array() - mean[j]) / scale[j];
        }
    }
    const SimilarityMatrix s = cosine_similarity_matrix(fit_data);
    const SslrFit fit = fit_sslr(fit_data, s, cfg);
    if (!fit.converged)
        err << fmt::format("train: warning: solver stopped after {} iterations without converging\n", fit.iterations);

    // Report weights on the original feature scale.
    ModelWeights w = fit.weights;
    w.coefficients = fit.weights.coefficients.cwiseQuotient(scale);
    w.intercept = fit.weights.intercept - w.coefficients.dot(mean);

    const Eigen::VectorXd probs = predict_proba(w, raw);
    Json j = to_json(w, raw.feature_names);
    j["threshold"] = select_threshold({probs.data(), static_cast<std::size_t>(probs.size())}, raw.labels);
    j["objective"] = fit.objective;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    Json config = a.sslr.echo();
    config["command"] = "train";
    config["data"] = a.data;
    config["label"] = a.label;
    config["standardize"] = a.standardize;
    j["config"] = std::move(config);
    write_atomic(a.out, dump(j));
    if (!a.similarity_out.empty()) {
        std::ostringstream csv;
        write_similarity_csv(s, csv);
        write_atomic(a.similarity_out, csv.str());
    }
    const auto nonzero = (w.coefficients.array() != 0.0).count();
    err << fmt::format("train: {} of {} coefficients nonzero, objective {:.6f}, {} iterations\n", nonzero, raw.p(),
                       fit.objective, fit.iterations);
}

void run_rule(const RuleArgs& a, std::ostream& err) {
    const SslrConfig cfg = a.sslr.config();
    validate(cfg);
    validate(a.rg);
    const Dataset ds = load_table(a.data, a.label);
    const SimilarityMatrix s = cosine_similarity_matrix(ds);
    const auto summary = bootstrap_average(ds, s, cfg, a.rg);
    const auto ranking = feature_importance(summary, ds);
    const PredictionRule rule = derive_rule(summary, ranking, ds.feature_names, a.rg);
    const RuleScoring mode = a.raw_scores ? RuleScoring::Raw : RuleScoring::Binary;

    const Dataset curve_data = a.curve_data.empty() ? ds : align_columns(load_table(a.curve_data, a.label), ds.feature_names);
    RiskCurve curve;
    try {
        curve = fit_risk_curve(rule, curve_data, mode);
    } catch (const DataError& e) {
        // Presence scoring collapses when every selected feature is nonzero in every row.
        if (a.raw_scores) throw;
        throw DataError(fmt::format("{} (features are never zero; try --raw-scores)", e.what()));
    }

    const Eigen::VectorXd scores = rule_scores(rule, ds, mode);
    std::vector<double> probs(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index d = 0; d < scores.size(); ++d) probs[static_cast<std::size_t>(d)] = curve.probability(scores[d]);

    Json j = to_json(rule, curve);
    j["threshold"] = select_threshold(probs, ds.labels);
    Json config = a.sslr.echo();
    config["command"] = "rule";
    config["data"] = a.data;
    config["label"] = a.label;
    config["k"] = a.rg.k;
    config["B"] = a.rg.bootstraps;
    config["seed"] = a.rg.seed;
    config["score_cap"] = a.rg.score_cap;
    config["raw_scores"] = a.raw_scores;
    config["curve_data"] = a.curve_data.empty() ? a.data : a.curve_data;
    j["config"] = std::move(config);
    write_atomic(a.out, dump(j));

    fs::path card = a.card;
    if (card.empty()) card = fs::path(a.out).replace_extension(".txt");
    std::ostringstream text;
    write_score_card(rule, curve, text);
    write_atomic(card, text.str());
    err << fmt::format("rule: {} items from {} bootstraps; score card written to {}\n", rule.items.size(),
                       a.rg.bootstraps, card.string());
}

void run_boost(const BoostArgs& a, std::ostream& err) {
    // Range checks that do not depend on p run before the data is read.
    if (a.rgb.per_tree_features < 0 || a.rgb.per_node_features < 0)
        throw ValidationError("feature subset sizes must be positive");
    resolve(RgbConfig{a.rgb.n_trees, a.rgb.learning_rate, a.rgb.max_leaves, 1, 1, a.rgb.row_subsample,
                      a.rgb.min_samples_leaf, a.rgb.seed},
            1);
    const Dataset ds = load_table(a.data, a.label);
    const RgbConfig cfg = resolve(a.rgb, ds.p());
    const RgbEnsemble model = fit_rgb(ds, cfg);
    const Eigen::VectorXd probs = rgb_predict_proba(model, ds);

    Json j = to_json(model);
    j["threshold"] = select_threshold({probs.data(), static_cast<std::size_t>(probs.size())}, ds.labels);
    j["config"] = {{"command", "boost"},
                   {"data", a.data},
                   {"label", a.label},
                   {"n_trees", cfg.n_trees},
                   {"learning_rate", cfg.learning_rate},
                   {"max_leaves", cfg.max_leaves},
                   {"per_tree_features", cfg.per_tree_features},
                   {"per_node_features", cfg.per_node_features},
                   {"row_subsample", cfg.row_subsample},
                   {"min_samples_leaf", cfg.min_samples_leaf},
                   {"seed", cfg.seed}};
    write_atomic(a.out, dump(j));
    err << fmt::format("boost: {} trees, {} features per tree, {} per node\n", model.trees.size(),
                       cfg.per_tree_features, cfg.per_node_features);
}

void run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    if (a.threshold && !(*a.threshold >= 0.0 && *a.threshold <= 1.0))
        throw ValidationError("threshold must be in [0,1]");
    const Json model = read_json(a.model);
    const Dataset ds = load_table(a.data, a.label);

    std::vector<double> probs;
    std::string kind;
    if (model.contains("coefficients")) {
        kind = "sslr";
        std::vector<std::string> names;
        const ModelWeights w = weights_from_json(model, &names);
        const Eigen::VectorXd pr = predict_proba(w, align_columns(ds, names));
        probs.assign(pr.data(), pr.data() + pr.size());
    } else if (model.contains("items")) {
        kind = "rule";
        const auto [rule, curve] = rule_from_json(model, ds.feature_names);
        const bool raw = model.contains("config") && model["config"].value("raw_scores", false);
        const Eigen::VectorXd scores = rule_scores(rule, ds, raw ? RuleScoring::Raw : RuleScoring::Binary);
        for (Eigen::Index d = 0; d < scores.size(); ++d) probs.push_back(curve.probability(scores[d]));
    } else if (model.contains("f0")) {
        kind = "rgb";
        const RgbEnsemble ens = ensemble_from_json(model);
        const Dataset aligned = ens.feature_names.empty() ? ds : align_columns(ds, ens.feature_names);
        const Eigen::VectorXd pr = rgb_predict_proba(ens, aligned);
        probs.assign(pr.data(), pr.data() + pr.size());
    } else {
        throw DataError(fmt::format("{}: unrecognized model JSON", a.model));
    }

    double tau = 0.5;
    if (a.threshold)
        tau = *a.threshold;
    else if (model.contains("threshold"))
        tau = model["threshold"].get<double>();
    else
        err << "eval: warning: model has no stored threshold, using 0.5\n";

    EvalReport report = confusion_metrics(probs, ds.labels, tau);
    const auto pos = ds.positives();
    if (pos > 0 && pos < ds.n()) report.auc = auc(probs, ds.labels);
    else err << "eval: warning: single-class data, AUC undefined\n";

    Json j = to_json(report);
    j["n"] = ds.n();
    j["config"] = {{"command", "eval"}, {"model", a.model}, {"model_kind", kind}, {"data", a.data},
                   {"label", a.label}, {"threshold", a.threshold ? Json(*a.threshold) : Json(nullptr)}};
    out << dump(j);
    err << format_report(report);

    if (!a.roc.empty()) {
        if (!report.auc) throw DataError("ROC needs both classes present");
        std::string csv = "fpr,tpr\n";
        for (const auto& [fpr, tpr] : roc_points(probs, ds.labels)) csv += fmt::format("{},{}\n", fpr, tpr);
        write_atomic(a.roc, csv);
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(fmt::format("cannot parse '{}' as a number", item));
        }
    }
    return out;
}

void run_synth(SynthArgs a, std::ostream& err) {
    SynthConfig& cfg = a.cfg;
    cfg.count_threshold = a.count_threshold;
    if (!a.weights.empty()) {
        cfg.true_weights = parse_list(a.weights);
    } else if (a.signal_groups > 0) {
        if (cfg.group_size == 0 || cfg.p % cfg.group_size != 0)
            throw ValidationError("p must be divisible by group_size");
        if (a.signal_groups > cfg.p / cfg.group_size)
            throw ValidationError("signal-groups exceeds the number of groups");
        cfg.true_weights.assign(cfg.p, 0.0);
        for (std::size_t g = 0; g < a.signal_groups; ++g)
            cfg.true_weights[g * cfg.group_size] = (g % 2 == 0 ? 1.0 : -1.0) * a.signal_strength;
    }
    for (const auto& spec : a.interactions) {
        const auto parts = parse_list(spec);
        if (parts.size() != 3 || parts[0] < 0 || parts[1] < 0)
            throw ValidationError(fmt::format("interaction '{}' must be i,j,weight", spec));
        cfg.interactions.push_back({static_cast<std::size_t>(parts[0]), static_cast<std::size_t>(parts[1]), parts[2]});
    }
    validate(cfg);
    const Dataset ds = generate(cfg);
    std::ostringstream csv;
    write_table(ds, csv);
    write_atomic(a.out, csv.str());

    if (!a.truth_out.empty()) {
        Json interactions = Json::array();
        for (const auto& it : cfg.interactions)
            interactions.push_back({{"first", it.first}, {"second", it.second}, {"weight", it.weight}});
        std::vector<double> weights = cfg.true_weights;
        if (weights.empty()) weights.assign(cfg.p, 0.0);
        Json j;
        j["true_weights"] = weights;
        j["groups"] = feature_groups(cfg);
        j["intercept"] = cfg.intercept;
        j["interactions"] = std::move(interactions);
        j["config"] = {{"command", "synth"}, {"n", cfg.n}, {"p", cfg.p}, {"group_size", cfg.group_size},
                       {"rho", cfg.rho}, {"seed", cfg.seed},
                       {"count_threshold", cfg.count_threshold ? Json(*cfg.count_threshold) : Json(nullptr)}};
        write_atomic(a.truth_out, dump(j));
    }
    err << fmt::format("synth: {} rows, {} features, {} positives\n", ds.n(), ds.p(), ds.positives());
}

void add_sslr_flags(CLI::App* cmd, SslrArgs& s) {
    cmd->add_option("--lambda", s.lambda, "Penalty factor")->capture_default_str();
    cmd->add_option("--alpha", s.alpha, "l1 / similarity mixing in [0,1]")->capture_default_str();
    cmd->add_option("--max-iter", s.max_iter, "Solver iteration cap")->capture_default_str();
    cmd->add_option("--tol", s.tol, "Relative objective decrease tolerance")->capture_default_str();
    cmd->add_flag("--penalize-intercept", s.penalize_intercept, "Include the intercept in the penalty");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stable sparse risk rules: penalized logistic models, integer score cards and boosted ensembles",
                 "riskrules"};
    app.require_subcommand(1);

    PrepArgs prep;
    auto* prep_cmd = app.add_subcommand("prep", "Filter rare features and split into train / balanced test");
    prep_cmd->add_option("--data", prep.data, "Input CSV")->required();
    prep_cmd->add_option("--label", prep.label, "Label column")->capture_default_str();
    prep_cmd->add_option("--min-prevalence", prep.min_prevalence, "Minimum nonzero fraction")->capture_default_str();
    prep_cmd->add_option("--train-fraction", prep.split.train_fraction, "Training share")->capture_default_str();
    prep_cmd->add_option("--seed", prep.split.seed, "Shuffle seed")->capture_default_str();
    prep_cmd->add_option("--train-out", prep.train_out, "Training CSV")->required();
    prep_cmd->add_option("--test-out", prep.test_out, "Balanced test CSV")->required();
    prep_cmd->add_option("--dropped-out", prep.dropped_out, "Dropped feature names, one per line");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Fit one stabilized sparse logistic regression");
    train_cmd->add_option("--data", train.data, "Training CSV")->required();
    train_cmd->add_option("--label", train.label, "Label column")->capture_default_str();
    add_sslr_flags(train_cmd, train.sslr);
    train_cmd->add_flag("--standardize", train.standardize, "Fit on standardized columns");
    train_cmd->add_option("--out", train.out, "Model JSON")->required();
    train_cmd->add_option("--similarity-out", train.similarity_out, "Similarity matrix CSV");

    RuleArgs rule;
    auto* rule_cmd = app.add_subcommand("rule", "Derive an integer score card by bootstrap averaging");
    rule_cmd->add_option("--data", rule.data, "Training CSV")->required();
    rule_cmd->add_option("--label", rule.label, "Label column")->capture_default_str();
    add_sslr_flags(rule_cmd, rule.sslr);
    rule_cmd->add_option("--k", rule.rg.k, "Retained features")->capture_default_str();
    rule_cmd->add_option("--B", rule.rg.bootstraps, "Bootstrap replicates")->capture_default_str();
    rule_cmd->add_option("--seed", rule.rg.seed, "Bootstrap seed")->capture_default_str();
    rule_cmd->add_option("--score-cap", rule.rg.score_cap, "Largest item score")->capture_default_str();
    rule_cmd->add_option("--threads", rule.rg.threads, "Worker threads (0 = all cores)")->capture_default_str();
    rule_cmd->add_flag("--raw-scores", rule.raw_scores, "Score raw feature values instead of presence");
    rule_cmd->add_option("--curve-data", rule.curve_data, "CSV to fit the risk curve on (default: --data)");
    rule_cmd->add_option("--out", rule.out, "Rule JSON")->required();
    rule_cmd->add_option("--card", rule.card, "Score card text (default: --out with .txt)");

    BoostArgs boost;
    auto* boost_cmd = app.add_subcommand("boost", "Fit a randomized gradient boosted ensemble");
    boost_cmd->add_option("--data", boost.data, "Training CSV")->required();
    boost_cmd->add_option("--label", boost.label, "Label column")->capture_default_str();
    boost_cmd->add_option("--trees", boost.rgb.n_trees, "Number of trees")->capture_default_str();
    boost_cmd->add_option("--rate", boost.rgb.learning_rate, "Learning rate")->capture_default_str();
    boost_cmd->add_option("--max-leaves", boost.rgb.max_leaves, "Leaves per tree")->capture_default_str();
    boost_cmd->add_option("--tree-features", boost.rgb.per_tree_features, "Features per tree (0 = floor(p/3))")
        ->capture_default_str();
    boost_cmd->add_option("--node-features", boost.rgb.per_node_features, "Features per split (0 = ceil(m/3))")
        ->capture_default_str();
    boost_cmd->add_option("--subsample", boost.rgb.row_subsample, "Row fraction per tree")->capture_default_str();
    boost_cmd->add_option("--min-leaf", boost.rgb.min_samples_leaf, "Minimum rows per leaf")->capture_default_str();
    boost_cmd->add_option("--seed", boost.rgb.seed, "Sampling seed")->capture_default_str();
    boost_cmd->add_option("--out", boost.out, "Model JSON")->required();

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model JSON on a labelled CSV");
    eval_cmd->add_option("--model", eval.model, "Model, rule or ensemble JSON")->required();
    eval_cmd->add_option("--data", eval.data, "Evaluation CSV")->required();
    eval_cmd->add_option("--label", eval.label, "Label column")->capture_default_str();
    eval_cmd->add_option("--threshold", eval.threshold, "Decision threshold (default: stored in the model)");
    eval_cmd->add_option("--roc", eval.roc, "Write fpr,tpr points to this CSV");

    SynthArgs synth;
    synth.cfg.rho = 0.9;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a correlated-block synthetic dataset");
    synth_cmd->add_option("--n", synth.cfg.n, "Rows")->capture_default_str();
    synth_cmd->add_option("--p", synth.cfg.p, "Features")->capture_default_str();
    synth_cmd->add_option("--group-size", synth.cfg.group_size, "Features per correlated block")->capture_default_str();
    synth_cmd->add_option("--rho", synth.cfg.rho, "Within-block correlation")->capture_default_str();
    synth_cmd->add_option("--true-weights", synth.weights, "Comma-separated weights, length p");
    synth_cmd->add_option("--signal-groups", synth.signal_groups,
                          "Put alternating +-strength on the first member of this many groups");
    synth_cmd->add_option("--signal-strength", synth.signal_strength, "Weight magnitude for --signal-groups")
        ->capture_default_str();
    synth_cmd->add_option("--intercept", synth.cfg.intercept, "Label logit intercept")->capture_default_str();
    synth_cmd->add_option("--interaction", synth.interactions, "i,j,weight product term (repeatable)");
    synth_cmd->add_option("--count-threshold", synth.count_threshold, "Emit indicators latent > threshold");
    synth_cmd->add_option("--seed", synth.cfg.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Dataset CSV")->required();
    synth_cmd->add_option("--truth-out", synth.truth_out, "Ground-truth JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (prep_cmd->parsed()) run_prep(prep, err);
        else if (train_cmd->parsed()) run_train(train, err);
        else if (rule_cmd->parsed()) run_rule(rule, err);
        else if (boost_cmd->parsed()) run_boost(boost, err);
        else if (eval_cmd->parsed()) run_eval(eval, out, err);
        else if (synth_cmd->parsed()) run_synth(synth, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace riskrules
