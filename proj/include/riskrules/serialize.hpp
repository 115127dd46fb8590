#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "riskrules/metrics.hpp"
#include "riskrules/rgb.hpp"
#include "riskrules/rulegen.hpp"
#include "riskrules/sslr.hpp"

namespace riskrules {

using Json = nlohmann::ordered_json;

// {"intercept", "coefficients", "feature_names"}
Json to_json(const ModelWeights& m, const std::vector<std::string>& feature_names);
ModelWeights weights_from_json(const Json& j, std::vector<std::string>* feature_names = nullptr);

// {"items": [{"feature", "score", "std"}], "risk_curve": {"slope", "intercept", "table"}}
Json to_json(const PredictionRule& rule, const RiskCurve& curve);
/// Feature indices are resolved against `feature_names` by name.
std::pair<PredictionRule, RiskCurve> rule_from_json(const Json& j, const std::vector<std::string>& feature_names);

// {"f0", "rate", "trees": [{"features", "nodes"}], "feature_names"}
Json to_json(const RgbEnsemble& model);
RgbEnsemble ensemble_from_json(const Json& j);

// threshold, sensitivity, specificity, ppv, npv, f_measure, auc (null when
// undefined) followed by the confusion counts.
Json to_json(const EvalReport& r);
std::string format_report(const EvalReport& r);

} // namespace riskrules
