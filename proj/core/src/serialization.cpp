#include "demcorrect/serialization.hpp"

#include <cmath>

#include "demcorrect/errors.hpp"

namespace demcorrect {

namespace {

template <class T>
T get(const Json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

const Json& field(const Json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    return doc[key];
}

template <class T>
T get_or(const Json& doc, const char* key, T fallback) {
    if (!doc.is_object() || !doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

void check_header(const Json& doc, const char* format) {
    if (!doc.is_object()) throw FormatError("model document must be a JSON object");
    const auto tag = get<std::string>(doc, "format");
    if (tag != format) throw FormatError("expected format '" + std::string(format) + "', found '" + tag + "'");
    const auto version = get<int>(doc, "version");
    if (version != kModelFormatVersion)
        throw FormatError("unsupported " + tag + " version " + std::to_string(version));
}

Json tree_to_json(const RegressionTree& tree) {
    Json nodes = Json::array();
    for (const auto& n : tree.nodes) {
        if (n.is_leaf())
            nodes.push_back({{"value", n.value}});
        else
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    return {{"root", tree.root}, {"nodes", std::move(nodes)}};
}

RegressionTree tree_from_json(const Json& doc, std::size_t n_features, std::size_t index) {
    const std::string where = "tree " + std::to_string(index) + ": ";
    RegressionTree tree;
    tree.root = get<int>(doc, "root");
    const auto& nodes = field(doc, "nodes");
    if (!nodes.is_array() || nodes.empty()) throw FormatError(where + "nodes must be a non-empty array");
    for (const auto& nd : nodes) {
        TreeNode n;
        if (nd.contains("value")) {
            n.value = get<double>(nd, "value");
        } else {
            n.feature = get<int>(nd, "feature");
            n.threshold = get<double>(nd, "threshold");
            n.left = get<int>(nd, "left");
            n.right = get<int>(nd, "right");
            if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features)
                throw FormatError(where + "split feature index out of range");
        }
        tree.nodes.push_back(n);
    }
    // Every node must be reached exactly once from the root: no cycles, no
    // shared children, no orphans.
    const auto count = static_cast<int>(tree.nodes.size());
    std::vector<char> seen(tree.nodes.size(), 0);
    std::vector<int> stack{tree.root};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        if (i < 0 || i >= count) throw FormatError(where + "node link out of range");
        if (seen[static_cast<std::size_t>(i)]) throw FormatError(where + "node graph has a cycle or shared child");
        seen[static_cast<std::size_t>(i)] = 1;
        const auto& n = tree.nodes[static_cast<std::size_t>(i)];
        if (!n.is_leaf()) {
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw FormatError(where + "node graph has unreachable nodes");
    return tree;
}

}  // namespace

Json real_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

Json to_json(const GbdtParams& p) {
    return {{"n_trees", p.n_trees},       {"learning_rate", p.learning_rate},
            {"growth", growth_name(p.growth)}, {"max_depth", p.max_depth},
            {"max_leaves", p.max_leaves}, {"min_samples_leaf", p.min_samples_leaf},
            {"min_gain", p.min_gain},     {"lambda", p.lambda},
            {"seed", p.seed}};
}

GbdtParams gbdt_params_from_json(const Json& doc, GbdtParams p) {
    p.n_trees = get_or(doc, "n_trees", p.n_trees);
    p.learning_rate = get_or(doc, "learning_rate", p.learning_rate);
    if (doc.contains("growth")) {
        try {
            p.growth = parse_growth(get<std::string>(doc, "growth"));
        } catch (const DomainError& e) {
            throw FormatError(e.what());
        }
    }
    p.max_depth = get_or(doc, "max_depth", p.max_depth);
    p.max_leaves = get_or(doc, "max_leaves", p.max_leaves);
    p.min_samples_leaf = get_or(doc, "min_samples_leaf", p.min_samples_leaf);
    p.min_gain = get_or(doc, "min_gain", p.min_gain);
    p.lambda = get_or(doc, "lambda", p.lambda);
    p.seed = get_or(doc, "seed", p.seed);
    return p;
}

Json serialize_model(const GbdtModel& model) {
    Json trees = Json::array();
    for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
    return {{"format", kGbdtFormat},
            {"version", kModelFormatVersion},
            {"params", to_json(model.params)},
            {"feature_names", model.feature_names},
            {"base_score", model.base_score},
            {"trees", std::move(trees)}};
}

GbdtModel deserialize_model(const Json& doc) {
    check_header(doc, kGbdtFormat);
    GbdtModel model;
    model.params = gbdt_params_from_json(field(doc, "params"));
    try {
        model.params.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("params: ") + e.what());
    }
    model.feature_names = get<std::vector<std::string>>(doc, "feature_names");
    model.base_score = get<double>(doc, "base_score");
    const auto& trees = field(doc, "trees");
    if (!trees.is_array()) throw FormatError("trees must be an array");
    if (trees.size() > static_cast<std::size_t>(model.params.n_trees))
        throw FormatError("document holds more trees than params.n_trees");
    for (std::size_t t = 0; t < trees.size(); ++t)
        model.trees.push_back(tree_from_json(trees[t], model.feature_names.size(), t));
    return model;
}

Json serialize_linear_model(const LinearModel& m) {
    return {{"format", kLinearFormat},       {"version", kModelFormatVersion},
            {"feature_names", m.feature_names}, {"intercept", m.intercept},
            {"coefficients", m.coefficients}, {"r_squared", m.r_squared},
            {"residual_std", m.residual_std}};
}

LinearModel deserialize_linear_model(const Json& doc) {
    check_header(doc, kLinearFormat);
    LinearModel m;
    m.feature_names = get<std::vector<std::string>>(doc, "feature_names");
    m.intercept = get<double>(doc, "intercept");
    m.coefficients = get<std::vector<double>>(doc, "coefficients");
    m.r_squared = get_or(doc, "r_squared", 0.0);
    m.residual_std = get_or(doc, "residual_std", 0.0);
    if (m.coefficients.size() != m.feature_names.size())
        throw FormatError("linear model needs one coefficient per feature");
    return m;
}

Json to_json(const CollinearityReport& r) {
    Json pearson = Json::array();
    for (std::size_t i = 0; i < r.pearson.rows; ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < r.pearson.cols; ++j) row.push_back(r.pearson(i, j));
        pearson.push_back(std::move(row));
    }
    auto reals = [](const std::vector<double>& v) {
        Json a = Json::array();
        for (double x : v) a.push_back(real_or_inf(x));
        return a;
    };
    return {{"variable_names", r.variable_names},
            {"thresholds", {{"r_abs", real_or_inf(r.thresholds.r_abs)}, {"vif", real_or_inf(r.thresholds.vif)}}},
            {"pearson", std::move(pearson)},
            {"vif", reals(r.vif)},
            {"flagged", r.flagged},
            {"flagged_vif", reals(r.flagged_vif)},
            {"retained", r.retained},
            {"retained_vif", reals(r.retained_vif)},
            {"notes", r.notes}};
}

Json to_json(const Metrics& m) {
    return {{"n", m.n}, {"me", m.me}, {"mae", m.mae}, {"rmse", m.rmse}, {"std", m.std}};
}

namespace {
Json stratum_json(const StratumReport& s, const std::vector<std::string>& models) {
    Json after = Json::object();
    Json pct = Json::object();
    for (const auto& m : models) {
        after[m] = to_json(s.after.at(m));
        const auto it = s.pct_reduction.find(m);
        pct[m] = it == s.pct_reduction.end() ? Json(nullptr) : Json(it->second);
    }
    Json j = {{"name", s.name}};
    j["label"] = s.label ? Json(*s.label) : Json(nullptr);
    j["before"] = to_json(s.before);
    j["after"] = std::move(after);
    j["pct_rmse_reduction"] = std::move(pct);
    return j;
}
}  // namespace

Json to_json(const EvaluationReport& r) {
    Json strata = Json::array();
    for (const auto& s : r.strata) strata.push_back(stratum_json(s, r.models));
    Json prov = Json::object();
    for (const auto& [k, v] : r.provenance) prov[k] = v;
    return {{"models", r.models},
            {"strata", std::move(strata)},
            {"overall", stratum_json(r.overall, r.models)},
            {"warnings", r.warnings},
            {"provenance", std::move(prov)}};
}

Json to_json(const ErrorSpec& s) {
    Json linear = Json::object();
    for (const auto& [name, coef] : s.linear_terms) linear[name] = coef;
    Json nonlinear = Json::array();
    for (const auto& t : s.nonlinear_terms) {
        Json j = {{"feature", t.feature}, {"kind", term_kind_name(t.kind)}, {"amplitude", t.amplitude}, {"scale", t.scale}};
        if (!t.partner.empty()) j["partner"] = t.partner;
        nonlinear.push_back(std::move(j));
    }
    return {{"standardization", "population z-score over valid cells"},
            {"linear_terms", std::move(linear)},
            {"nonlinear_terms", std::move(nonlinear)},
            {"noise_std", s.noise_std},
            {"seed", s.seed}};
}

ErrorSpec error_spec_from_json(const Json& doc) {
    ErrorSpec s;
    if (doc.contains("linear_terms")) {
        const auto& lt = doc.at("linear_terms");
        if (!lt.is_object()) throw FormatError("linear_terms must be an object");
        for (const auto& [name, coef] : lt.items()) {
            if (!coef.is_number()) throw FormatError("linear term '" + name + "' must be numeric");
            s.linear_terms.emplace_back(name, coef.get<double>());
        }
    }
    if (doc.contains("nonlinear_terms")) {
        for (const auto& j : doc.at("nonlinear_terms")) {
            NonlinearTerm t;
            t.feature = get<std::string>(j, "feature");
            try {
                t.kind = parse_term_kind(get<std::string>(j, "kind"));
            } catch (const DomainError& e) {
                throw FormatError(e.what());
            }
            t.amplitude = get_or(j, "amplitude", 1.0);
            t.scale = get_or(j, "scale", 1.0);
            t.partner = get_or<std::string>(j, "partner", "");
            s.nonlinear_terms.push_back(std::move(t));
        }
    }
    s.noise_std = get_or(doc, "noise_std", 0.0);
    s.seed = get_or<std::uint64_t>(doc, "seed", 0);
    return s;
}

Json to_json(const WindowSpec& w) {
    return {{"radius", w.radius}, {"min_valid_fraction", w.min_valid_fraction}};
}

WindowSpec window_from_json(const Json& doc, WindowSpec w) {
    w.radius = get_or(doc, "radius", w.radius);
    w.min_valid_fraction = get_or(doc, "min_valid_fraction", w.min_valid_fraction);
    return w;
}

Json to_json(const TerrainConfig& c) {
    return {{"roughness", to_json(c.roughness)}, {"tpi", to_json(c.tpi)},
            {"vrm", to_json(c.vrm)},             {"texture", to_json(c.texture)},
            {"texture_threshold", c.texture_threshold}, {"landcover", to_json(c.landcover)}};
}

TerrainConfig terrain_config_from_json(const Json& doc) {
    TerrainConfig c;
    auto window = [&](const char* key, WindowSpec& w) {
        if (doc.contains(key)) w = window_from_json(doc.at(key), w);
    };
    window("roughness", c.roughness);
    window("tpi", c.tpi);
    window("vrm", c.vrm);
    window("texture", c.texture);
    window("landcover", c.landcover);
    c.texture_threshold = get_or(doc, "texture_threshold", c.texture_threshold);
    return c;
}

}  // namespace demcorrect
