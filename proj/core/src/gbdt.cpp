#include "demcorrect/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "demcorrect/errors.hpp"
#include "demcorrect/numeric.hpp"
#include "demcorrect/parallel.hpp"

namespace demcorrect {

namespace {

using RowList = std::vector<std::uint32_t>;

// Splits whose gain is within rounding noise of zero are rejected; the floor
// scales with the node's residual energy.
constexpr double kGainFloor = 1e-13;

// Feature count times node size above which split search fans out over workers.
constexpr std::size_t kParallelSearchWork = 1u << 18;

struct NodeStats {
    double grad_sum = 0.0;
    double grad_sq = 0.0;
    std::size_t count = 0;
};

NodeStats stats_of(const RowList& rows, std::span<const double> residuals) {
    NodeStats s;
    for (auto r : rows) {
        s.grad_sum += residuals[r];
        s.grad_sq += residuals[r] * residuals[r];
    }
    s.count = rows.size();
    return s;
}

std::optional<SplitCandidate> search_feature(const std::vector<double>& x, const RowList& sorted,
                                             std::span<const double> residuals, const NodeStats& node,
                                             const GbdtParams& params, std::size_t feature) {
    const double lambda = params.lambda;
    const auto min_leaf = static_cast<std::size_t>(params.min_samples_leaf);
    const double parent = node.grad_sum * node.grad_sum / (static_cast<double>(node.count) + lambda);
    const std::size_t m = sorted.size();

    std::optional<SplitCandidate> best;
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        left_sum += residuals[sorted[i]];
        const double v = x[sorted[i]];
        const double next = x[sorted[i + 1]];
        if (v == next) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = m - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = node.grad_sum - left_sum;
        const double gain = left_sum * left_sum / (static_cast<double>(n_left) + lambda) +
                            right_sum * right_sum / (static_cast<double>(n_right) + lambda) - parent;
        if (!best || gain > best->gain) {
            double t = v + (next - v) / 2.0;
            if (!(t < next)) t = v;
            best = SplitCandidate{feature, t, gain};
        }
    }
    return best;
}

// `sorted[f]` lists the node's rows ascending by feature f.
std::optional<SplitCandidate> search(const FeatureColumns& columns, const std::vector<RowList>& sorted,
                                     std::span<const double> residuals, const NodeStats& node,
                                     const GbdtParams& params) {
    const std::size_t nf = columns.size();
    std::vector<std::optional<SplitCandidate>> per_feature(nf);
    auto run = [&](std::size_t f0, std::size_t f1) {
        for (std::size_t f = f0; f < f1; ++f)
            per_feature[f] = search_feature(columns[f], sorted[f], residuals, node, params, f);
    };
    if (node.count * nf >= kParallelSearchWork)
        parallel_for(nf, run);
    else
        run(0, nf);

    // Ascending-feature reduction with strict improvement keeps the lowest
    // feature index on ties regardless of scheduling.
    std::optional<SplitCandidate> best;
    for (const auto& c : per_feature)
        if (c && (!best || c->gain > best->gain)) best = c;
    const double floor = std::max(params.min_gain, kGainFloor * node.grad_sq);
    if (!best || !(best->gain > floor)) return std::nullopt;
    return best;
}

RowList sorted_rows(const std::vector<double>& x, RowList rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x[a] < x[b]; });
    return rows;
}

struct Work {
    int node = 0;
    int depth = 0;
    std::vector<RowList> sorted;
    NodeStats stats;
    std::optional<SplitCandidate> split;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureColumns& columns, std::span<const double> residuals, const GbdtParams& params,
                std::vector<char>& goes_left)
        : columns_(columns), residuals_(residuals), params_(params), goes_left_(goes_left) {}

    Work make_root(const std::vector<RowList>& presorted) {
        Work w;
        w.node = add_leaf(stats_of(presorted[0], residuals_));
        w.sorted = presorted;
        w.stats = stats_of(w.sorted[0], residuals_);
        return w;
    }

    void evaluate(Work& w) { w.split = search(columns_, w.sorted, residuals_, w.stats, params_); }

    std::pair<Work, Work> split(Work& w) {
        const auto& s = *w.split;
        const auto& x = columns_[s.feature];
        for (auto r : w.sorted[0]) goes_left_[r] = x[r] <= s.threshold ? 1 : 0;

        Work left, right;
        left.depth = right.depth = w.depth + 1;
        left.sorted.resize(columns_.size());
        right.sorted.resize(columns_.size());
        for (std::size_t f = 0; f < columns_.size(); ++f) {
            for (auto r : w.sorted[f]) (goes_left_[r] ? left.sorted[f] : right.sorted[f]).push_back(r);
            RowList().swap(w.sorted[f]);
        }
        left.stats = stats_of(left.sorted[0], residuals_);
        right.stats = stats_of(right.sorted[0], residuals_);
        left.node = add_leaf(left.stats);
        right.node = add_leaf(right.stats);

        auto& parent = tree_.nodes[static_cast<std::size_t>(w.node)];
        parent.feature = static_cast<int>(s.feature);
        parent.threshold = s.threshold;
        parent.left = left.node;
        parent.right = right.node;
        return {std::move(left), std::move(right)};
    }

    void finish_leaf(const Work& w, std::vector<double>& predictions) const {
        const double step = params_.learning_rate * tree_.nodes[static_cast<std::size_t>(w.node)].value;
        for (auto r : w.sorted[0]) predictions[r] += step;
    }

    RegressionTree take() { return std::move(tree_); }
    const RegressionTree& tree() const { return tree_; }

private:
    int add_leaf(const NodeStats& s) {
        TreeNode n;
        n.value = s.grad_sum / (static_cast<double>(s.count) + params_.lambda);
        tree_.nodes.push_back(n);
        return static_cast<int>(tree_.nodes.size() - 1);
    }

    const FeatureColumns& columns_;
    std::span<const double> residuals_;
    const GbdtParams& params_;
    std::vector<char>& goes_left_;
    RegressionTree tree_;
};

RegressionTree grow_depthwise(TreeBuilder& b, Work root, const GbdtParams& params,
                              std::vector<double>& predictions) {
    std::vector<Work> level;
    level.push_back(std::move(root));
    while (!level.empty()) {
        std::vector<Work> next;
        for (auto& w : level) {
            const bool may_split = params.max_depth == 0 || w.depth < params.max_depth;
            if (may_split) b.evaluate(w);
            if (may_split && w.split) {
                auto [l, r] = b.split(w);
                next.push_back(std::move(l));
                next.push_back(std::move(r));
            } else {
                b.finish_leaf(w, predictions);
            }
        }
        level = std::move(next);
    }
    return b.take();
}

RegressionTree grow_leafwise(TreeBuilder& b, Work root, const GbdtParams& params,
                             std::vector<double>& predictions) {
    std::vector<Work> frontier;
    b.evaluate(root);
    frontier.push_back(std::move(root));
    int leaves = 1;
    while (leaves < params.max_leaves) {
        // Largest gain wins; ties go to the earliest-created leaf.
        std::optional<std::size_t> pick;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            const auto& s = frontier[i].split;
            if (!s) continue;
            if (!pick || s->gain > frontier[*pick].split->gain ||
                (s->gain == frontier[*pick].split->gain && frontier[i].node < frontier[*pick].node))
                pick = i;
        }
        if (!pick) break;
        Work w = std::move(frontier[*pick]);
        frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(*pick));
        auto [l, r] = b.split(w);
        b.evaluate(l);
        b.evaluate(r);
        frontier.push_back(std::move(l));
        frontier.push_back(std::move(r));
        ++leaves;
    }
    for (const auto& w : frontier) b.finish_leaf(w, predictions);
    return b.take();
}

double rmse_of(std::span<const double> y, std::span<const double> pred) {
    CompensatedSum s;
    for (std::size_t i = 0; i < y.size(); ++i) s.add((y[i] - pred[i]) * (y[i] - pred[i]));
    return std::sqrt(s.value() / static_cast<double>(y.size()));
}

}  // namespace

void GbdtParams::validate() const {
    if (n_trees < 1) throw DomainError("n_trees must be positive");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw DomainError("learning_rate must lie in (0, 1]");
    if (max_depth < 0) throw DomainError("max_depth must be >= 0 (0 = unlimited)");
    if (max_leaves < 2) throw DomainError("max_leaves must be at least 2");
    if (min_samples_leaf < 1) throw DomainError("min_samples_leaf must be positive");
    if (!(min_gain >= 0.0)) throw DomainError("min_gain must be >= 0");
    if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
}

double RegressionTree::leaf_value(std::span<const double> x) const {
    int i = root;
    for (;;) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) return n.value;
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
}

int RegressionTree::depth() const {
    int best = 0;
    std::vector<std::pair<int, int>> stack{{root, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) {
            best = std::max(best, d);
        } else {
            stack.emplace_back(n.left, d + 1);
            stack.emplace_back(n.right, d + 1);
        }
    }
    return best;
}

int RegressionTree::leaf_count() const {
    return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::optional<SplitCandidate> best_split(const FeatureColumns& columns, std::span<const double> residuals,
                                         std::span<const std::size_t> node_rows, const GbdtParams& params) {
    if (node_rows.empty()) throw DomainError("best_split needs a non-empty node");
    RowList rows;
    rows.reserve(node_rows.size());
    for (auto r : node_rows) rows.push_back(static_cast<std::uint32_t>(r));
    std::vector<RowList> sorted;
    sorted.reserve(columns.size());
    for (const auto& col : columns) sorted.push_back(sorted_rows(col, rows));
    return search(columns, sorted, residuals, stats_of(rows, residuals), params);
}

GbdtModel fit_gbdt(const SampleTable& train, const GbdtParams& params, std::vector<double>* train_rmse) {
    params.validate();
    if (train.empty()) throw DomainError("fit_gbdt needs a non-empty training table");
    train.validate();
    const std::size_t n = train.size();
    const std::size_t nf = train.feature_names.size();

    FeatureColumns columns(nf);
    for (std::size_t f = 0; f < nf; ++f) columns[f] = train.column(f);
    const auto y = train.targets();

    GbdtModel model;
    model.params = params;
    model.feature_names = train.feature_names;
    model.base_score = compensated_mean(y);

    RowList all(n);
    std::iota(all.begin(), all.end(), 0u);
    std::vector<RowList> presorted;
    presorted.reserve(std::max<std::size_t>(nf, 1));
    for (std::size_t f = 0; f < nf; ++f) presorted.push_back(sorted_rows(columns[f], all));
    if (nf == 0) presorted.push_back(all);

    std::vector<double> predictions(n, model.base_score);
    std::vector<double> residuals(n);
    std::vector<char> goes_left(n, 0);
    if (train_rmse) {
        train_rmse->clear();
        train_rmse->push_back(rmse_of(y, predictions));
    }

    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) residuals[i] = y[i] - predictions[i];
        TreeBuilder builder(columns, residuals, params, goes_left);
        Work root = builder.make_root(presorted);
        std::vector<double> updated = predictions;
        RegressionTree tree = params.growth == Growth::depthwise
                                  ? grow_depthwise(builder, std::move(root), params, updated)
                                  : grow_leafwise(builder, std::move(root), params, updated);
        // A lone zero leaf changes nothing, and neither will any later tree.
        if (tree.nodes.size() == 1 && tree.nodes[0].value == 0.0) break;
        predictions = std::move(updated);
        model.trees.push_back(std::move(tree));
        if (train_rmse) train_rmse->push_back(rmse_of(y, predictions));
    }
    return model;
}

double predict_gbdt(const GbdtModel& model, std::span<const double> x) {
    if (x.size() != model.feature_names.size())
        throw DomainError("predict_gbdt: expected " + std::to_string(model.feature_names.size()) +
                          " features, got " + std::to_string(x.size()));
    double p = model.base_score;
    for (const auto& tree : model.trees) p += model.params.learning_rate * tree.leaf_value(x);
    return p;
}

std::vector<double> predict_gbdt(const GbdtModel& model, const SampleTable& table) {
    std::vector<std::size_t> idx;
    idx.reserve(model.feature_names.size());
    for (const auto& name : model.feature_names) idx.push_back(table.feature_index(name));
    std::vector<double> out;
    out.reserve(table.size());
    std::vector<double> x(idx.size());
    for (const auto& s : table.rows) {
        for (std::size_t j = 0; j < idx.size(); ++j) x[j] = s.features[idx[j]];
        out.push_back(predict_gbdt(model, x));
    }
    return out;
}

const char* growth_name(Growth g) noexcept { return g == Growth::depthwise ? "depthwise" : "leafwise"; }

Growth parse_growth(std::string_view name) {
    if (name == "depthwise") return Growth::depthwise;
    if (name == "leafwise") return Growth::leafwise;
    throw DomainError("unknown growth strategy '" + std::string(name) + "'");
}

}  // namespace demcorrect
