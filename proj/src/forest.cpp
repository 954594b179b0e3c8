#include "gcnwp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "gcnwp/error.hpp"
#include "gcnwp/gcn.hpp"

namespace gcnwp {

namespace {

struct Builder {
    const Matrix& rows;
    const std::vector<int>& labels;
    const ForestConfig& config;
    std::mt19937_64& rng;
    DecisionTree tree;

    std::size_t draw(std::size_t n) {
        return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    }

    int grow(std::vector<std::size_t>& sample, int depth) {
        double pos = 0.0;
        for (auto i : sample) pos += labels[i];
        const double count = static_cast<double>(sample.size());
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({-1, 0.0, -1, -1, pos, count});

        const auto min_leaf = static_cast<std::size_t>(config.min_leaf);
        if (depth >= config.max_depth || pos == 0.0 || pos == count || sample.size() < 2 * min_leaf)
            return id;

        const std::size_t d = rows.cols();
        const std::size_t mtry =
            config.sqrt_features ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d)))) : d;
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), 0);
        for (std::size_t i = 0; i < mtry; ++i) std::swap(features[i], features[i + draw(d - i)]);

        const double parent = gini(pos, count);
        double best_score = parent;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> order = sample;
        for (std::size_t fi = 0; fi < mtry; ++fi) {
            const std::size_t f = features[fi];
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return rows(a, f) < rows(b, f); });
            double left_pos = 0.0;
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                left_pos += labels[order[k]];
                const std::size_t n_left = k + 1;
                const std::size_t n_right = order.size() - n_left;
                const double lo = rows(order[k], f);
                const double hi = rows(order[k + 1], f);
                if (lo == hi || n_left < min_leaf || n_right < min_leaf) continue;
                const double nl = static_cast<double>(n_left);
                const double nr = static_cast<double>(n_right);
                const double score =
                    (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / count;
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = lo + (hi - lo) / 2.0;
                    if (!(best_threshold > lo && best_threshold <= hi)) best_threshold = hi;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto i : sample)
            (rows(i, static_cast<std::size_t>(best_feature)) < best_threshold ? left : right).push_back(i);
        sample.clear();
        sample.shrink_to_fit();
        tree.nodes[static_cast<std::size_t>(id)].feature = best_feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

}  // namespace

void ForestConfig::validate() const {
    if (n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
    if (max_depth < 0) throw ConfigError("forest: max_depth must be >= 0");
    if (min_leaf < 1) throw ConfigError("forest: min_leaf must be >= 1");
}

double gini(double positives, double count) {
    if (count <= 0.0) return 0.0;
    const double p = positives / count;
    return 2.0 * p * (1.0 - p);
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0)
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold
                                         ? nodes[i].left
                                         : nodes[i].right);
    return nodes[i];
}

double DecisionTree::predict(std::span<const double> row) const {
    const TreeNode& leaf = leaf_for(row);
    return leaf.count > 0.0 ? leaf.positives / leaf.count : 0.5;
}

Forest forest_train(const Matrix& rows, const std::vector<int>& labels, const ForestConfig& config,
                    std::vector<std::string>* warnings) {
    config.validate();
    if (rows.rows() != labels.size()) throw ContractError("forest_train: label count mismatch");
    if (rows.rows() < 2) throw ContractError("forest_train: need at least 2 rows");
    for (int y : labels)
        if (y != 0 && y != 1) throw ContractError("forest_train: labels must be 0 or 1");

    Forest forest;
    forest.config = config;
    forest.n_features = rows.cols();
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    if (positives == 0 || static_cast<std::size_t>(positives) == labels.size()) {
        forest.constant = true;
        forest.constant_probability = positives == 0 ? 0.0 : 1.0;
        if (warnings) warnings->push_back("forest: single-class training data; constant predictor");
        return forest;
    }

    forest.trees.resize(static_cast<std::size_t>(config.n_trees));
    const std::ptrdiff_t n_trees = config.n_trees;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                          static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        Builder b{rows, labels, config, rng, {}};
        std::vector<std::size_t> sample(rows.rows());
        for (auto& s : sample) s = b.draw(rows.rows());
        b.grow(sample, 0);
        forest.trees[static_cast<std::size_t>(t)] = std::move(b.tree);
    }
    return forest;
}

double forest_predict(const Forest& forest, std::span<const double> row) {
    if (row.size() != forest.n_features) throw ContractError("forest_predict: feature count mismatch");
    if (forest.constant) return forest.constant_probability;
    double sum = 0.0;
    for (const auto& t : forest.trees) {
        const double p = t.predict(row);
        sum += forest.config.soft_voting ? p : (p > 0.5 ? 1.0 : 0.0);
    }
    return sum / static_cast<double>(forest.trees.size());
}

double forest_accuracy(const Forest& forest, const Matrix& rows, const std::vector<int>& labels) {
    if (rows.rows() == 0) throw ContractError("forest_accuracy: no rows");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.rows(); ++i)
        if ((forest_predict(forest, rows.row(i)) > 0.5 ? 1 : 0) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(rows.rows());
}

LookbackData lookback_dataset(const std::vector<TeamGameRecord>& records, const FeatureSpec& spec,
                              int lookback) {
    if (lookback < 1) throw ContractError("lookback_dataset: lookback must be >= 1");
    const FeatureMatrix fm = build_feature_matrix(records, spec);

    std::map<std::pair<std::string, std::string>, bool> outcome;
    for (const auto& r : records) outcome[{r.team, r.game_id}] = r.won;

    // Rows of the feature matrix are chronological, so per-team row lists are too.
    std::map<std::string, std::vector<std::size_t>> by_team;
    for (std::size_t i = 0; i < fm.row_keys.size(); ++i) by_team[fm.row_keys[i].team].push_back(i);

    const auto n = static_cast<std::size_t>(lookback);
    const std::size_t d = fm.values.cols();
    std::vector<std::size_t> targets;
    std::map<std::size_t, std::vector<std::size_t>> history;
    for (const auto& [team, idx] : by_team)
        for (std::size_t j = n; j < idx.size(); ++j) {
            targets.push_back(idx[j]);
            history[idx[j]].assign(idx.begin() + static_cast<std::ptrdiff_t>(j - n),
                                   idx.begin() + static_cast<std::ptrdiff_t>(j));
        }
    std::sort(targets.begin(), targets.end());

    LookbackData out;
    out.rows = Matrix(targets.size(), d);
    for (std::size_t r = 0; r < targets.size(); ++r) {
        for (std::size_t h : history[targets[r]])
            for (std::size_t f = 0; f < d; ++f) out.rows(r, f) += fm.values(h, f);
        for (std::size_t f = 0; f < d; ++f) out.rows(r, f) /= static_cast<double>(n);
        const auto& key = fm.row_keys[targets[r]];
        out.keys.push_back(key);
        out.labels.push_back(outcome.at({key.team, key.game_id}) ? 1 : 0);
    }
    return out;
}

}  // namespace gcnwp
