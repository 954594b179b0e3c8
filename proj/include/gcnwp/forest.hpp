#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcnwp/ingest.hpp"
#include "gcnwp/matrix.hpp"

namespace gcnwp {

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 10;
    int min_leaf = 5;
    /// Candidate features per split: floor(sqrt(d)) when true, all otherwise.
    bool sqrt_features = true;
    /// Soft voting averages leaf positive fractions; hard voting counts trees.
    bool soft_voting = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double positives = 0.0;
    double count = 0.0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    const TreeNode& leaf_for(std::span<const double> row) const;
    /// Positive-class fraction of the leaf the row falls into.
    double predict(std::span<const double> row) const;
};

struct Forest {
    ForestConfig config;
    std::size_t n_features = 0;
    std::vector<DecisionTree> trees;
    /// Set when training data held a single class.
    bool constant = false;
    double constant_probability = 0.0;
};

/// Bootstrap-sampled CART trees with Gini splits. Tree t draws from its own
/// generator seeded from (seed, t), so the forest is deterministic and trees
/// train independently.
Forest forest_train(const Matrix& rows, const std::vector<int>& labels, const ForestConfig& config,
                    std::vector<std::string>* warnings = nullptr);

double forest_predict(const Forest& forest, std::span<const double> row);

double forest_accuracy(const Forest& forest, const Matrix& rows, const std::vector<int>& labels);

/// Gini impurity of a node with `positives` out of `count` rows.
double gini(double positives, double count);

struct LookbackData {
    Matrix rows;
    std::vector<int> labels;
    std::vector<RowKey> keys;  // the game each row predicts
};

/// For every game with at least n earlier games for the same team: the mean
/// of those n games' feature vectors (raw or delta per spec.mode) labeled
/// with the game's result.
LookbackData lookback_dataset(const std::vector<TeamGameRecord>& records, const FeatureSpec& spec,
                              int lookback);

}  // namespace gcnwp
