#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cada {

// Rows of (feature vector, 0/1 label). Label 1 marks a true boundary that
// should persist; label 0 a false boundary left by over-segmentation.
struct TrainingSet {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    // Iteration that produced each row (1-based).
    std::vector<std::size_t> iteration;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::size_t width() const { return features.empty() ? 0 : features.front().size(); }

    void add(std::vector<double> x, int label, std::size_t iter);
    void append(const TrainingSet& other);
};

struct ForestParams {
    std::size_t n_trees = 50;
    std::size_t max_depth = 20;
    std::uint64_t seed = 0;
    bool bootstrap = true;
    // Accept training data with a single class; every leaf then predicts it.
    bool allow_single_class = false;
};

struct TreeNode {
    std::int32_t feature = -1; // -1 marks a leaf
    double threshold = 0.0;    // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;        // class-1 fraction of the training rows reaching this node
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    double predict(std::span<const double> x) const;
    // Longest root-to-leaf path, in edges.
    std::size_t depth() const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    std::vector<TreeNode> nodes_;
};

class Forest {
public:
    Forest() = default;
    Forest(std::vector<DecisionTree> trees, std::size_t n_features, std::size_t max_depth, std::uint64_t seed)
        : trees_(std::move(trees)), n_features_(n_features), max_depth_(max_depth), seed_(seed)
    {
    }

    // Mean of the per-tree leaf values. Throws DataError on a length mismatch.
    double predict(std::span<const double> x) const;

    const std::vector<DecisionTree>& trees() const { return trees_; }
    std::size_t n_features() const { return n_features_; }
    std::size_t max_depth() const { return max_depth_; }
    std::uint64_t seed() const { return seed_; }

    nlohmann::json to_json() const;
    static Forest from_json(const nlohmann::json& doc);

    void save(const std::string& path) const;
    static Forest load(const std::string& path);

private:
    std::vector<DecisionTree> trees_;
    std::size_t n_features_ = 0;
    std::size_t max_depth_ = 0;
    std::uint64_t seed_ = 0;
};

// Bootstrap-resampled CART trees with floor(sqrt(d)) candidate features per
// split and Gini impurity. Deterministic given params.seed.
// Throws DataError on empty or ragged data, and on single-class data unless
// params.allow_single_class is set.
Forest train_forest(const TrainingSet& data, const ForestParams& params);

} // namespace cada
