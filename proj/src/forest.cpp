#include "cada/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cada/errors.hpp"
#include "cada/rng.hpp"

namespace cada {

void TrainingSet::add(std::vector<double> x, int label, std::size_t iter)
{
    features.push_back(std::move(x));
    labels.push_back(label);
    iteration.push_back(iter);
}

void TrainingSet::append(const TrainingSet& other)
{
    features.insert(features.end(), other.features.begin(), other.features.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    iteration.insert(iteration.end(), other.iteration.begin(), other.iteration.end());
}

double DecisionTree::predict(std::span<const double> x) const
{
    std::size_t at = 0;
    while (nodes_[at].feature >= 0) {
        const TreeNode& n = nodes_[at];
        at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[at].value;
}

std::size_t DecisionTree::depth() const
{
    if (nodes_.empty()) {
        return 0;
    }
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [at, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const TreeNode& n = nodes_[at];
        if (n.feature >= 0) {
            stack.emplace_back(static_cast<std::size_t>(n.left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(n.right), d + 1);
        }
    }
    return deepest;
}

double Forest::predict(std::span<const double> x) const
{
    if (x.size() != n_features_) {
        throw DataError("feature vector has length " + std::to_string(x.size()) + ", forest expects " +
                        std::to_string(n_features_));
    }
    if (trees_.empty()) {
        throw DataError("forest has no trees");
    }
    double total = 0.0;
    for (const DecisionTree& t : trees_) {
        total += t.predict(x);
    }
    return total / static_cast<double>(trees_.size());
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const TrainingSet& data, std::size_t max_depth, std::size_t mtry, SeededRng& rng)
        : data_(data), max_depth_(max_depth), mtry_(mtry), rng_(rng)
    {
        features_.resize(data.width());
        std::iota(features_.begin(), features_.end(), 0u);
    }

    std::vector<TreeNode> build(std::vector<std::uint32_t> rows)
    {
        nodes_.clear();
        grow(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    struct Split {
        std::int32_t feature = -1;
        double threshold = 0.0;
        double impurity = 0.0;
    };

    static double weighted_gini(double n, double ones)
    {
        return n > 0 ? 2.0 * ones * (n - ones) / n : 0.0;
    }

    std::int32_t grow(std::vector<std::uint32_t> rows, std::size_t depth)
    {
        const auto at = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        std::size_t ones = 0;
        for (std::uint32_t r : rows) {
            ones += static_cast<std::size_t>(data_.labels[r]);
        }
        const double n = static_cast<double>(rows.size());
        nodes_[at].value = static_cast<double>(ones) / n;
        if (depth >= max_depth_ || rows.size() < 2 || ones == 0 || ones == rows.size()) {
            return at;
        }

        const Split best = find_split(rows, weighted_gini(n, static_cast<double>(ones)));
        if (best.feature < 0) {
            return at;
        }

        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        for (std::uint32_t r : rows) {
            (data_.features[r][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        nodes_[at].feature = best.feature;
        nodes_[at].threshold = best.threshold;
        const std::int32_t l = grow(std::move(left), depth + 1);
        nodes_[at].left = l;
        const std::int32_t r = grow(std::move(right), depth + 1);
        nodes_[at].right = r;
        return at;
    }

    Split find_split(const std::vector<std::uint32_t>& rows, double parent_impurity)
    {
        // Partial Fisher-Yates: the first mtry_ entries become the candidates.
        const std::size_t d = features_.size();
        for (std::size_t i = 0; i < mtry_; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng_.below(d - i));
            std::swap(features_[i], features_[j]);
        }

        Split best;
        best.impurity = parent_impurity;
        std::vector<std::pair<double, int>> column(rows.size());
        const double n = static_cast<double>(rows.size());
        double total_ones = 0;
        for (std::uint32_t r : rows) {
            total_ones += data_.labels[r];
        }
        for (std::size_t k = 0; k < mtry_; ++k) {
            const std::uint32_t f = features_[k];
            for (std::size_t i = 0; i < rows.size(); ++i) {
                column[i] = {data_.features[rows[i]][f], data_.labels[rows[i]]};
            }
            std::sort(column.begin(), column.end());
            double left_n = 0;
            double left_ones = 0;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                left_n += 1;
                left_ones += column[i].second;
                if (column[i].first == column[i + 1].first) {
                    continue;
                }
                const double imp =
                    weighted_gini(left_n, left_ones) + weighted_gini(n - left_n, total_ones - left_ones);
                if (imp < best.impurity) {
                    best.impurity = imp;
                    best.feature = static_cast<std::int32_t>(f);
                    double mid = 0.5 * (column[i].first + column[i + 1].first);
                    if (!(mid < column[i + 1].first)) {
                        mid = column[i].first;
                    }
                    best.threshold = mid;
                }
            }
        }
        return best;
    }

    const TrainingSet& data_;
    std::size_t max_depth_;
    std::size_t mtry_;
    SeededRng& rng_;
    std::vector<std::uint32_t> features_;
    std::vector<TreeNode> nodes_;
};

} // namespace

Forest train_forest(const TrainingSet& data, const ForestParams& params)
{
    if (data.empty()) {
        throw DataError("training set is empty");
    }
    if (params.n_trees == 0) {
        throw ValueError("forest needs at least one tree");
    }
    const std::size_t d = data.width();
    if (d == 0) {
        throw DataError("training rows have no features");
    }
    std::size_t ones = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.features[i].size() != d) {
            throw DataError("training row " + std::to_string(i) + " has length " +
                            std::to_string(data.features[i].size()) + ", expected " + std::to_string(d));
        }
        if (data.labels[i] != 0 && data.labels[i] != 1) {
            throw DataError("training labels must be 0 or 1");
        }
        ones += static_cast<std::size_t>(data.labels[i]);
    }
    if ((ones == 0 || ones == data.size()) && !params.allow_single_class) {
        throw DataError("training data contains a single class (" + std::to_string(ones) + " of " +
                        std::to_string(data.size()) + " rows are true boundaries)");
    }

    const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    std::vector<DecisionTree> trees;
    trees.reserve(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        SeededRng rng(mix64(params.seed ^ mix64(t)));
        std::vector<std::uint32_t> rows(data.size());
        if (params.bootstrap) {
            for (auto& r : rows) {
                r = static_cast<std::uint32_t>(rng.below(data.size()));
            }
        } else {
            std::iota(rows.begin(), rows.end(), 0u);
        }
        TreeBuilder builder(data, params.max_depth, mtry, rng);
        trees.emplace_back(builder.build(std::move(rows)));
    }
    return Forest(std::move(trees), d, params.max_depth, params.seed);
}

nlohmann::json Forest::to_json() const
{
    nlohmann::json doc;
    doc["format"] = "cada-forest";
    doc["version"] = 1;
    doc["n_features"] = n_features_;
    doc["max_depth"] = max_depth_;
    doc["seed"] = seed_;
    nlohmann::json trees = nlohmann::json::array();
    for (const DecisionTree& t : trees_) {
        nlohmann::json feature = nlohmann::json::array();
        nlohmann::json threshold = nlohmann::json::array();
        nlohmann::json left = nlohmann::json::array();
        nlohmann::json right = nlohmann::json::array();
        nlohmann::json value = nlohmann::json::array();
        for (const TreeNode& n : t.nodes()) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            value.push_back(n.value);
        }
        trees.push_back({{"feature", feature},
                         {"threshold", threshold},
                         {"left", left},
                         {"right", right},
                         {"value", value}});
    }
    doc["trees"] = std::move(trees);
    return doc;
}

Forest Forest::from_json(const nlohmann::json& doc)
{
    try {
        if (doc.at("format").get<std::string>() != "cada-forest") {
            throw FormatError("not a forest document");
        }
        if (doc.at("version").get<int>() != 1) {
            throw FormatError("unsupported forest version " + doc.at("version").dump());
        }
        const auto n_features = doc.at("n_features").get<std::size_t>();
        std::vector<DecisionTree> trees;
        for (const auto& t : doc.at("trees")) {
            const auto feature = t.at("feature").get<std::vector<std::int32_t>>();
            const auto threshold = t.at("threshold").get<std::vector<double>>();
            const auto left = t.at("left").get<std::vector<std::int32_t>>();
            const auto right = t.at("right").get<std::vector<std::int32_t>>();
            const auto value = t.at("value").get<std::vector<double>>();
            const std::size_t n = feature.size();
            if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
                throw FormatError("tree arrays have inconsistent lengths");
            }
            std::vector<TreeNode> nodes(n);
            for (std::size_t i = 0; i < n; ++i) {
                nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
                if (feature[i] >= 0) {
                    const auto in_range = [n](std::int32_t c) { return c > 0 && static_cast<std::size_t>(c) < n; };
                    if (static_cast<std::size_t>(feature[i]) >= n_features || !in_range(left[i]) ||
                        !in_range(right[i])) {
                        throw FormatError("tree node " + std::to_string(i) + " is malformed");
                    }
                }
            }
            trees.emplace_back(std::move(nodes));
        }
        return Forest(std::move(trees), n_features, doc.at("max_depth").get<std::size_t>(),
                      doc.at("seed").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed forest document: ") + e.what());
    }
}

void Forest::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << to_json().dump() << '\n';
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

Forest Forest::load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(doc);
}

} // namespace cada
