#pragma once

#include "favmap/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace favmap {

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_features = 0; // 0 selects ceil(sqrt(d))
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> max_depth; // unlimited when empty
    std::uint64_t seed = 0;
    // Test hook: false trains every tree on the full sample, in order.
    bool bootstrap = true;
};

/// Candidate features per split for dimension d.
std::size_t effective_max_features(const ForestConfig& cfg, std::size_t d);

/// Throws InvalidArgument unless n_trees >= 1, 1 <= max_features <= d and
/// min_samples_leaf >= 1.
void validate(const ForestConfig& cfg, std::size_t d);

/// 1 - p0^2 - p1^2. Throws InvalidArgument for an empty node.
double gini(std::size_t n_neg, std::size_t n_pos);

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0; // samples with x[feature] <= threshold go left
    double gain = 0.0;      // parent impurity minus weighted child impurity
};

/// Best Gini split of `samples` (row indices into x; repeats allowed) over
/// the listed features. Candidate thresholds are midpoints between
/// consecutive distinct values; splits leaving a child smaller than
/// min_samples_leaf are skipped. Gains within 1e-12 count as ties, broken
/// by lower feature index, then lower threshold. Returns nullopt when no
/// candidate has positive gain.
std::optional<Split> best_split(const Matrix& x, std::span<const int> y,
                                std::span<const std::size_t> samples,
                                std::span<const std::size_t> features,
                                std::size_t min_samples_leaf = 1);

struct TreeNode {
    static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

    std::size_t feature = 0;
    double threshold = 0.0;
    std::uint32_t left = kNone;
    std::uint32_t right = kNone;
    std::size_t n_neg = 0;
    std::size_t n_pos = 0;

    bool is_leaf() const noexcept { return left == kNone; }
    /// Leaf vote; a tie goes to the positive class.
    int majority() const noexcept { return n_pos >= n_neg ? 1 : 0; }
};

/// Binary CART tree stored as a flat node array; node 0 is the root.
class DecisionTree {
public:
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    int predict(std::span<const double> x) const noexcept;
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::size_t depth() const noexcept;

private:
    std::vector<TreeNode> nodes_;
};

class Forest {
public:
    Forest(ForestConfig config, std::size_t dimension, std::vector<DecisionTree> trees);

    const ForestConfig& config() const noexcept { return config_; }
    std::size_t dimension() const noexcept { return dimension_; }
    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

    /// Number of trees voting favela. Throws InvalidArgument on a dimension mismatch.
    std::size_t positive_votes(std::span<const double> x) const;
    /// positive_votes / n_trees.
    double predict_proba(std::span<const double> x) const;
    /// Majority vote; an even split goes to the negative class.
    int predict(std::span<const double> x) const;

    /// Tree dump for inspection (feature index, threshold, class counts).
    std::string to_json() const;

private:
    ForestConfig config_;
    std::size_t dimension_;
    std::vector<DecisionTree> trees_;
};

/// Grows one tree from `samples` with a generator seeded by `seed`.
DecisionTree grow_tree(const Matrix& x, std::span<const int> y,
                       std::vector<std::size_t> samples, const ForestConfig& cfg,
                       std::uint64_t seed);

/// Trains cfg.n_trees trees; tree i draws its bootstrap sample and feature
/// subsets from derive_seed(cfg.seed, i), so the result is identical for
/// any thread count (0 = all cores). Labels are 0/1; both must be present.
Forest fit(const Matrix& x, std::span<const int> y, const ForestConfig& cfg,
           unsigned threads = 1);

} // namespace favmap
