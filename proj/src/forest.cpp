#include "favmap/forest.hpp"

#include "favmap/error.hpp"
#include "favmap/rng.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace favmap {

namespace {

constexpr double kGainEps = 1e-12;

} // namespace

std::size_t effective_max_features(const ForestConfig& cfg, std::size_t d)
{
    if (cfg.max_features != 0)
        return cfg.max_features;
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));
}

void validate(const ForestConfig& cfg, std::size_t d)
{
    if (cfg.n_trees < 1)
        throw InvalidArgument("n_trees must be at least 1");
    if (d < 1)
        throw InvalidArgument("feature dimension must be at least 1");
    const std::size_t m = effective_max_features(cfg, d);
    if (m < 1 || m > d)
        throw InvalidArgument("max_features must lie in [1, " + std::to_string(d) + "], got " +
                              std::to_string(m));
    if (cfg.min_samples_leaf < 1)
        throw InvalidArgument("min_samples_leaf must be at least 1");
}

double gini(std::size_t n_neg, std::size_t n_pos)
{
    const std::size_t n = n_neg + n_pos;
    if (n == 0)
        throw InvalidArgument("gini of an empty node");
    const double p0 = static_cast<double>(n_neg) / static_cast<double>(n);
    const double p1 = static_cast<double>(n_pos) / static_cast<double>(n);
    return 1.0 - p0 * p0 - p1 * p1;
}

std::optional<Split> best_split(const Matrix& x, std::span<const int> y,
                                std::span<const std::size_t> samples,
                                std::span<const std::size_t> features,
                                std::size_t min_samples_leaf)
{
    const std::size_t n = samples.size();
    if (n < 2)
        return std::nullopt;
    min_samples_leaf = std::max<std::size_t>(min_samples_leaf, 1);

    std::size_t total_pos = 0;
    for (std::size_t s : samples)
        total_pos += y[s] ? 1 : 0;
    const std::size_t total_neg = n - total_pos;
    const double parent = gini(total_neg, total_pos);
    if (parent == 0.0)
        return std::nullopt;

    std::optional<Split> best;
    std::vector<std::pair<double, int>> column(n);
    const double dn = static_cast<double>(n);

    for (std::size_t f : features) {
        for (std::size_t i = 0; i < n; ++i)
            column[i] = {x(samples[i], f), y[samples[i]]};
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::size_t left_pos = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_pos += column[i].second ? 1 : 0;
            const double lo = column[i].first, hi = column[i + 1].first;
            if (!(lo < hi))
                continue;
            const std::size_t n_left = i + 1, n_right = n - n_left;
            if (n_left < min_samples_leaf || n_right < min_samples_leaf)
                continue;

            const std::size_t left_neg = n_left - left_pos;
            const std::size_t right_pos = total_pos - left_pos;
            const std::size_t right_neg = total_neg - left_neg;
            const double gain = parent -
                                static_cast<double>(n_left) / dn * gini(left_neg, left_pos) -
                                static_cast<double>(n_right) / dn * gini(right_neg, right_pos);

            double t = 0.5 * lo + 0.5 * hi;
            if (!(t < hi))
                t = lo;

            if (!best || gain > best->gain + kGainEps ||
                (std::abs(gain - best->gain) <= kGainEps &&
                 (f < best->feature || (f == best->feature && t < best->threshold))))
                best = Split{f, t, gain};
        }
    }
    if (!best || !(best->gain > kGainEps))
        return std::nullopt;
    return best;
}

int DecisionTree::predict(std::span<const double> x) const noexcept
{
    std::uint32_t i = 0;
    while (!nodes_[i].is_leaf())
        i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].majority();
}

std::size_t DecisionTree::depth() const noexcept
{
    std::size_t deepest = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes_[i].is_leaf()) {
            stack.emplace_back(nodes_[i].left, d + 1);
            stack.emplace_back(nodes_[i].right, d + 1);
        }
    }
    return deepest;
}

DecisionTree grow_tree(const Matrix& x, std::span<const int> y, std::vector<std::size_t> samples,
                       const ForestConfig& cfg, std::uint64_t seed)
{
    const std::size_t d = x.cols();
    const std::size_t m = effective_max_features(cfg, d);
    Rng rng(seed);

    std::vector<TreeNode> nodes;
    std::vector<std::size_t> feature_pool(d);

    struct Pending {
        std::uint32_t node;
        std::size_t begin, end, depth;
    };
    std::vector<Pending> stack;

    auto make_node = [&](std::size_t begin, std::size_t end) {
        TreeNode node;
        for (std::size_t i = begin; i < end; ++i)
            (y[samples[i]] ? node.n_pos : node.n_neg) += 1;
        nodes.push_back(node);
        return static_cast<std::uint32_t>(nodes.size() - 1);
    };

    stack.push_back({make_node(0, samples.size()), 0, samples.size(), 0});
    while (!stack.empty()) {
        const Pending p = stack.back();
        stack.pop_back();
        const std::size_t count = p.end - p.begin;
        const TreeNode& node = nodes[p.node];
        if (node.n_neg == 0 || node.n_pos == 0 || count < 2 * cfg.min_samples_leaf ||
            (cfg.max_depth && p.depth >= *cfg.max_depth))
            continue;

        // Partial Fisher-Yates: the first m entries are a uniform draw
        // without replacement.
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < m; ++i)
            std::swap(feature_pool[i], feature_pool[i + uniform_index(rng, d - i)]);

        const std::span<const std::size_t> subset(feature_pool.data(), m);
        const std::span<const std::size_t> node_samples(samples.data() + p.begin, count);
        const auto split = best_split(x, y, node_samples, subset, cfg.min_samples_leaf);
        if (!split)
            continue;

        const auto mid = std::stable_partition(
            samples.begin() + static_cast<std::ptrdiff_t>(p.begin),
            samples.begin() + static_cast<std::ptrdiff_t>(p.end),
            [&](std::size_t s) { return x(s, split->feature) <= split->threshold; });
        const std::size_t cut = static_cast<std::size_t>(mid - samples.begin());

        const std::uint32_t left = make_node(p.begin, cut);
        const std::uint32_t right = make_node(cut, p.end);
        nodes[p.node].feature = split->feature;
        nodes[p.node].threshold = split->threshold;
        nodes[p.node].left = left;
        nodes[p.node].right = right;
        // Right pushed first so the left subtree is expanded first.
        stack.push_back({right, cut, p.end, p.depth + 1});
        stack.push_back({left, p.begin, cut, p.depth + 1});
    }
    return DecisionTree(std::move(nodes));
}

Forest::Forest(ForestConfig config, std::size_t dimension, std::vector<DecisionTree> trees)
    : config_(std::move(config)), dimension_(dimension), trees_(std::move(trees))
{
}

std::size_t Forest::positive_votes(std::span<const double> x) const
{
    if (x.size() != dimension_)
        throw InvalidArgument("predict: input has dimension " + std::to_string(x.size()) +
                              ", forest expects " + std::to_string(dimension_));
    std::size_t votes = 0;
    for (const DecisionTree& t : trees_)
        votes += static_cast<std::size_t>(t.predict(x));
    return votes;
}

double Forest::predict_proba(std::span<const double> x) const
{
    return static_cast<double>(positive_votes(x)) / static_cast<double>(trees_.size());
}

int Forest::predict(std::span<const double> x) const
{
    return 2 * positive_votes(x) > trees_.size() ? 1 : 0;
}

std::string Forest::to_json() const
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["dimension"] = dimension_;
    j["config"] = {{"n_trees", config_.n_trees},
                   {"max_features", effective_max_features(config_, dimension_)},
                   {"min_samples_leaf", config_.min_samples_leaf},
                   {"max_depth", config_.max_depth ? ordered_json(*config_.max_depth)
                                                   : ordered_json()},
                   {"seed", config_.seed},
                   {"bootstrap", config_.bootstrap}};
    j["trees"] = ordered_json::array();
    for (const DecisionTree& t : trees_) {
        ordered_json nodes = ordered_json::array();
        for (const TreeNode& n : t.nodes()) {
            if (n.is_leaf())
                nodes.push_back({{"n_neg", n.n_neg}, {"n_pos", n.n_pos}});
            else
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"n_neg", n.n_neg},
                                 {"n_pos", n.n_pos}});
        }
        j["trees"].push_back({{"nodes", std::move(nodes)}});
    }
    return j.dump(1) + "\n";
}

Forest fit(const Matrix& x, std::span<const int> y, const ForestConfig& cfg, unsigned threads)
{
    const std::size_t n = x.rows(), d = x.cols();
    validate(cfg, d);
    if (y.size() != n)
        throw InvalidArgument("fit: " + std::to_string(y.size()) + " labels for " +
                              std::to_string(n) + " rows");
    if (n < 2)
        throw DataError("fit: need at least 2 samples");
    std::size_t pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1)
            throw InvalidArgument("fit: labels must be 0 or 1");
        pos += static_cast<std::size_t>(v);
    }
    if (pos == 0 || pos == n)
        throw DataError("fit: degenerate training set, only one class present");

    std::vector<std::optional<DecisionTree>> grown(cfg.n_trees);
    detail::parallel_for(cfg.n_trees, threads, [&](std::size_t t) {
        const std::uint64_t seed = derive_seed(cfg.seed, t);
        std::vector<std::size_t> samples(n);
        if (cfg.bootstrap) {
            Rng rng(derive_seed(seed, 0));
            for (std::size_t& s : samples)
                s = uniform_index(rng, n);
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t{0});
        }
        grown[t] = grow_tree(x, y, std::move(samples), cfg, derive_seed(seed, 1));
    });

    std::vector<DecisionTree> trees;
    trees.reserve(cfg.n_trees);
    for (auto& t : grown)
        trees.push_back(std::move(*t));
    return Forest(cfg, d, std::move(trees));
}

} // namespace favmap
