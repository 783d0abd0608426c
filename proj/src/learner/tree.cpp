/*
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */
#include "qtune/learner/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace qtune {

Label TreeModel::predict(const Features& features) const
{
    if (nodes.empty()) {
        throw std::logic_error("tree model is not trained");
    }
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
        const double v = features[static_cast<std::size_t>(node->feature)];
        node = &nodes[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
    }
    return node->label;
}

int TreeModel::leaf_count() const
{
    return static_cast<int>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int TreeModel::depth() const
{
    if (nodes.empty()) {
        return 0;
    }
    int deepest = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [id, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (!n.is_leaf()) {
            stack.emplace_back(n.left, d + 1);
            stack.emplace_back(n.right, d + 1);
        }
    }
    return deepest;
}

double entropy(const ClassCounts& counts, int total)
{
    if (total <= 0) {
        return 0.0;
    }
    double h = 0.0;
    for (const int c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

double pessimistic_extra_errors(double n, double errors, double confidence)
{
    if (confidence > 0.5) {
        return 0.0;
    }
    if (errors < 1.0) {
        const double base = n * (1.0 - std::pow(confidence, 1.0 / n));
        if (errors == 0.0) {
            return base;
        }
        return base + errors * (pessimistic_extra_errors(n, 1.0, confidence) - base);
    }
    if (errors + 0.5 >= n) {
        return std::max(n - errors, 0.0);
    }
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - confidence);
    const double f = (errors + 0.5) / n;
    const double r =
        (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) /
        (1 + z * z / n);
    return r * n - errors;
}

namespace {

Label majority(const ClassCounts& counts)
{
    // max_element keeps the first maximum, so ties go to the weaker label.
    const auto it = std::max_element(counts.begin(), counts.end());
    return Label::from_index(static_cast<int>(it - counts.begin()));
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class Builder {
public:
    Builder(std::span<const LabelledRow> rows, const TreeParams& params, std::mt19937_64* rng)
        : rows_(rows), params_(params), rng_(rng)
    {
    }

    TreeModel build()
    {
        std::vector<int> all(rows_.size());
        std::iota(all.begin(), all.end(), 0);
        grow(all, 0);
        return TreeModel{std::move(nodes_)};
    }

private:
    ClassCounts count(const std::vector<int>& idx) const
    {
        ClassCounts c{};
        for (const int i : idx) {
            ++c[static_cast<std::size_t>(rows_[static_cast<std::size_t>(i)].label.index())];
        }
        return c;
    }

    std::vector<int> candidate_features()
    {
        std::vector<int> features(kFeatureCount);
        std::iota(features.begin(), features.end(), 0);
        const int k = params_.features_per_split;
        if (k > 0 && k < kFeatureCount) {
            if (rng_ == nullptr) {
                throw std::invalid_argument("feature subsampling needs an RNG");
            }
            std::shuffle(features.begin(), features.end(), *rng_);
            features.resize(static_cast<std::size_t>(k));
            std::sort(features.begin(), features.end());
        }
        return features;
    }

    Split best_split(std::vector<int>& idx, const ClassCounts& parent)
    {
        const int n = static_cast<int>(idx.size());
        const double parent_h = entropy(parent, n);
        Split best;
        for (const int f : candidate_features()) {
            auto value = [&](int i) {
                return rows_[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(f)];
            };
            std::sort(idx.begin(), idx.end(), [&](int a, int b) { return value(a) < value(b); });
            ClassCounts left{};
            ClassCounts right = parent;
            for (int pos = 0; pos + 1 < n; ++pos) {
                const auto label =
                    static_cast<std::size_t>(rows_[static_cast<std::size_t>(idx[pos])].label.index());
                ++left[label];
                --right[label];
                const double lo = value(idx[pos]);
                const double hi = value(idx[pos + 1]);
                const int nl = pos + 1;
                const int nr = n - nl;
                if (!(lo < hi) || nl < params_.min_leaf || nr < params_.min_leaf) {
                    continue;
                }
                const double gain = parent_h - (static_cast<double>(nl) / n) * entropy(left, nl) -
                                    (static_cast<double>(nr) / n) * entropy(right, nr);
                if (gain > best.gain + 1e-12) {
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) {
                        mid = lo;
                    }
                    best = Split{f, mid, gain};
                }
            }
        }
        return best;
    }

    int grow(std::vector<int>& idx, int depth)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const auto counts = count(idx);
        nodes_[static_cast<std::size_t>(id)].counts = counts;
        nodes_[static_cast<std::size_t>(id)].label = majority(counts);

        const int n = static_cast<int>(idx.size());
        const bool pure = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) <= 1;
        if (pure || depth >= params_.max_depth || n < 2 * params_.min_leaf) {
            return id;
        }
        const auto split = best_split(idx, counts);
        if (split.feature < 0) {
            return id;
        }
        std::vector<int> left;
        std::vector<int> right;
        for (const int i : idx) {
            const double v =
                rows_[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(split.feature)];
            (v <= split.threshold ? left : right).push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    std::span<const LabelledRow> rows_;
    const TreeParams& params_;
    std::mt19937_64* rng_;
    std::vector<TreeNode> nodes_;
};

// Returns the pessimistic error estimate of the (possibly pruned) subtree.
double prune_node(std::vector<TreeNode>& nodes, int id, double confidence)
{
    auto& node = nodes[static_cast<std::size_t>(id)];
    const int n = std::accumulate(node.counts.begin(), node.counts.end(), 0);
    const int errors = n - node.counts[static_cast<std::size_t>(node.label.index())];
    const double as_leaf =
        errors + pessimistic_extra_errors(n, static_cast<double>(errors), confidence);
    if (node.is_leaf()) {
        return as_leaf;
    }
    const double subtree = prune_node(nodes, node.left, confidence) +
                           prune_node(nodes, node.right, confidence);
    auto& again = nodes[static_cast<std::size_t>(id)];
    if (as_leaf <= subtree + 0.1) {
        again.feature = -1;
        again.left = again.right = -1;
        return as_leaf;
    }
    return subtree;
}

// Drops nodes orphaned by pruning and renumbers in preorder.
std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes)
{
    std::vector<TreeNode> out;
    auto copy = [&](auto&& self, int id) -> int {
        const int at = static_cast<int>(out.size());
        out.push_back(nodes[static_cast<std::size_t>(id)]);
        if (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
            const int l = self(self, nodes[static_cast<std::size_t>(id)].left);
            const int r = self(self, nodes[static_cast<std::size_t>(id)].right);
            out[static_cast<std::size_t>(at)].left = l;
            out[static_cast<std::size_t>(at)].right = r;
        }
        return at;
    };
    copy(copy, 0);
    return out;
}

} // namespace

TreeModel train_tree(std::span<const LabelledRow> rows, const TreeParams& params,
                     std::mt19937_64* rng)
{
    if (rows.empty()) {
        throw std::invalid_argument("cannot train a tree on an empty set");
    }
    if (params.min_leaf < 1 || params.max_depth < 0) {
        throw std::invalid_argument("invalid tree parameters");
    }
    auto model = Builder(rows, params, rng).build();
    if (params.prune) {
        prune_node(model.nodes, 0, params.confidence);
        model.nodes = compact(model.nodes);
    }
    return model;
}

} // namespace qtune
