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
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qtune/learner/labelling.hpp"

namespace qtune {

struct TreeParams {
    bool prune = true;
    /// Confidence factor for the pessimistic (upper-bound) error estimate.
    double confidence = 0.25;
    int min_leaf = 1;
    int max_depth = 64;
    /// Seed for the row shuffle used by cross validation.
    std::uint64_t shuffle_seed = 1;
    /// Features examined per split; 0 means all of them.
    int features_per_split = 0;
};

using ClassCounts = std::array<int, Label::kClassCount>;

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;     // taken when value <= threshold
    int right = -1;
    Label label;
    ClassCounts counts{};

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

/// Binary decision tree over (rw, tc, p). Node 0 is the root.
struct TreeModel {
    std::vector<TreeNode> nodes;

    [[nodiscard]] bool trained() const { return !nodes.empty(); }
    /// Throws std::logic_error on an untrained model.
    [[nodiscard]] Label predict(const Features& features) const;
    [[nodiscard]] int leaf_count() const;
    [[nodiscard]] int depth() const;
};

/// Greedy information-gain splitting with thresholds at midpoints between
/// adjacent distinct feature values, then C4.5-style error-based pruning
/// (subtree replacement) at `params.confidence`. Deterministic; pass `rng`
/// only when features_per_split selects random feature subsets.
TreeModel train_tree(std::span<const LabelledRow> rows, const TreeParams& params = {},
                     std::mt19937_64* rng = nullptr);

/// Extra errors C4.5 adds to `errors` observed among `n` samples: the upper
/// limit of the binomial confidence interval at `confidence`, times n, minus
/// the observed errors.
double pessimistic_extra_errors(double n, double errors, double confidence);

double entropy(const ClassCounts& counts, int total);

} // namespace qtune
