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
#include "qtune/learner/forest.hpp"

#include <cmath>
#include <stdexcept>

#include "qtune/workload.hpp"

namespace qtune {

Label ForestModel::predict(const Features& features) const
{
    if (trees.empty()) {
        throw std::logic_error("forest model is not trained");
    }
    ClassCounts votes{};
    for (const auto& tree : trees) {
        ++votes[static_cast<std::size_t>(tree.predict(features).index())];
    }
    int best = 0;
    for (int c = 1; c < Label::kClassCount; ++c) {
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) {
            best = c;
        }
    }
    return Label::from_index(best);
}

namespace {

std::mt19937_64 tree_rng(std::uint64_t seed, int tree_index)
{
    return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(tree_index)));
}

} // namespace

std::vector<int> forest_bootstrap(std::size_t row_count, std::uint64_t seed, int tree_index)
{
    if (row_count == 0) {
        throw std::invalid_argument("cannot bootstrap an empty set");
    }
    auto rng = tree_rng(seed, tree_index);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(row_count) - 1);
    std::vector<int> out(row_count);
    for (auto& i : out) {
        i = pick(rng);
    }
    return out;
}

ForestModel train_forest(std::span<const LabelledRow> rows, const ForestParams& params)
{
    if (rows.empty()) {
        throw std::invalid_argument("cannot train a forest on an empty set");
    }
    if (params.tree_count < 1) {
        throw std::invalid_argument("tree_count must be at least 1");
    }
    TreeParams tree_params = params.tree;
    tree_params.features_per_split =
        params.features_per_split > 0
            ? params.features_per_split
            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(kFeatureCount))));

    ForestModel forest;
    forest.trees.reserve(static_cast<std::size_t>(params.tree_count));
    std::vector<LabelledRow> sample(rows.size());
    for (int t = 0; t < params.tree_count; ++t) {
        const auto picks = forest_bootstrap(rows.size(), params.seed, t);
        for (std::size_t i = 0; i < picks.size(); ++i) {
            sample[i] = rows[static_cast<std::size_t>(picks[i])];
        }
        // Separate stream from the bootstrap draw.
        auto feature_rng = tree_rng(params.seed ^ 0x5eedf00dULL, t);
        forest.trees.push_back(train_tree(sample, tree_params, &feature_rng));
    }
    return forest;
}

} // namespace qtune
