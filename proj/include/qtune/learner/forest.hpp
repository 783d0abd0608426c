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

#include <cstdint>
#include <span>
#include <vector>

#include "qtune/learner/tree.hpp"

namespace qtune {

struct ForestParams {
    int tree_count = 100;
    /// Features per split; 0 picks ceil(sqrt(feature count)).
    int features_per_split = 0;
    std::uint64_t seed = 1;
    /// Member trees are grown unpruned by default.
    TreeParams tree{.prune = false};
};

struct ForestModel {
    std::vector<TreeModel> trees;

    [[nodiscard]] bool trained() const { return !trees.empty(); }
    /// Majority vote; ties go to the lowest label index (the weaker level).
    [[nodiscard]] Label predict(const Features& features) const;
};

/// Row indices drawn with replacement for tree `tree_index`.
std::vector<int> forest_bootstrap(std::size_t row_count, std::uint64_t seed, int tree_index);

ForestModel train_forest(std::span<const LabelledRow> rows, const ForestParams& params = {});

} // namespace qtune
