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

#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qtune/learner/forest.hpp"
#include "qtune/learner/labelling.hpp"
#include "qtune/learner/logistic.hpp"
#include "qtune/learner/metrics.hpp"
#include "qtune/learner/tree.hpp"

namespace qtune {

enum class LearnerKind { Tree, Forest, Logistic };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner(std::string_view text);

struct LearnerOptions {
    CellConfig cells;
    TreeParams tree;
    ForestParams forest;
    LogisticParams logistic;
};

/// A trained model bound to the subSLA it was trained for.
class Predictor {
public:
    using Model = std::variant<TreeModel, ForestModel, LogisticModel>;

    Predictor() = default;
    Predictor(Model model, SubSLA sla) : model_(std::move(model)), sla_(sla) {}

    [[nodiscard]] LearnerKind kind() const;
    [[nodiscard]] const SubSLA& sla() const { return sla_; }
    [[nodiscard]] const Model& model() const { return model_; }
    [[nodiscard]] bool trained() const;

    /// Throws std::invalid_argument when `sla` differs from the training
    /// subSLA and std::logic_error when nothing was trained.
    [[nodiscard]] Label predict(const Features& features, const SubSLA& sla) const;
    [[nodiscard]] Label predict(const Features& features) const;

private:
    Model model_;
    SubSLA sla_;
};

Predictor train_predictor(LearnerKind kind, const std::vector<TrainingRow>& rows,
                          const SubSLA& sla, const LearnerOptions& options = {});

/// Trains on already-labelled rows (tree or forest only).
Predictor train_labelled(LearnerKind kind, std::span<const LabelledRow> rows, const SubSLA& sla,
                         const LearnerOptions& options = {});

struct CvResult {
    double error = 0.0;  // mean over folds of the mean 0/1 loss
    int rounds = 0;
    std::vector<double> fold_errors;
};

/// k-fold cross validation over a seeded shuffle of the rows. Labels come
/// from labelling the whole corpus once; tree and forest train on the
/// labelled training folds, logistic regression on the raw ones.
/// Throws std::invalid_argument for folds < 2 or fewer rows than folds.
CvResult cross_validate(const std::vector<TrainingRow>& rows, const SubSLA& sla, int folds,
                        LearnerKind kind, const LearnerOptions& options = {});
CvResult cross_validate(std::span<const LabelledRow> rows, int folds, LearnerKind kind,
                        const LearnerOptions& options = {});

struct OverheadStats {
    double mean_ms = 0.0;
    double variance = 0.0;
    double stddev = 0.0;
};

/// Wall-clock cost of single predictions, cycling through `queries`.
OverheadStats measure_overhead(const Predictor& predictor, const std::vector<Features>& queries,
                               int predictions);

/// Parameter count and training log-likelihood. Tree leaves contribute
/// Laplace-smoothed class frequencies; a forest averages its trees'
/// probabilities; logistic regression sums both logits.
std::pair<int, double> model_likelihood(const Predictor& predictor,
                                        const std::vector<TrainingRow>& rows,
                                        std::span<const LabelledRow> labelled);

/// Versioned text format; load(save(m)) predicts identically to m.
void save_model(std::ostream& out, const Predictor& predictor);
Predictor load_model(std::istream& in);

} // namespace qtune
