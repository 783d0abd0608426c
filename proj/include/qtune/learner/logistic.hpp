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
#include <map>
#include <tuple>
#include <vector>

#include "qtune/learner/labelling.hpp"
#include "qtune/sla.hpp"
#include "qtune/trace_log.hpp"

namespace qtune {

struct LogisticParams {
    /// L1 penalty weight on every non-intercept coefficient.
    double lambda = 25.0;
    /// Significance level reported alongside the fit.
    double alpha = 0.05;
    /// A level is feasible when both exceedance probabilities are below this.
    double cut = 0.5;
    int max_iterations = 200;
    double tolerance = 1e-9;
    double rw_step = 0.05;
};

/// Design columns: intercept, one indicator per level other than the
/// weakest, then standardized RW, P and Tc.
inline constexpr int kLogitColumns = 1 + (kLevelCount - 1) + 3;

struct LogitFit {
    std::array<double, kLogitColumns> beta{};
    std::array<double, 3> mean{};   // rw, p, tc
    std::array<double, 3> scale{};  // zero marks a constant input
    int iterations = 0;
    double log_likelihood = 0.0;

    [[nodiscard]] double linear(ConsistencyLevel level, double rw, double p, double tc) const;
    [[nodiscard]] double probability(ConsistencyLevel level, double rw, double p, double tc) const;
    [[nodiscard]] int nonzero_coefficients() const;
};

/// L1-penalized logistic regression fitted by iteratively reweighted least
/// squares, each weighted subproblem solved by cyclic coordinate descent.
/// Minimizes -logL + lambda * sum(|beta_j|), intercept unpenalized.
/// Throws std::runtime_error when the iteration cap is hit.
LogitFit fit_logit(const std::vector<TrainingRow>& rows, const std::vector<int>& targets,
                   const LogisticParams& params);

struct LogisticModel {
    LogitFit latency;    // P(l_ms > latency threshold)
    LogitFit staleness;  // P(s_ms > staleness threshold)
    double cut = 0.5;
    double rw_step = 0.05;
    /// Mean throughput per (rw bucket, tc, level index) seen in training.
    std::map<std::tuple<long, int, int>, double> cell_throughput;
    std::array<double, kLevelCount> level_throughput{};
    bool fitted = false;

    [[nodiscard]] bool trained() const { return fitted; }
    /// Feasible level with the highest expected throughput, else INFEASIBLE.
    [[nodiscard]] Label predict(const Features& features) const;
    [[nodiscard]] double expected_throughput(const Features& features, int level) const;
};

LogisticModel fit_logistic(const std::vector<TrainingRow>& rows, const SubSLA& sla,
                           const LogisticParams& params = {});

} // namespace qtune
