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
#include <map>
#include <string>
#include <vector>

#include "qtune/learner/model.hpp"
#include "qtune/quorum_sim.hpp"
#include "qtune/sla.hpp"
#include "qtune/trace_log.hpp"
#include "qtune/workload.hpp"

namespace qtune {

/// Grid of observation windows: read proportions x thread counts x all 12
/// levels x repetitions. Every window runs on a fresh cluster whose seed is
/// derived from the master seed and the window's grid position.
struct CorpusGrid {
    std::vector<double> rw_values{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<int> tc_values{4, 8};
    int repetitions = 25;
    std::int64_t window_us = 60'000'000;
    double percentile = 95.0;

    [[nodiscard]] std::size_t row_count() const
    {
        return rw_values.size() * tc_values.size() * static_cast<std::size_t>(kLevelCount) *
               static_cast<std::size_t>(repetitions);
    }
};

std::vector<TrainingRow> generate_corpus(const ClusterConfig& cluster, const WorkloadSpec& base,
                                         const CorpusGrid& grid, std::uint64_t seed);

struct EvalConfig {
    std::vector<double> rw_values{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int windows_per_value = 5;
    std::int64_t window_us = 60'000'000;
    double percentile = 95.0;
    /// Unscored first window that supplies the initial packet count.
    ConsistencyLevel warmup_level{ReadLevel::One, WriteLevel::Any};
    /// Level run when the model answers INFEASIBLE; such windows count as failed.
    ConsistencyLevel fallback_level{ReadLevel::All, WriteLevel::All};
};

struct WindowResult {
    std::string policy;
    double rw = 0.0;
    int window = 0;
    ConsistencyLevel level;
    bool infeasible = false;
    TrainingRow row;
    bool satisfied = false;
};

struct EvalReport {
    std::vector<WindowResult> windows;
    /// M-statistic per policy; "predicted" plus one entry per fixed level.
    std::map<std::string, double> m_values;
    std::vector<std::string> policy_order;
};

inline constexpr const char* kPredictedPolicy = "predicted";

/// Runs the predicted policy and every fixed level over the same seeded
/// workloads. The predicted policy picks each window's level from the
/// workload's RW and Tc plus the packet count observed in the previous window.
EvalReport evaluate_policies(const ClusterConfig& cluster, const WorkloadSpec& base,
                             const Predictor& predictor, const SubSLA& sla,
                             const EvalConfig& config, std::uint64_t seed);

} // namespace qtune
