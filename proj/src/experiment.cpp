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
#include "qtune/experiment.hpp"

#include <algorithm>
#include <functional>
#include <iterator>
#include <stdexcept>

namespace qtune {
namespace {

struct Run {
    Cluster cluster;
    WorkloadStream workload;
    Trace writes;  // every write completed in earlier windows
};

Run fresh_run(const ClusterConfig& cluster, WorkloadSpec spec, std::uint64_t seed,
              std::uint64_t position)
{
    auto config = cluster;
    config.seed = mix_seed(seed, 2 * position);
    spec.seed = mix_seed(seed, 2 * position + 1);
    return Run{Cluster(config), WorkloadStream(spec), {}};
}

TrainingRow run_and_observe(Run& run, ConsistencyLevel level, std::int64_t window_us,
                            double percentile)
{
    const auto trace = run.cluster.run_window(run.workload, fixed_level(level), window_us);
    auto row = observe(trace, run.workload.spec(), level, window_us, percentile, run.writes);
    std::copy_if(trace.begin(), trace.end(), std::back_inserter(run.writes),
                 [](const OperationRecord& r) { return r.kind == OpKind::Write; });
    return row;
}

} // namespace

std::vector<TrainingRow> generate_corpus(const ClusterConfig& cluster, const WorkloadSpec& base,
                                         const CorpusGrid& grid, std::uint64_t seed)
{
    if (grid.rw_values.empty() || grid.tc_values.empty() || grid.repetitions < 1) {
        throw std::invalid_argument("corpus grid is empty");
    }
    std::vector<TrainingRow> rows;
    rows.reserve(grid.row_count());
    std::uint64_t position = 0;
    for (const auto& spec_rw : sweep_read_proportion(base, grid.rw_values)) {
        for (const int tc : grid.tc_values) {
            auto spec = spec_rw;
            spec.thread_count = tc;
            for (int rep = 0; rep < grid.repetitions; ++rep) {
                for (const auto level : all_levels()) {
                    auto run = fresh_run(cluster, spec, seed, position++);
                    rows.push_back(run_and_observe(run, level, grid.window_us, grid.percentile));
                }
            }
        }
    }
    return rows;
}

EvalReport evaluate_policies(const ClusterConfig& cluster, const WorkloadSpec& base,
                             const Predictor& predictor, const SubSLA& sla,
                             const EvalConfig& config, std::uint64_t seed)
{
    if (config.rw_values.empty() || config.windows_per_value < 1) {
        throw std::invalid_argument("evaluation needs read proportions and windows");
    }
    if (!predictor.trained()) {
        throw std::invalid_argument("evaluation needs a trained model");
    }
    EvalReport report;
    report.policy_order.emplace_back(kPredictedPolicy);
    for (const auto level : all_levels()) {
        report.policy_order.push_back(to_string(level));
    }

    const auto specs = sweep_read_proportion(base, config.rw_values);
    for (std::size_t v = 0; v < specs.size(); ++v) {
        // Every policy replays the same cluster and workload seeds.
        for (const auto& policy : report.policy_order) {
            auto run = fresh_run(cluster, specs[v], seed, v);
            auto observed = run_and_observe(run, config.warmup_level, config.window_us,
                                            config.percentile);
            for (int w = 0; w < config.windows_per_value; ++w) {
                WindowResult result;
                result.policy = policy;
                result.rw = specs[v].read_proportion;
                result.window = w;
                if (policy == kPredictedPolicy) {
                    const Features features{specs[v].read_proportion,
                                            static_cast<double>(specs[v].thread_count),
                                            static_cast<double>(observed.p)};
                    const auto label = predictor.predict(features, sla);
                    result.infeasible = !label.feasible();
                    result.level = label.feasible() ? label.level() : config.fallback_level;
                } else {
                    result.level = parse_level(policy);
                }
                observed = run_and_observe(run, result.level, config.window_us, config.percentile);
                result.row = observed;
                result.satisfied = !result.infeasible && satisfies(sla, observed.l_ms, observed.s_ms);
                report.windows.push_back(result);
            }
        }
    }

    for (const auto& policy : report.policy_order) {
        std::vector<Outcome> outcomes;
        for (const auto& w : report.windows) {
            if (w.policy != policy) {
                continue;
            }
            // A window the model declared infeasible counts as a violation.
            outcomes.push_back(w.infeasible ? Outcome{sla.latency_threshold_ms + 1.0, 0.0}
                                            : Outcome{w.row.l_ms, w.row.s_ms});
        }
        report.m_values[policy] = m_statistic(outcomes, sla);
    }
    return report;
}

} // namespace qtune
