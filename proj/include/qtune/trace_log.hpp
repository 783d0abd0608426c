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
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "qtune/consistency.hpp"
#include "qtune/quorum_sim.hpp"
#include "qtune/workload.hpp"

namespace qtune {

/// One aggregated observation window: <RW, Tc, P, C, L, S, T>.
struct TrainingRow {
    double rw = 0.0;
    int tc = 1;
    std::uint64_t p = 0;  // messages sent and received during the window
    ConsistencyLevel c;
    double l_ms = 0.0;    // mean operation latency
    double s_ms = 0.0;    // percentile per-key Γ
    double t_ops = 0.0;   // completed operations per simulated second

    friend bool operator==(const TrainingRow&, const TrainingRow&) = default;
};

/// Aggregates one window's trace. Writes from earlier windows on the same
/// cluster go in `prior_writes`; they only inform the staleness score of keys
/// the window touched. Throws std::invalid_argument on an empty trace or a
/// non-positive window.
TrainingRow observe(const Trace& trace, const WorkloadSpec& spec, ConsistencyLevel level,
                    std::int64_t window_us, double percentile = 95.0,
                    const Trace& prior_writes = {});

/// Dataset files keep six decimals; this is the value a row reads back as.
TrainingRow round_to_file_precision(TrainingRow row);

inline constexpr const char* kDatasetHeader = "rw,tc,p,c,l_ms,s_ms,t_ops";

void write_dataset(std::ostream& out, const std::vector<TrainingRow>& rows);
void write_dataset(const std::vector<TrainingRow>& rows, const std::filesystem::path& path);
std::vector<TrainingRow> load_dataset(std::istream& in);
std::vector<TrainingRow> load_dataset(const std::filesystem::path& path);

} // namespace qtune
