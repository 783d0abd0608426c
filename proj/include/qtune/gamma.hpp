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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtune/quorum_sim.hpp"

namespace qtune {

/// A read or write viewed as a time interval on one register.
struct IntervalOp {
    std::int64_t start = 0;
    std::int64_t finish = 0;
    OpKind kind = OpKind::Read;
    std::uint64_t value = kInitialToken;
    std::string key;
};

class MalformedTrace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StalenessReport {
    std::map<std::string, std::int64_t> per_key_gamma;  // microseconds
    double percentile = 95.0;
    std::int64_t score_us = 0;

    [[nodiscard]] double score_ms() const { return static_cast<double>(score_us) / 1000.0; }
};

/// Decides Γ-atomicity of a single-key history: widen every interval by
/// gamma/2 on both sides, then ask whether some total order respecting
/// real-time precedence lets every read return the latest preceding write.
///
/// Writes carry unique values, so each write and the reads returning its value
/// form a cluster that must occupy a contiguous block of any valid order. The
/// history is atomic iff no read precedes its own write and the precedence
/// graph between clusters is acyclic (the initial value's cluster comes first).
/// Runs in O(n log n).
///
/// Throws MalformedTrace for mixed keys, empty intervals, duplicate write
/// values, or reads of a value nobody wrote.
bool check_atomic(std::span<const IntervalOp> ops, std::int64_t gamma_us);

/// Smallest Γ >= 0 for which check_atomic holds. Atomicity is monotone in Γ
/// and only changes where a widened finish meets a widened start, so the
/// answer is 0 or some start-minus-finish difference; binary search over the
/// integer range finds it exactly.
std::int64_t per_key_gamma(std::span<const IntervalOp> ops);

/// Per-key Γ for every key in the trace, scored at the nearest-rank
/// percentile. Throws std::invalid_argument on an empty trace.
StalenessReport gamma_score(std::span<const IntervalOp> trace, double percentile = 95.0);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
std::int64_t nearest_rank(std::vector<std::int64_t> values, double percentile);

std::vector<IntervalOp> to_intervals(const Trace& trace);

} // namespace qtune
