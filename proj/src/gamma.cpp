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
#include "qtune/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

namespace qtune {
namespace {

// Far below any real timestamp, yet adding Γ cannot overflow.
constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min() / 4;

struct Cluster {
    std::int64_t min_finish = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_start = kNegInf;
    std::int64_t write_start = kNegInf;
    std::int64_t min_read_finish = std::numeric_limits<std::int64_t>::max();
};

std::vector<Cluster> build_clusters(std::span<const IntervalOp> ops)
{
    std::vector<Cluster> clusters(1);
    clusters[0].min_finish = kNegInf;  // the initial value is written before time begins
    std::unordered_map<std::uint64_t, std::size_t> by_value;

    for (const auto& op : ops) {
        if (op.key != ops.front().key) {
            throw MalformedTrace("history mixes keys '" + ops.front().key + "' and '" + op.key +
                                 "'");
        }
        if (!(op.start < op.finish)) {
            throw MalformedTrace("operation on '" + op.key + "' does not start before it finishes");
        }
        if (op.kind != OpKind::Write) {
            continue;
        }
        if (op.value == kInitialToken) {
            throw MalformedTrace("write reuses the initial value on '" + op.key + "'");
        }
        if (!by_value.emplace(op.value, clusters.size()).second) {
            throw MalformedTrace("duplicate write value " + std::to_string(op.value) + " on '" +
                                 op.key + "'");
        }
        Cluster c;
        c.min_finish = op.finish;
        c.max_start = op.start;
        c.write_start = op.start;
        clusters.push_back(c);
    }

    for (const auto& op : ops) {
        if (op.kind != OpKind::Read) {
            continue;
        }
        std::size_t index = 0;
        if (op.value != kInitialToken) {
            const auto it = by_value.find(op.value);
            if (it == by_value.end()) {
                throw MalformedTrace("read of '" + op.key + "' returned value " +
                                     std::to_string(op.value) + " that was never written");
            }
            index = it->second;
        }
        auto& c = clusters[index];
        c.min_finish = std::min(c.min_finish, op.finish);
        c.max_start = std::max(c.max_start, op.start);
        c.min_read_finish = std::min(c.min_read_finish, op.finish);
    }
    return clusters;
}

bool clusters_atomic(const std::vector<Cluster>& clusters, std::int64_t gamma)
{
    // A read that finishes before its own write starts can never be placed.
    for (std::size_t i = 1; i < clusters.size(); ++i) {
        const auto& c = clusters[i];
        if (c.min_read_finish != std::numeric_limits<std::int64_t>::max() &&
            c.min_read_finish + gamma < c.write_start) {
            return false;
        }
    }

    // Cluster A must come before B when some op of A precedes some op of B,
    // i.e. min_finish(A) + Γ < max_start(B). Kahn's algorithm on that graph:
    // a source exists among the remaining clusters iff either the one with
    // the smallest max_start or the one with the smallest min_finish is a
    // source, so each round checks just those two.
    std::set<std::pair<std::int64_t, std::size_t>> by_start;
    std::set<std::pair<std::int64_t, std::size_t>> by_finish;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        by_start.emplace(clusters[i].max_start, i);
        by_finish.emplace(clusters[i].min_finish, i);
    }

    auto is_source = [&](std::size_t b) {
        auto it = by_finish.begin();
        if (it->second == b) {
            ++it;
        }
        return it == by_finish.end() || !(it->first + gamma < clusters[b].max_start);
    };
    auto remove = [&](std::size_t i) {
        by_start.erase({clusters[i].max_start, i});
        by_finish.erase({clusters[i].min_finish, i});
    };

    while (!by_start.empty()) {
        const auto first_start = by_start.begin()->second;
        const auto first_finish = by_finish.begin()->second;
        if (is_source(first_start)) {
            remove(first_start);
        } else if (is_source(first_finish)) {
            remove(first_finish);
        } else {
            return false;
        }
    }
    return true;
}

} // namespace

bool check_atomic(std::span<const IntervalOp> ops, std::int64_t gamma_us)
{
    if (gamma_us < 0) {
        throw std::invalid_argument("gamma must be non-negative");
    }
    if (ops.empty()) {
        return true;
    }
    return clusters_atomic(build_clusters(ops), gamma_us);
}

std::int64_t per_key_gamma(std::span<const IntervalOp> ops)
{
    if (ops.empty()) {
        return 0;
    }
    const auto clusters = build_clusters(ops);
    if (clusters_atomic(clusters, 0)) {
        return 0;
    }
    std::int64_t max_start = std::numeric_limits<std::int64_t>::min();
    std::int64_t min_finish = std::numeric_limits<std::int64_t>::max();
    for (const auto& op : ops) {
        max_start = std::max(max_start, op.start);
        min_finish = std::min(min_finish, op.finish);
    }
    // At hi no widened op precedes another, so every order is admissible.
    std::int64_t lo = 0;
    std::int64_t hi = std::max<std::int64_t>(max_start - min_finish, 1);
    while (hi - lo > 1) {
        const auto mid = lo + (hi - lo) / 2;
        if (clusters_atomic(clusters, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

std::int64_t nearest_rank(std::vector<std::int64_t> values, double percentile)
{
    if (values.empty()) {
        throw std::invalid_argument("percentile of an empty set");
    }
    if (!(percentile > 0.0 && percentile <= 100.0)) {
        throw std::invalid_argument("percentile must lie in (0, 100]");
    }
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

StalenessReport gamma_score(std::span<const IntervalOp> trace, double percentile)
{
    if (trace.empty()) {
        throw std::invalid_argument("cannot score staleness of an empty trace");
    }
    std::map<std::string, std::vector<IntervalOp>> by_key;
    for (const auto& op : trace) {
        by_key[op.key].push_back(op);
    }
    StalenessReport report;
    report.percentile = percentile;
    std::vector<std::int64_t> gammas;
    gammas.reserve(by_key.size());
    for (const auto& [key, ops] : by_key) {
        const auto g = per_key_gamma(ops);
        report.per_key_gamma.emplace(key, g);
        gammas.push_back(g);
    }
    report.score_us = nearest_rank(std::move(gammas), percentile);
    return report;
}

std::vector<IntervalOp> to_intervals(const Trace& trace)
{
    std::vector<IntervalOp> out;
    out.reserve(trace.size());
    for (const auto& r : trace) {
        out.push_back(IntervalOp{r.start_us, r.finish_us, r.kind, r.value, r.key});
    }
    return out;
}

} // namespace qtune
