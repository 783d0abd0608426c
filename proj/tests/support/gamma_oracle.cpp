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
#include "gamma_oracle.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace qtune::testing {

bool brute_force_atomic(std::span<const IntervalOp> ops, std::int64_t gamma)
{
    std::vector<std::size_t> order(ops.size());
    std::iota(order.begin(), order.end(), 0);
    do {
        bool ok = true;
        for (std::size_t i = 0; ok && i < order.size(); ++i) {
            for (std::size_t j = i + 1; ok && j < order.size(); ++j) {
                // Placing j after i is illegal if j really finished before i started.
                if (ops[order[j]].finish + gamma < ops[order[i]].start) {
                    ok = false;
                }
            }
        }
        std::uint64_t current = kInitialToken;
        for (std::size_t i = 0; ok && i < order.size(); ++i) {
            const auto& op = ops[order[i]];
            if (op.kind == OpKind::Write) {
                current = op.value;
            } else if (op.value != current) {
                ok = false;
            }
        }
        if (ok) {
            return true;
        }
    } while (std::next_permutation(order.begin(), order.end()));
    return false;
}

std::int64_t brute_force_min_gamma(std::span<const IntervalOp> ops)
{
    if (ops.size() > 8) {
        throw std::invalid_argument("brute force Γ is limited to 8 operations");
    }
    std::set<std::int64_t> candidates{0};
    for (const auto& a : ops) {
        for (const auto& b : ops) {
            if (b.start - a.finish > 0) {
                candidates.insert(b.start - a.finish);
            }
        }
    }
    for (const auto g : candidates) {
        if (brute_force_atomic(ops, g)) {
            return g;
        }
    }
    throw std::logic_error("no candidate shift made the history atomic");
}

std::vector<IntervalOp> random_history(std::mt19937_64& rng, int max_ops, int time_span)
{
    const int n = std::uniform_int_distribution<int>(0, max_ops)(rng);
    std::vector<IntervalOp> ops;
    std::uint64_t next_value = 1;
    std::uniform_int_distribution<int> when(0, time_span);
    std::uniform_int_distribution<int> length(1, time_span / 3 + 1);
    for (int i = 0; i < n; ++i) {
        IntervalOp op;
        op.key = "k";
        op.start = when(rng);
        op.finish = op.start + length(rng);
        op.kind = std::bernoulli_distribution(0.5)(rng) ? OpKind::Write : OpKind::Read;
        if (op.kind == OpKind::Write) {
            op.value = next_value++;
        }
        ops.push_back(op);
    }
    // Reads pick among all written values (or the initial one).
    for (auto& op : ops) {
        if (op.kind == OpKind::Read) {
            op.value = std::uniform_int_distribution<std::uint64_t>(0, next_value - 1)(rng);
        }
    }
    return ops;
}

} // namespace qtune::testing
