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
#include <random>
#include <string>
#include <vector>

#include "qtune/kv_config.hpp"

namespace qtune {

enum class OpKind : std::uint8_t { Read, Write };

std::string_view to_string(OpKind kind);
OpKind parse_op_kind(std::string_view text);

enum class KeyDistribution : std::uint8_t { Uniform, Zipfian };

struct WorkloadSpec {
    double read_proportion = 0.5;  // RW
    int thread_count = 8;          // Tc, logical client sessions
    std::uint32_t key_count = 1000;
    KeyDistribution key_distribution = KeyDistribution::Zipfian;
    double zipf_theta = 0.99;
    std::uint64_t ops_per_thread_per_window = 100000;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;

    static WorkloadSpec from_config(const KeyValueConfig& config);
};

/// One issued operation. Sessions are closed-loop: an operation is issued at
/// the later of `issue_time_us` (relative to the window start) and the
/// completion of the session's previous operation.
struct WorkloadOp {
    int session = 0;
    OpKind kind = OpKind::Read;
    std::uint32_t key = 0;  // key rank, 0 is the most popular under zipfian
    std::int64_t issue_time_us = 0;

    friend bool operator==(const WorkloadOp&, const WorkloadOp&) = default;
};

std::string key_name(std::uint32_t key);

/// Lazily produces per-session operation sequences. Each session owns an
/// independent RNG stream derived from the spec seed, so a session's i-th
/// operation does not depend on how the sessions interleave.
class WorkloadStream {
public:
    explicit WorkloadStream(WorkloadSpec spec);

    [[nodiscard]] const WorkloadSpec& spec() const { return spec_; }

    /// Next operation of `session`, or nothing once the session has issued
    /// ops_per_thread_per_window operations.
    bool next(int session, WorkloadOp& out);

    /// Probability of drawing each key rank.
    [[nodiscard]] std::vector<double> key_probabilities() const;

    /// Sessions start staggered by one microsecond each.
    [[nodiscard]] static std::int64_t session_start_offset(int session) { return session; }

private:
    struct Session {
        std::mt19937_64 rng;
        std::uint64_t issued = 0;
    };

    WorkloadSpec spec_;
    std::vector<Session> sessions_;
    std::discrete_distribution<std::uint32_t> zipf_;
};

/// Materializes the full stream: ops_per_thread_per_window operations for
/// each session, ordered by session then sequence.
std::vector<WorkloadOp> generate(const WorkloadSpec& spec);

std::vector<WorkloadSpec> sweep_read_proportion(const WorkloadSpec& base,
                                                const std::vector<double>& values);

/// splitmix64 finalizer; used to derive independent seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace qtune
