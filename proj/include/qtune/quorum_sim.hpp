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
#include <functional>
#include <iosfwd>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "qtune/consistency.hpp"
#include "qtune/kv_config.hpp"
#include "qtune/workload.hpp"

namespace qtune {

/// Per-message one-way delay. Each message draws a lognormal delay with the
/// given median, then scales it by its replica's factor (and by write_scale
/// for write traffic) and adds the injected constant delay.
struct LatencyModel {
    std::string kind = "lognormal";
    double median_us = 20000.0;
    double sigma = 0.5;
    double write_scale = 1.0;
    std::vector<double> replica_scales;  // empty means 1.0 for every replica
    std::int64_t injected_delay_us = 0;

    [[nodiscard]] double replica_scale(int replica) const;
};

struct ClusterConfig {
    int replica_count = 5;
    LatencyModel latency;
    std::uint64_t seed = 1;
    std::int64_t clock_skew_bound_us = 0;

    void validate() const;
    static ClusterConfig from_config(const KeyValueConfig& config);
};

/// Version token of the value a key holds before any write.
inline constexpr std::uint64_t kInitialToken = 0;

struct OperationRecord {
    std::uint64_t op_id = 0;
    std::string key;
    OpKind kind = OpKind::Read;
    std::int64_t start_us = 0;
    std::int64_t finish_us = 0;
    std::uint64_t value = kInitialToken;
    ConsistencyLevel level;
    int messages = 0;

    [[nodiscard]] std::int64_t latency_us() const { return finish_us - start_us; }

    friend bool operator==(const OperationRecord&, const OperationRecord&) = default;
};

using Trace = std::vector<OperationRecord>;

/// Chooses the consistency level for each issued operation.
using LevelPolicy = std::function<ConsistencyLevel(const WorkloadOp&)>;

LevelPolicy fixed_level(ConsistencyLevel level);

/// Discrete-event model of an N-replica Dynamo-style store. A coordinator
/// sends every operation to all replicas and completes it once the level's
/// acknowledgment count has replied. Writes land on each replica when their
/// message arrives; reads return the highest (timestamp, op_id) version among
/// the responders. Single-threaded and deterministic for a given seed.
class Cluster {
public:
    explicit Cluster(ClusterConfig config);

    [[nodiscard]] const ClusterConfig& config() const { return config_; }
    [[nodiscard]] std::int64_t now() const { return now_; }
    [[nodiscard]] std::uint64_t total_messages() const { return total_messages_; }
    [[nodiscard]] std::int64_t clock_offset(int replica) const;

    /// Runs a single operation from the current time until it completes.
    /// Messages still in flight stay queued and are delivered by later calls.
    OperationRecord execute(OpKind kind, std::uint32_t key, ConsistencyLevel level);

    /// Starts every session at the current time, issues operations
    /// closed-loop until `window_us` has elapsed, then drains in-flight
    /// messages. Returns the window's operations ordered by op_id.
    Trace run_window(WorkloadStream& workload, const LevelPolicy& policy, std::int64_t window_us);

    /// Delivers every queued message.
    void drain();

private:
    struct Version {
        std::int64_t timestamp = 0;
        std::uint64_t op_id = 0;
        std::uint64_t token = kInitialToken;

        [[nodiscard]] bool newer_than(const Version& other) const
        {
            return timestamp != other.timestamp ? timestamp > other.timestamp
                                                : op_id > other.op_id;
        }
    };

    enum class EventType : std::uint8_t { Arrive, Reply, Issue };

    struct Event {
        std::int64_t time = 0;
        std::uint64_t seq = 0;
        EventType type = EventType::Arrive;
        std::uint64_t op_id = 0;
        int replica = 0;  // session index for Issue events
        Version payload;

        bool operator>(const Event& other) const
        {
            return time != other.time ? time > other.time : seq > other.seq;
        }
    };

    struct PendingOp {
        OperationRecord record;
        std::uint32_t key = 0;
        int session = -1;
        int required = 1;
        int acks = 0;
        int replies = 0;
        bool done = false;
        std::int64_t true_start = 0;
        Version best;
        Version written;
        std::vector<std::int64_t> reply_delay;
    };

    struct DelayStream {
        std::mt19937_64 rng;
        std::lognormal_distribution<double> dist;
    };

    std::uint64_t start_op(int session, OpKind kind, std::uint32_t key, ConsistencyLevel level);
    void push(Event event);
    void step();
    std::int64_t sample_delay(DelayStream& stream, int replica, OpKind kind);
    DelayStream& delay_stream(int session);
    int coordinator_of(int session) const;

    ClusterConfig config_;
    std::int64_t now_ = 0;
    std::uint64_t next_op_id_ = 1;
    std::uint64_t next_seq_ = 0;
    std::uint64_t total_messages_ = 0;
    std::vector<std::int64_t> clock_offsets_;
    std::vector<std::unordered_map<std::uint32_t, Version>> replicas_;
    std::unordered_map<std::uint32_t, std::uint64_t> write_counters_;
    std::unordered_map<std::uint64_t, PendingOp> pending_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::vector<DelayStream> delay_streams_;

    // Hooks installed by execute()/run_window() while they drive the loop.
    std::function<void(const PendingOp&)> on_complete_;
    std::function<void(int session)> on_issue_;
};

inline constexpr const char* kTraceHeader =
    "op_id,key,kind,start_us,finish_us,value,read_level,write_level,messages";

void write_trace(std::ostream& out, const Trace& trace);
/// Throws std::runtime_error naming the offending line on malformed input.
Trace read_trace(std::istream& in);

} // namespace qtune
