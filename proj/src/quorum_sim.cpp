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
#include "qtune/quorum_sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qtune {

double LatencyModel::replica_scale(int replica) const
{
    if (replica_scales.empty()) {
        return 1.0;
    }
    return replica_scales.at(static_cast<std::size_t>(replica));
}

void ClusterConfig::validate() const
{
    if (replica_count < 1) {
        throw std::invalid_argument("replica_count must be at least 1");
    }
    if (latency.kind != "lognormal") {
        throw std::invalid_argument("unsupported latency model '" + latency.kind + "'");
    }
    if (!(latency.median_us > 0.0) || !(latency.sigma > 0.0) || !(latency.write_scale > 0.0)) {
        throw std::invalid_argument("latency model parameters must be strictly positive");
    }
    if (!latency.replica_scales.empty()) {
        if (latency.replica_scales.size() != static_cast<std::size_t>(replica_count)) {
            throw std::invalid_argument("replica_scales needs one entry per replica");
        }
        for (const double s : latency.replica_scales) {
            if (!(s > 0.0)) {
                throw std::invalid_argument("replica scale factors must be strictly positive");
            }
        }
    }
    if (latency.injected_delay_us < 0) {
        throw std::invalid_argument("injected delay must be non-negative");
    }
    if (clock_skew_bound_us < 0) {
        throw std::invalid_argument("clock_skew_bound_us must be non-negative");
    }
}

ClusterConfig ClusterConfig::from_config(const KeyValueConfig& config)
{
    ClusterConfig out;
    out.replica_count = static_cast<int>(config.get_int("replica_count", out.replica_count));
    out.latency.kind = config.get_string("latency_model", out.latency.kind);
    out.latency.median_us = config.get_double("latency_median_us", out.latency.median_us);
    out.latency.sigma = config.get_double("latency_sigma", out.latency.sigma);
    out.latency.write_scale = config.get_double("write_scale", out.latency.write_scale);
    out.latency.replica_scales = config.get_doubles("replica_scales", {});
    out.latency.injected_delay_us = config.get_int("injected_delay_us", 0);
    out.seed = config.get_uint("seed", out.seed);
    out.clock_skew_bound_us = config.get_int("clock_skew_bound_us", 0);
    out.validate();
    return out;
}

LevelPolicy fixed_level(ConsistencyLevel level)
{
    return [level](const WorkloadOp&) { return level; };
}

Cluster::Cluster(ClusterConfig config) : config_(std::move(config))
{
    config_.validate();
    const auto n = static_cast<std::size_t>(config_.replica_count);
    replicas_.resize(n);
    clock_offsets_.assign(n, 0);
    if (config_.clock_skew_bound_us > 0) {
        std::mt19937_64 rng(mix_seed(config_.seed, 0xC10C));
        std::uniform_int_distribution<std::int64_t> skew(-config_.clock_skew_bound_us,
                                                         config_.clock_skew_bound_us);
        for (auto& offset : clock_offsets_) {
            offset = skew(rng);
        }
    }
}

std::int64_t Cluster::clock_offset(int replica) const
{
    return clock_offsets_.at(static_cast<std::size_t>(replica));
}

int Cluster::coordinator_of(int session) const
{
    return session < 0 ? 0 : session % config_.replica_count;
}

Cluster::DelayStream& Cluster::delay_stream(int session)
{
    const auto index = static_cast<std::size_t>(session + 1);
    while (delay_streams_.size() <= index) {
        const auto id = delay_streams_.size();
        delay_streams_.push_back(DelayStream{
            std::mt19937_64(mix_seed(config_.seed, 1000 + id)),
            std::lognormal_distribution<double>(std::log(config_.latency.median_us),
                                                config_.latency.sigma)});
    }
    return delay_streams_[index];
}

std::int64_t Cluster::sample_delay(DelayStream& stream, int replica, OpKind kind)
{
    double d = stream.dist(stream.rng) * config_.latency.replica_scale(replica);
    if (kind == OpKind::Write) {
        d *= config_.latency.write_scale;
    }
    const auto us = static_cast<std::int64_t>(std::llround(d)) + config_.latency.injected_delay_us;
    return std::max<std::int64_t>(us, 1);
}

void Cluster::push(Event event)
{
    event.seq = next_seq_++;
    events_.push(event);
}

std::uint64_t Cluster::start_op(int session, OpKind kind, std::uint32_t key,
                                ConsistencyLevel level)
{
    const auto id = next_op_id_++;
    const int n = config_.replica_count;
    const auto offset = clock_offsets_[static_cast<std::size_t>(coordinator_of(session))];

    PendingOp op;
    op.key = key;
    op.session = session;
    op.true_start = now_;
    op.required = kind == OpKind::Read ? required_acks(level.read, n)
                                       : required_acks(level.write, n);
    op.best = Version{std::numeric_limits<std::int64_t>::min(), 0, kInitialToken};
    op.record.op_id = id;
    op.record.key = key_name(key);
    op.record.kind = kind;
    op.record.start_us = now_ + offset;
    op.record.level = level;
    op.record.messages = 2 * n;
    if (kind == OpKind::Write) {
        const auto token = ++write_counters_[key];
        op.written = Version{now_ + offset, id, token};
        op.record.value = token;
    }

    auto& stream = delay_stream(session);
    op.reply_delay.resize(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        const auto request = sample_delay(stream, r, kind);
        op.reply_delay[static_cast<std::size_t>(r)] = sample_delay(stream, r, kind);
        Event e;
        e.time = now_ + request;
        e.type = EventType::Arrive;
        e.op_id = id;
        e.replica = r;
        push(e);
        ++total_messages_;
    }
    pending_.emplace(id, std::move(op));
    return id;
}

void Cluster::step()
{
    const Event event = events_.top();
    events_.pop();
    now_ = event.time;

    if (event.type == EventType::Issue) {
        if (on_issue_) {
            on_issue_(event.replica);
        }
        return;
    }

    auto it = pending_.find(event.op_id);
    if (it == pending_.end()) {
        throw std::logic_error("event for unknown operation");
    }
    auto& op = it->second;

    if (event.type == EventType::Arrive) {
        auto& store = replicas_[static_cast<std::size_t>(event.replica)];
        Event reply;
        reply.time = now_ + op.reply_delay[static_cast<std::size_t>(event.replica)];
        reply.type = EventType::Reply;
        reply.op_id = event.op_id;
        reply.replica = event.replica;
        if (op.record.kind == OpKind::Write) {
            auto [slot, inserted] = store.try_emplace(op.key, op.written);
            if (!inserted && op.written.newer_than(slot->second)) {
                slot->second = op.written;
            }
        } else {
            const auto found = store.find(op.key);
            reply.payload = found != store.end()
                                ? found->second
                                : Version{std::numeric_limits<std::int64_t>::min(), 0,
                                          kInitialToken};
        }
        push(reply);
        ++total_messages_;
        return;
    }

    ++op.replies;
    if (!op.done) {
        ++op.acks;
        if (op.record.kind == OpKind::Read && event.payload.newer_than(op.best)) {
            op.best = event.payload;
        }
        if (op.acks == op.required) {
            op.done = true;
            op.record.finish_us =
                now_ + clock_offsets_[static_cast<std::size_t>(coordinator_of(op.session))];
            if (op.record.kind == OpKind::Read) {
                op.record.value = op.best.token;
            }
            if (on_complete_) {
                on_complete_(op);
            }
        }
    }
    if (op.replies == config_.replica_count) {
        // on_complete_ may have pushed events but never touches pending_.
        pending_.erase(event.op_id);
    }
}

OperationRecord Cluster::execute(OpKind kind, std::uint32_t key, ConsistencyLevel level)
{
    OperationRecord result;
    bool finished = false;
    on_complete_ = [&](const PendingOp& op) {
        if (op.session < 0 && !finished) {
            result = op.record;
            finished = true;
        }
    };
    start_op(-1, kind, key, level);
    while (!finished) {
        step();
    }
    on_complete_ = nullptr;
    return result;
}

void Cluster::drain()
{
    while (!events_.empty()) {
        step();
    }
}

Trace Cluster::run_window(WorkloadStream& workload, const LevelPolicy& policy,
                          std::int64_t window_us)
{
    if (window_us <= 0) {
        throw std::invalid_argument("window must be positive");
    }
    drain();
    const std::int64_t window_start = now_;
    const std::int64_t window_end = window_start + window_us;
    const int sessions = workload.spec().thread_count;

    std::vector<WorkloadOp> next_op(static_cast<std::size_t>(sessions));
    std::vector<char> has_next(static_cast<std::size_t>(sessions), 0);
    Trace trace;

    auto schedule = [&](int session, std::int64_t not_before) {
        auto& op = next_op[static_cast<std::size_t>(session)];
        if (!workload.next(session, op)) {
            has_next[static_cast<std::size_t>(session)] = 0;
            return;
        }
        has_next[static_cast<std::size_t>(session)] = 1;
        Event e;
        e.time = std::max(not_before, window_start + op.issue_time_us);
        e.type = EventType::Issue;
        e.replica = session;
        push(e);
    };

    on_issue_ = [&](int session) {
        if (now_ >= window_end || !has_next[static_cast<std::size_t>(session)]) {
            return;
        }
        const auto& op = next_op[static_cast<std::size_t>(session)];
        start_op(session, op.kind, op.key, policy(op));
    };
    on_complete_ = [&](const PendingOp& op) {
        trace.push_back(op.record);
        if (op.session >= 0) {
            schedule(op.session, now_);
        }
    };

    for (int s = 0; s < sessions; ++s) {
        schedule(s, window_start);
    }
    drain();
    on_issue_ = nullptr;
    on_complete_ = nullptr;

    std::sort(trace.begin(), trace.end(),
              [](const OperationRecord& a, const OperationRecord& b) { return a.op_id < b.op_id; });
    return trace;
}

void write_trace(std::ostream& out, const Trace& trace)
{
    out << kTraceHeader << '\n';
    for (const auto& r : trace) {
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.op_id, r.key, to_string(r.kind),
                           r.start_us, r.finish_us, r.value, to_string(r.level.read),
                           to_string(r.level.write), r.messages);
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

} // namespace

Trace read_trace(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("trace: empty input, expected header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kTraceHeader) {
        throw std::runtime_error("trace: line 1: unexpected header");
    }
    Trace trace;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        try {
            if (fields.size() != 9) {
                throw std::invalid_argument("expected 9 fields");
            }
            OperationRecord r;
            r.op_id = std::stoull(fields[0]);
            r.key = fields[1];
            r.kind = parse_op_kind(fields[2]);
            r.start_us = std::stoll(fields[3]);
            r.finish_us = std::stoll(fields[4]);
            r.value = std::stoull(fields[5]);
            r.level = {parse_read_level(fields[6]), parse_write_level(fields[7])};
            r.messages = std::stoi(fields[8]);
            if (r.start_us >= r.finish_us) {
                throw std::invalid_argument("start must precede finish");
            }
            trace.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("trace: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

} // namespace qtune
