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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "qtune/consistency.hpp"
#include "qtune/gamma.hpp"
#include "qtune/quorum_sim.hpp"
#include "qtune/workload.hpp"

using namespace qtune;

TEST_CASE("level ordering and names")
{
    const auto& levels = all_levels();
    REQUIRE(levels.size() == 12);
    std::set<std::string> names;
    for (int i = 0; i < kLevelCount; ++i) {
        CHECK(levels[static_cast<std::size_t>(i)].index() == i);
        CHECK(ConsistencyLevel::from_index(i) == levels[static_cast<std::size_t>(i)]);
        const auto name = to_string(levels[static_cast<std::size_t>(i)]);
        names.insert(name);
        CHECK(parse_level(name) == levels[static_cast<std::size_t>(i)]);
    }
    CHECK(names.size() == 12);
    CHECK(to_string(levels.front()) == "ONE/ANY");
    CHECK(to_string(levels.back()) == "ALL/ALL");
    CHECK_THROWS(parse_read_level("ANY"));
    CHECK_THROWS(parse_level("QUORUM"));
    CHECK_THROWS(parse_level("TWO/ALL"));
    CHECK_THROWS((void)ConsistencyLevel::from_index(12));
}

TEST_CASE("acknowledgment counts")
{
    CHECK(required_acks(ReadLevel::One, 5) == 1);
    CHECK(required_acks(ReadLevel::Quorum, 5) == 3);
    CHECK(required_acks(ReadLevel::All, 5) == 5);
    CHECK(required_acks(WriteLevel::Any, 5) == 1);
    CHECK(required_acks(WriteLevel::One, 5) == 1);
    CHECK(required_acks(WriteLevel::Quorum, 5) == 3);
    CHECK(required_acks(WriteLevel::All, 5) == 5);
    CHECK(required_acks(ReadLevel::Quorum, 4) == 3);
    CHECK(required_acks(ReadLevel::Quorum, 1) == 1);
    CHECK_THROWS(required_acks(ReadLevel::One, 0));
    for (int n = 1; n <= 7; ++n) {
        for (const auto level : all_levels()) {
            const bool expected = required_acks(level.read, n) + required_acks(level.write, n) > n;
            CHECK(quorums_intersect(level, n) == expected);
        }
    }
}

TEST_CASE("workload generation is reproducible and honours RW")
{
    WorkloadSpec spec;
    spec.thread_count = 3;
    spec.ops_per_thread_per_window = 2000;
    spec.read_proportion = 0.3;
    spec.seed = 9;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a == b);
    REQUIRE(a.size() == 6000);
    std::size_t reads = 0;
    for (const auto& op : a) {
        reads += op.kind == OpKind::Read ? 1 : 0;
        CHECK(op.key < spec.key_count);
    }
    CHECK(static_cast<double>(reads) / 6000.0 == doctest::Approx(0.3).epsilon(0.05));

    spec.seed = 10;
    CHECK(generate(spec) != a);

    spec.read_proportion = 1.0;
    for (const auto& op : generate(spec)) {
        CHECK(op.kind == OpKind::Read);
    }
    spec.read_proportion = 0.0;
    for (const auto& op : generate(spec)) {
        CHECK(op.kind == OpKind::Write);
    }
}

TEST_CASE("zipfian keys favour low ranks")
{
    WorkloadSpec spec;
    spec.thread_count = 1;
    spec.ops_per_thread_per_window = 20000;
    std::size_t hot = 0;
    for (const auto& op : generate(spec)) {
        hot += op.key < 10 ? 1 : 0;
    }
    CHECK(hot > 20000 / 10);
    spec.key_distribution = KeyDistribution::Uniform;
    hot = 0;
    for (const auto& op : generate(spec)) {
        hot += op.key < 10 ? 1 : 0;
    }
    CHECK(hot < 20000 / 50);
}

TEST_CASE("workload validation")
{
    WorkloadSpec spec;
    spec.read_proportion = 1.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.thread_count = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.key_count = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    CHECK_THROWS(sweep_read_proportion(WorkloadSpec{}, {0.2, -0.1}));
    const auto swept = sweep_read_proportion(WorkloadSpec{}, {0.0, 0.5, 1.0});
    REQUIRE(swept.size() == 3);
    CHECK(swept[1].read_proportion == 0.5);
    CHECK(key_name(7) == "user7");
}

TEST_CASE("sequential operations under intersecting quorums read their writes")
{
    ClusterConfig config;
    config.seed = 3;
    for (const auto level : all_levels()) {
        if (!quorums_intersect(level, config.replica_count)) {
            continue;
        }
        Cluster cluster(config);
        for (int i = 0; i < 50; ++i) {
            const auto written = cluster.execute(OpKind::Write, 1, level);
            const auto read = cluster.execute(OpKind::Read, 1, level);
            CHECK(read.value == written.value);
            CHECK(read.start_us >= written.finish_us);
        }
    }
}

TEST_CASE("weak reads right after a write can be stale")
{
    ClusterConfig config;
    config.seed = 5;
    Cluster cluster(config);
    const ConsistencyLevel weak{ReadLevel::One, WriteLevel::Any};
    int stale = 0;
    for (int i = 0; i < 200; ++i) {
        const auto written = cluster.execute(OpKind::Write, 2, weak);
        const auto read = cluster.execute(OpKind::Read, 2, weak);
        stale += read.value != written.value ? 1 : 0;
    }
    CHECK(stale > 0);
}

TEST_CASE("every operation exchanges a request and reply with each replica")
{
    ClusterConfig config;
    Cluster cluster(config);
    for (const auto level : all_levels()) {
        CHECK(cluster.execute(OpKind::Read, 0, level).messages == 10);
        CHECK(cluster.execute(OpKind::Write, 0, level).messages == 10);
    }
    cluster.drain();
    CHECK(cluster.total_messages() == 24 * 10);
}

TEST_CASE("latency never decreases with more required acknowledgments")
{
    ClusterConfig config;
    config.seed = 11;
    config.latency.replica_scales = {1, 2, 1, 4, 1};
    std::vector<std::vector<std::int64_t>> latency(kLevelCount);
    for (const auto level : all_levels()) {
        Cluster cluster(config);
        for (int i = 0; i < 200; ++i) {
            const auto kind = i % 2 == 0 ? OpKind::Write : OpKind::Read;
            latency[static_cast<std::size_t>(level.index())].push_back(
                cluster.execute(kind, static_cast<std::uint32_t>(i % 7), level).latency_us());
        }
    }
    for (const auto a : all_levels()) {
        for (const auto b : all_levels()) {
            const bool read_stronger = required_acks(b.read, 5) >= required_acks(a.read, 5);
            const bool write_stronger = required_acks(b.write, 5) >= required_acks(a.write, 5);
            if (!read_stronger || !write_stronger) {
                continue;
            }
            const auto& la = latency[static_cast<std::size_t>(a.index())];
            const auto& lb = latency[static_cast<std::size_t>(b.index())];
            for (std::size_t i = 0; i < la.size(); ++i) {
                CHECK(lb[i] >= la[i]);
            }
        }
    }
}

TEST_CASE("windows are deterministic and well formed")
{
    ClusterConfig config;
    config.seed = 21;
    WorkloadSpec spec;
    spec.thread_count = 4;
    spec.key_count = 20;
    const ConsistencyLevel level{ReadLevel::One, WriteLevel::One};
    auto run = [&] {
        Cluster cluster(config);
        WorkloadStream stream(spec);
        return cluster.run_window(stream, fixed_level(level), 2'000'000);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a == b);
    REQUIRE(!a.empty());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].finish_us > a[i].start_us);
        CHECK(a[i].start_us < 2'000'000);
        CHECK(a[i].level == level);
        if (i > 0) {
            CHECK(a[i].op_id > a[i - 1].op_id);
        }
    }
    CHECK_NOTHROW(gamma_score(to_intervals(a)));
}

TEST_CASE("all-replica reads and writes produce zero staleness")
{
    ClusterConfig config;
    config.seed = 8;
    WorkloadSpec spec;
    spec.key_count = 10;
    spec.read_proportion = 0.5;
    Cluster cluster(config);
    WorkloadStream stream(spec);
    const auto trace =
        cluster.run_window(stream, fixed_level({ReadLevel::All, WriteLevel::All}), 5'000'000);
    CHECK(gamma_score(to_intervals(trace)).score_us == 0);
}

TEST_CASE("injected delay raises latency")
{
    ClusterConfig config;
    Cluster plain(config);
    config.latency.injected_delay_us = 50'000;
    Cluster delayed(config);
    const ConsistencyLevel level{ReadLevel::Quorum, WriteLevel::Quorum};
    for (int i = 0; i < 20; ++i) {
        const auto a = plain.execute(OpKind::Read, 0, level).latency_us();
        const auto b = delayed.execute(OpKind::Read, 0, level).latency_us();
        CHECK(b >= a + 100'000);
    }
}

TEST_CASE("cluster config validation and parsing")
{
    ClusterConfig config;
    config.replica_count = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = {};
    config.latency.replica_scales = {1, 2};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = {};
    config.latency.kind = "uniform";
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    const auto parsed = ClusterConfig::from_config(KeyValueConfig::parse(
        "replica_count = 3\nlatency_median_us = 1000 # comment\nreplica_scales = 1,2,3\nseed = 4\n"));
    CHECK(parsed.replica_count == 3);
    CHECK(parsed.latency.median_us == 1000.0);
    CHECK(parsed.latency.replica_scales == std::vector<double>{1, 2, 3});
    CHECK(parsed.seed == 4);
}

TEST_CASE("trace files round trip")
{
    ClusterConfig config;
    WorkloadSpec spec;
    spec.thread_count = 2;
    Cluster cluster(config);
    WorkloadStream stream(spec);
    const auto trace =
        cluster.run_window(stream, fixed_level({ReadLevel::Quorum, WriteLevel::One}), 500'000);
    std::stringstream buffer;
    write_trace(buffer, trace);
    CHECK(read_trace(buffer) == trace);

    std::stringstream bad(std::string(kTraceHeader) + "\n1,user1,read,10,5\n");
    CHECK_THROWS_WITH_AS(read_trace(bad), doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("read fraction stays within three standard errors")
{
    for (const double rw : {0.05, 0.3, 0.5, 0.9}) {
        WorkloadSpec spec;
        spec.read_proportion = rw;
        spec.thread_count = 4;
        spec.ops_per_thread_per_window = 5000;
        spec.seed = 31;
        const auto ops = generate(spec);
        const double n = static_cast<double>(ops.size());
        const auto reads = std::count_if(ops.begin(), ops.end(), [](const WorkloadOp& op) {
            return op.kind == OpKind::Read;
        });
        CHECK(std::abs(static_cast<double>(reads) / n - rw) <= 3.0 * std::sqrt(rw * (1 - rw) / n));
    }
}

TEST_CASE("zipfian probabilities are non-increasing in rank")
{
    for (const double theta : {0.5, 0.99, 1.5}) {
        WorkloadSpec spec;
        spec.zipf_theta = theta;
        const auto p = WorkloadStream(spec).key_probabilities();
        REQUIRE(p.size() == spec.key_count);
        for (std::size_t i = 1; i < p.size(); ++i) {
            CHECK(p[i] <= p[i - 1]);
        }
    }
    WorkloadSpec uniform;
    uniform.key_distribution = KeyDistribution::Uniform;
    uniform.key_count = 4;
    CHECK(WorkloadStream(uniform).key_probabilities() == std::vector<double>(4, 0.25));
}

TEST_CASE("window message totals match the per-operation counts")
{
    ClusterConfig config;
    WorkloadSpec spec;
    spec.thread_count = 6;
    Cluster cluster(config);
    WorkloadStream stream(spec);
    std::uint64_t sum = 0;
    for (const auto level : {ConsistencyLevel{ReadLevel::One, WriteLevel::Any},
                             ConsistencyLevel{ReadLevel::All, WriteLevel::Quorum}}) {
        for (const auto& r : cluster.run_window(stream, fixed_level(level), 1'000'000)) {
            sum += static_cast<std::uint64_t>(r.messages);
        }
        CHECK(cluster.total_messages() == sum);
    }
}

TEST_CASE("mean latency per kind grows with the acknowledgment level")
{
    ClusterConfig config;
    config.seed = 13;
    config.latency.replica_scales = {1, 1, 3, 5, 8};
    WorkloadSpec spec;
    spec.read_proportion = 0.5;
    auto mean_latency = [&](ConsistencyLevel level, OpKind kind) {
        Cluster cluster(config);
        WorkloadStream stream(spec);
        double sum = 0;
        int n = 0;
        for (const auto& r : cluster.run_window(stream, fixed_level(level), 20'000'000)) {
            if (r.kind == kind) {
                sum += static_cast<double>(r.latency_us());
                ++n;
            }
        }
        REQUIRE(n > 0);
        return sum / n;
    };
    const double r_one = mean_latency({ReadLevel::One, WriteLevel::One}, OpKind::Read);
    const double r_quorum = mean_latency({ReadLevel::Quorum, WriteLevel::One}, OpKind::Read);
    const double r_all = mean_latency({ReadLevel::All, WriteLevel::One}, OpKind::Read);
    CHECK(r_all >= r_quorum);
    CHECK(r_quorum >= r_one);
    const double w_one = mean_latency({ReadLevel::One, WriteLevel::One}, OpKind::Write);
    const double w_quorum = mean_latency({ReadLevel::One, WriteLevel::Quorum}, OpKind::Write);
    const double w_all = mean_latency({ReadLevel::One, WriteLevel::All}, OpKind::Write);
    CHECK(w_all >= w_quorum);
    CHECK(w_quorum >= w_one);
}

TEST_CASE("identical seeds serialize to identical traces")
{
    ClusterConfig config;
    config.seed = 77;
    config.clock_skew_bound_us = 500;
    WorkloadSpec spec;
    spec.seed = 78;
    auto serialized = [&] {
        Cluster cluster(config);
        WorkloadStream stream(spec);
        std::ostringstream out;
        write_trace(out, cluster.run_window(stream, fixed_level({ReadLevel::Quorum, WriteLevel::Any}), 1'000'000));
        return out.str();
    };
    CHECK(serialized() == serialized());
}
