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
#include "qtune/workload.hpp"

#include <cmath>
#include <stdexcept>

namespace qtune {

std::string_view to_string(OpKind kind) { return kind == OpKind::Read ? "read" : "write"; }

OpKind parse_op_kind(std::string_view text)
{
    if (text == "read") {
        return OpKind::Read;
    }
    if (text == "write") {
        return OpKind::Write;
    }
    throw std::invalid_argument("unknown operation kind '" + std::string(text) + "'");
}

void WorkloadSpec::validate() const
{
    if (!(read_proportion >= 0.0 && read_proportion <= 1.0)) {
        throw std::invalid_argument("read_proportion must lie in [0,1]");
    }
    if (thread_count < 1) {
        throw std::invalid_argument("thread_count must be positive");
    }
    if (key_count == 0) {
        throw std::invalid_argument("key_count must be positive");
    }
    if (key_distribution == KeyDistribution::Zipfian && !(zipf_theta > 0.0)) {
        throw std::invalid_argument("zipfian theta must be positive");
    }
    if (ops_per_thread_per_window == 0) {
        throw std::invalid_argument("ops_per_thread_per_window must be positive");
    }
}

WorkloadSpec WorkloadSpec::from_config(const KeyValueConfig& config)
{
    WorkloadSpec spec;
    spec.read_proportion = config.get_double("read_proportion", spec.read_proportion);
    spec.thread_count = static_cast<int>(config.get_int("thread_count", spec.thread_count));
    spec.key_count = static_cast<std::uint32_t>(config.get_uint("key_count", spec.key_count));
    const auto dist = config.get_string("key_distribution", "zipfian");
    if (dist == "uniform") {
        spec.key_distribution = KeyDistribution::Uniform;
    } else if (dist == "zipfian") {
        spec.key_distribution = KeyDistribution::Zipfian;
    } else {
        throw std::invalid_argument("key_distribution must be uniform or zipfian");
    }
    spec.zipf_theta = config.get_double("zipf_theta", spec.zipf_theta);
    spec.ops_per_thread_per_window =
        config.get_uint("ops_per_thread_per_window", spec.ops_per_thread_per_window);
    spec.seed = config.get_uint("seed", spec.seed);
    spec.validate();
    return spec;
}

std::string key_name(std::uint32_t key) { return "user" + std::to_string(key); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

WorkloadStream::WorkloadStream(WorkloadSpec spec) : spec_(std::move(spec))
{
    spec_.validate();
    sessions_.reserve(static_cast<std::size_t>(spec_.thread_count));
    for (int s = 0; s < spec_.thread_count; ++s) {
        sessions_.push_back(Session{std::mt19937_64(mix_seed(spec_.seed, static_cast<std::uint64_t>(s))), 0});
    }
    if (spec_.key_distribution == KeyDistribution::Zipfian) {
        std::vector<double> weights(spec_.key_count);
        for (std::uint32_t rank = 0; rank < spec_.key_count; ++rank) {
            weights[rank] = 1.0 / std::pow(static_cast<double>(rank + 1), spec_.zipf_theta);
        }
        zipf_ = std::discrete_distribution<std::uint32_t>(weights.begin(), weights.end());
    }
}

std::vector<double> WorkloadStream::key_probabilities() const
{
    if (spec_.key_distribution == KeyDistribution::Zipfian) {
        return zipf_.probabilities();
    }
    return std::vector<double>(spec_.key_count, 1.0 / spec_.key_count);
}

bool WorkloadStream::next(int session, WorkloadOp& out)
{
    auto& s = sessions_.at(static_cast<std::size_t>(session));
    if (s.issued >= spec_.ops_per_thread_per_window) {
        return false;
    }
    ++s.issued;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    out.session = session;
    out.kind = coin(s.rng) < spec_.read_proportion ? OpKind::Read : OpKind::Write;
    if (spec_.key_distribution == KeyDistribution::Zipfian) {
        out.key = zipf_(s.rng);
    } else {
        out.key = std::uniform_int_distribution<std::uint32_t>(0, spec_.key_count - 1)(s.rng);
    }
    out.issue_time_us = session_start_offset(session);
    return true;
}

std::vector<WorkloadOp> generate(const WorkloadSpec& spec)
{
    WorkloadStream stream(spec);
    std::vector<WorkloadOp> ops;
    ops.reserve(static_cast<std::size_t>(spec.thread_count) * spec.ops_per_thread_per_window);
    WorkloadOp op;
    for (int s = 0; s < spec.thread_count; ++s) {
        while (stream.next(s, op)) {
            ops.push_back(op);
        }
    }
    return ops;
}

std::vector<WorkloadSpec> sweep_read_proportion(const WorkloadSpec& base,
                                                const std::vector<double>& values)
{
    std::vector<WorkloadSpec> out;
    out.reserve(values.size());
    for (const double rw : values) {
        if (!(rw >= 0.0 && rw <= 1.0)) {
            throw std::invalid_argument("read proportion must lie in [0,1]");
        }
        auto spec = base;
        spec.read_proportion = rw;
        out.push_back(spec);
    }
    return out;
}

} // namespace qtune
