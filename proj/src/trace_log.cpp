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
#include "qtune/trace_log.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "qtune/gamma.hpp"

namespace qtune {

TrainingRow observe(const Trace& trace, const WorkloadSpec& spec, ConsistencyLevel level,
                    std::int64_t window_us, double percentile, const Trace& prior_writes)
{
    if (trace.empty()) {
        throw std::invalid_argument("cannot observe an empty trace");
    }
    if (window_us <= 0) {
        throw std::invalid_argument("window must be positive");
    }
    TrainingRow row;
    row.rw = spec.read_proportion;
    row.tc = spec.thread_count;
    row.c = level;

    double latency_sum_us = 0.0;
    for (const auto& r : trace) {
        latency_sum_us += static_cast<double>(r.latency_us());
        row.p += static_cast<std::uint64_t>(r.messages);
    }
    row.l_ms = latency_sum_us / static_cast<double>(trace.size()) / 1000.0;
    row.t_ops = static_cast<double>(trace.size()) / (static_cast<double>(window_us) / 1e6);

    auto intervals = to_intervals(trace);
    if (!prior_writes.empty()) {
        std::unordered_set<std::string> active;
        for (const auto& r : trace) {
            active.insert(r.key);
        }
        Trace context;
        for (const auto& r : prior_writes) {
            if (r.kind == OpKind::Write && active.count(r.key) != 0) {
                context.push_back(r);
            }
        }
        const auto extra = to_intervals(context);
        intervals.insert(intervals.end(), extra.begin(), extra.end());
    }
    row.s_ms = gamma_score(intervals, percentile).score_ms();
    return row;
}

TrainingRow round_to_file_precision(TrainingRow row)
{
    auto round6 = [](double v) { return std::round(v * 1e6) / 1e6; };
    row.rw = round6(row.rw);
    row.l_ms = round6(row.l_ms);
    row.s_ms = round6(row.s_ms);
    row.t_ops = round6(row.t_ops);
    return row;
}

void write_dataset(std::ostream& out, const std::vector<TrainingRow>& rows)
{
    if (rows.empty()) {
        throw std::invalid_argument("refusing to write an empty dataset");
    }
    out << kDatasetHeader << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{:.6f},{},{},{},{:.6f},{:.6f},{:.6f}\n", r.rw, r.tc, r.p,
                           to_string(r.c), r.l_ms, r.s_ms, r.t_ops);
    }
}

void write_dataset(const std::vector<TrainingRow>& rows, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write dataset " + path.string());
    }
    write_dataset(out, rows);
    if (!out) {
        throw std::runtime_error("failed writing dataset " + path.string());
    }
}

namespace {

double parse_real(const std::string& s)
{
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) {
        throw std::invalid_argument("bad number '" + s + "'");
    }
    return v;
}

} // namespace

std::vector<TrainingRow> load_dataset(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("dataset: empty file, expected header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kDatasetHeader) {
        throw std::runtime_error("dataset: line 1: unexpected header '" + line + "'");
    }
    std::vector<TrainingRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        try {
            std::vector<std::string> f;
            std::istringstream fields(line);
            std::string item;
            while (std::getline(fields, item, ',')) {
                f.push_back(item);
            }
            if (f.size() != 7) {
                throw std::invalid_argument("expected 7 fields, got " + std::to_string(f.size()));
            }
            TrainingRow r;
            r.rw = parse_real(f[0]);
            std::size_t used = 0;
            r.tc = std::stoi(f[1], &used);
            if (used != f[1].size()) {
                throw std::invalid_argument("bad thread count '" + f[1] + "'");
            }
            r.p = std::stoull(f[2], &used);
            if (used != f[2].size()) {
                throw std::invalid_argument("bad packet count '" + f[2] + "'");
            }
            r.c = parse_level(f[3]);
            r.l_ms = parse_real(f[4]);
            r.s_ms = parse_real(f[5]);
            r.t_ops = parse_real(f[6]);
            if (r.rw < 0.0 || r.rw > 1.0 || r.tc < 1 || r.l_ms < 0.0 || r.s_ms < 0.0 ||
                r.t_ops < 0.0) {
                throw std::invalid_argument("field out of range");
            }
            rows.push_back(r);
        } catch (const std::exception& e) {
            throw std::runtime_error("dataset: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<TrainingRow> load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open dataset " + path.string());
    }
    return load_dataset(in);
}

} // namespace qtune
