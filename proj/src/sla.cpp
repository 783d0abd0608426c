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
#include "qtune/sla.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qtune {

bool satisfies(const SubSLA& sla, double l_ms, double s_ms)
{
    return l_ms <= sla.latency_threshold_ms && s_ms <= sla.staleness_threshold_ms;
}

double m_statistic(const std::vector<Outcome>& outcomes, const SubSLA& sla)
{
    if (outcomes.empty()) {
        throw std::invalid_argument("M-statistic of an empty outcome list");
    }
    std::size_t ok = 0;
    for (const auto& o : outcomes) {
        if (satisfies(sla, o.l_ms, o.s_ms)) {
            ++ok;
        }
    }
    return 100.0 * static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

SubSLA parse_subsla(const std::string& text)
{
    std::istringstream in(text);
    SubSLA sla;
    std::string extra;
    if (!(in >> sla.latency_threshold_ms >> sla.staleness_threshold_ms) || (in >> extra)) {
        throw std::invalid_argument("expected 'latency_ms staleness_ms', got '" + text + "'");
    }
    if (!std::isfinite(sla.latency_threshold_ms) || !std::isfinite(sla.staleness_threshold_ms) ||
        !(sla.latency_threshold_ms > 0.0) || sla.staleness_threshold_ms < 0.0) {
        throw std::invalid_argument("latency threshold must be > 0 and staleness >= 0");
    }
    return sla;
}

SLA parse_sla(std::istream& in)
{
    SLA sla;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            sla.push_back(parse_subsla(line));
        } catch (const std::exception& e) {
            throw std::runtime_error("sla: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (sla.empty()) {
        throw std::runtime_error("sla: no subSLA rows");
    }
    return sla;
}

SLA parse_sla(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open SLA file " + path.string());
    }
    return parse_sla(in);
}

std::string to_string(const SubSLA& sla)
{
    return fmt::format("{:g}ms/{:g}ms", sla.latency_threshold_ms, sla.staleness_threshold_ms);
}

} // namespace qtune
