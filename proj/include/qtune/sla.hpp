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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace qtune {

/// One SLA row. Both thresholds are inclusive upper bounds.
struct SubSLA {
    double latency_threshold_ms = 0.0;
    double staleness_threshold_ms = 0.0;

    friend bool operator==(const SubSLA&, const SubSLA&) = default;
};

/// Rows in the order given; they need not be sorted by strictness.
using SLA = std::vector<SubSLA>;

struct Outcome {
    double l_ms = 0.0;
    double s_ms = 0.0;
};

bool satisfies(const SubSLA& sla, double l_ms, double s_ms);

/// Percentage of outcomes meeting the subSLA. Throws on an empty list.
double m_statistic(const std::vector<Outcome>& outcomes, const SubSLA& sla);

/// Parses "latency_ms staleness_ms".
SubSLA parse_subsla(const std::string& text);

/// One subSLA per non-blank line. Errors name the line number.
SLA parse_sla(std::istream& in);
SLA parse_sla(const std::filesystem::path& path);

std::string to_string(const SubSLA& sla);

} // namespace qtune
