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
#include "qtune/learner/labelling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qtune {

Label Label::from_index(int index)
{
    if (index < 0 || index >= kClassCount) {
        throw std::out_of_range("label index out of range");
    }
    return Label(index);
}

ConsistencyLevel Label::level() const
{
    if (!feasible()) {
        throw std::logic_error("INFEASIBLE label has no consistency level");
    }
    return ConsistencyLevel::from_index(index_);
}

std::string to_string(Label label)
{
    return label.feasible() ? to_string(label.level()) : std::string("INFEASIBLE");
}

Label parse_label(const std::string& text)
{
    if (text == "INFEASIBLE") {
        return Label::infeasible();
    }
    return Label::of(parse_level(text));
}

std::string_view feature_name(int feature)
{
    switch (feature) {
    case 0:
        return "rw";
    case 1:
        return "tc";
    case 2:
        return "p";
    default:
        throw std::out_of_range("feature index out of range");
    }
}

Features features_of(const TrainingRow& row)
{
    return {row.rw, static_cast<double>(row.tc), static_cast<double>(row.p)};
}

CellIndex::CellIndex(const std::vector<TrainingRow>& rows, CellConfig config)
    : config_(config)
{
    if (!(config_.rw_step > 0.0)) {
        throw std::invalid_argument("rw_step must be positive");
    }
    if (config_.p_buckets > 0 && !rows.empty()) {
        std::vector<std::uint64_t> ps;
        ps.reserve(rows.size());
        for (const auto& r : rows) {
            ps.push_back(r.p);
        }
        std::sort(ps.begin(), ps.end());
        for (int b = 1; b < config_.p_buckets; ++b) {
            const auto at = ps.size() * static_cast<std::size_t>(b) /
                            static_cast<std::size_t>(config_.p_buckets);
            p_edges_.push_back(static_cast<double>(ps[std::min(at, ps.size() - 1)]));
        }
    }
}

CellKey CellIndex::key_of(const TrainingRow& row) const
{
    CellKey key;
    key.rw_bucket = std::lround(row.rw / config_.rw_step);
    key.tc = row.tc;
    if (!p_edges_.empty()) {
        const auto p = static_cast<double>(row.p);
        key.p_bucket = static_cast<int>(std::upper_bound(p_edges_.begin(), p_edges_.end(), p) -
                                        p_edges_.begin());
    }
    return key;
}

std::map<CellKey, CellLabel> label_cells(const std::vector<TrainingRow>& rows, const SubSLA& sla,
                                         const CellConfig& config)
{
    if (rows.empty()) {
        throw std::invalid_argument("cannot label an empty dataset");
    }
    const CellIndex index(rows, config);
    std::map<CellKey, CellLabel> cells;
    for (const auto& row : rows) {
        auto& stats = cells[index.key_of(row)].levels[static_cast<std::size_t>(row.c.index())];
        ++stats.rows;
        if (satisfies(sla, row.l_ms, row.s_ms)) {
            ++stats.satisfying;
        }
        stats.mean_t_ops += row.t_ops;
    }
    for (auto& [key, cell] : cells) {
        int best = -1;
        for (int level = 0; level < kLevelCount; ++level) {
            auto& stats = cell.levels[static_cast<std::size_t>(level)];
            if (stats.rows == 0) {
                continue;
            }
            stats.mean_t_ops /= stats.rows;
            if (stats.satisfying != stats.rows) {
                continue;
            }
            // Strict comparison keeps the weaker level on equal throughput.
            if (best < 0 ||
                stats.mean_t_ops > cell.levels[static_cast<std::size_t>(best)].mean_t_ops) {
                best = level;
            }
        }
        cell.label = best < 0 ? Label::infeasible() : Label::from_index(best);
    }
    return cells;
}

std::vector<LabelledRow> label_dataset(const std::vector<TrainingRow>& rows, const SubSLA& sla,
                                       const CellConfig& config)
{
    const auto cells = label_cells(rows, sla, config);
    const CellIndex index(rows, config);
    std::vector<LabelledRow> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(LabelledRow{features_of(row), cells.at(index.key_of(row)).label});
    }
    return out;
}

} // namespace qtune
