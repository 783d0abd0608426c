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

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "qtune/consistency.hpp"
#include "qtune/sla.hpp"
#include "qtune/trace_log.hpp"

namespace qtune {

/// Prediction target: one of the 12 levels, or INFEASIBLE when no level
/// meets the subSLA.
class Label {
public:
    static constexpr int kClassCount = kLevelCount + 1;
    static constexpr int kInfeasibleIndex = kLevelCount;

    constexpr Label() = default;
    static constexpr Label infeasible() { return Label(kInfeasibleIndex); }
    static Label of(ConsistencyLevel level) { return Label(level.index()); }
    static Label from_index(int index);

    [[nodiscard]] constexpr int index() const { return index_; }
    [[nodiscard]] constexpr bool feasible() const { return index_ != kInfeasibleIndex; }
    /// Throws std::logic_error for INFEASIBLE.
    [[nodiscard]] ConsistencyLevel level() const;

    friend constexpr bool operator==(Label, Label) = default;
    friend constexpr auto operator<=>(Label, Label) = default;

private:
    constexpr explicit Label(int index) : index_(index) {}
    int index_ = kInfeasibleIndex;
};

std::string to_string(Label label);
Label parse_label(const std::string& text);

inline constexpr int kFeatureCount = 3;
enum class Feature : int { Rw = 0, Tc = 1, P = 2 };
using Features = std::array<double, kFeatureCount>;

std::string_view feature_name(int feature);
Features features_of(const TrainingRow& row);

struct LabelledRow {
    Features features{};
    Label label;
};

/// How rows are grouped into feature cells before labelling.
struct CellConfig {
    double rw_step = 0.05;
    /// 0 groups on (rw, tc) only; k > 0 also splits on k quantile buckets of P.
    int p_buckets = 0;
};

struct CellKey {
    long rw_bucket = 0;
    int tc = 0;
    int p_bucket = 0;
    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct LevelStats {
    int rows = 0;
    int satisfying = 0;
    double mean_t_ops = 0.0;
};

struct CellLabel {
    std::array<LevelStats, kLevelCount> levels{};
    Label label;
};

/// Cell assignment for a corpus; the P bucket edges are corpus quantiles.
class CellIndex {
public:
    CellIndex(const std::vector<TrainingRow>& rows, CellConfig config);
    [[nodiscard]] CellKey key_of(const TrainingRow& row) const;
    [[nodiscard]] const CellConfig& config() const { return config_; }

private:
    CellConfig config_;
    std::vector<double> p_edges_;
};

/// A level is a candidate in a cell when every one of its rows there meets
/// the subSLA. The cell label is the candidate with the highest mean
/// throughput, ties going to the weaker level; no candidate gives INFEASIBLE.
std::map<CellKey, CellLabel> label_cells(const std::vector<TrainingRow>& rows, const SubSLA& sla,
                                         const CellConfig& config = {});

/// Every row inherits its cell's label. Throws on empty input.
std::vector<LabelledRow> label_dataset(const std::vector<TrainingRow>& rows, const SubSLA& sla,
                                       const CellConfig& config = {});

} // namespace qtune
