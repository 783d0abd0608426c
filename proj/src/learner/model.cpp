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
#include "qtune/learner/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qtune {

std::string_view to_string(LearnerKind kind)
{
    switch (kind) {
    case LearnerKind::Tree:
        return "tree";
    case LearnerKind::Forest:
        return "forest";
    case LearnerKind::Logistic:
        return "logistic";
    }
    return "?";
}

LearnerKind parse_learner(std::string_view text)
{
    if (text == "tree") {
        return LearnerKind::Tree;
    }
    if (text == "forest") {
        return LearnerKind::Forest;
    }
    if (text == "logistic") {
        return LearnerKind::Logistic;
    }
    throw std::invalid_argument("unknown learner '" + std::string(text) + "'");
}

LearnerKind Predictor::kind() const
{
    return static_cast<LearnerKind>(model_.index());
}

bool Predictor::trained() const
{
    return std::visit([](const auto& m) { return m.trained(); }, model_);
}

Label Predictor::predict(const Features& features) const
{
    return std::visit([&](const auto& m) { return m.predict(features); }, model_);
}

Label Predictor::predict(const Features& features, const SubSLA& sla) const
{
    if (!trained()) {
        throw std::logic_error("model is not trained");
    }
    if (std::abs(sla.latency_threshold_ms - sla_.latency_threshold_ms) > 1e-9 ||
        std::abs(sla.staleness_threshold_ms - sla_.staleness_threshold_ms) > 1e-9) {
        throw std::invalid_argument("model was trained for subSLA " + to_string(sla_) +
                                    ", asked about " + to_string(sla));
    }
    return predict(features);
}

Predictor train_labelled(LearnerKind kind, std::span<const LabelledRow> rows, const SubSLA& sla,
                         const LearnerOptions& options)
{
    switch (kind) {
    case LearnerKind::Tree:
        return Predictor(train_tree(rows, options.tree), sla);
    case LearnerKind::Forest:
        return Predictor(train_forest(rows, options.forest), sla);
    case LearnerKind::Logistic:
        break;
    }
    throw std::invalid_argument("logistic regression trains on raw rows, not labels");
}

Predictor train_predictor(LearnerKind kind, const std::vector<TrainingRow>& rows,
                          const SubSLA& sla, const LearnerOptions& options)
{
    if (kind == LearnerKind::Logistic) {
        return Predictor(fit_logistic(rows, sla, options.logistic), sla);
    }
    const auto labelled = label_dataset(rows, sla, options.cells);
    return train_labelled(kind, labelled, sla, options);
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

void check_folds(std::size_t rows, int folds)
{
    if (folds < 2) {
        throw std::invalid_argument("cross validation needs at least 2 folds");
    }
    if (rows < static_cast<std::size_t>(folds)) {
        throw std::invalid_argument("fewer rows than folds");
    }
}

template <typename TrainAndScore>
CvResult run_folds(std::size_t n, int folds, std::uint64_t seed, TrainAndScore&& fold_error)
{
    const auto order = shuffled_indices(n, seed);
    CvResult result;
    for (int f = 0; f < folds; ++f) {
        const auto lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(folds);
        const auto hi = n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(folds);
        std::vector<std::size_t> train;
        std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                      order.begin() + static_cast<std::ptrdiff_t>(hi));
        train.reserve(n - test.size());
        train.insert(train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lo));
        train.insert(train.end(), order.begin() + static_cast<std::ptrdiff_t>(hi), order.end());
        result.fold_errors.push_back(fold_error(train, test));
        ++result.rounds;
    }
    result.error = std::accumulate(result.fold_errors.begin(), result.fold_errors.end(), 0.0) /
                   static_cast<double>(folds);
    return result;
}

} // namespace

CvResult cross_validate(std::span<const LabelledRow> rows, int folds, LearnerKind kind,
                        const LearnerOptions& options)
{
    check_folds(rows.size(), folds);
    return run_folds(rows.size(), folds, options.tree.shuffle_seed,
                     [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
                         std::vector<LabelledRow> fit;
                         fit.reserve(train.size());
                         for (const auto i : train) {
                             fit.push_back(rows[i]);
                         }
                         const auto model = train_labelled(kind, fit, SubSLA{}, options);
                         int wrong = 0;
                         for (const auto i : test) {
                             wrong += model.predict(rows[i].features) != rows[i].label ? 1 : 0;
                         }
                         return static_cast<double>(wrong) / static_cast<double>(test.size());
                     });
}

CvResult cross_validate(const std::vector<TrainingRow>& rows, const SubSLA& sla, int folds,
                        LearnerKind kind, const LearnerOptions& options)
{
    check_folds(rows.size(), folds);
    const auto labelled = label_dataset(rows, sla, options.cells);
    if (kind != LearnerKind::Logistic) {
        return cross_validate(std::span<const LabelledRow>(labelled), folds, kind, options);
    }
    return run_folds(rows.size(), folds, options.tree.shuffle_seed,
                     [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
                         std::vector<TrainingRow> fit;
                         fit.reserve(train.size());
                         for (const auto i : train) {
                             fit.push_back(rows[i]);
                         }
                         const auto model = fit_logistic(fit, sla, options.logistic);
                         int wrong = 0;
                         for (const auto i : test) {
                             wrong += model.predict(labelled[i].features) != labelled[i].label ? 1 : 0;
                         }
                         return static_cast<double>(wrong) / static_cast<double>(test.size());
                     });
}

OverheadStats measure_overhead(const Predictor& predictor, const std::vector<Features>& queries,
                               int predictions)
{
    if (queries.empty() || predictions < 1) {
        throw std::invalid_argument("overhead measurement needs queries and a positive count");
    }
    using clock = std::chrono::steady_clock;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(predictions));
    int sink = 0;
    for (int i = 0; i < predictions; ++i) {
        const auto& q = queries[static_cast<std::size_t>(i) % queries.size()];
        const auto t0 = clock::now();
        sink += predictor.predict(q, predictor.sla()).index();
        const auto t1 = clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    OverheadStats stats;
    stats.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / predictions;
    double sq = 0.0;
    for (const double s : samples) {
        sq += (s - stats.mean_ms) * (s - stats.mean_ms);
    }
    stats.variance = sq / predictions;
    stats.stddev = std::sqrt(stats.variance);
    if (sink < 0) {
        throw std::logic_error("unreachable");
    }
    return stats;
}

namespace {

const TreeNode& leaf_for(const TreeModel& tree, const Features& x)
{
    const TreeNode* node = &tree.nodes.front();
    while (!node->is_leaf()) {
        node = &tree.nodes[static_cast<std::size_t>(
            x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
    }
    return *node;
}

double leaf_probability(const TreeNode& leaf, Label label)
{
    const int total = std::accumulate(leaf.counts.begin(), leaf.counts.end(), 0);
    return (leaf.counts[static_cast<std::size_t>(label.index())] + 1.0) /
           (total + static_cast<double>(Label::kClassCount));
}

} // namespace

std::pair<int, double> model_likelihood(const Predictor& predictor,
                                        const std::vector<TrainingRow>& rows,
                                        std::span<const LabelledRow> labelled)
{
    if (const auto* tree = std::get_if<TreeModel>(&predictor.model())) {
        double ll = 0.0;
        for (const auto& r : labelled) {
            ll += std::log(leaf_probability(leaf_for(*tree, r.features), r.label));
        }
        return {tree->leaf_count(), ll};
    }
    if (const auto* forest = std::get_if<ForestModel>(&predictor.model())) {
        double ll = 0.0;
        int k = 0;
        for (const auto& t : forest->trees) {
            k += t.leaf_count();
        }
        for (const auto& r : labelled) {
            double p = 0.0;
            for (const auto& t : forest->trees) {
                p += leaf_probability(leaf_for(t, r.features), r.label);
            }
            ll += std::log(p / static_cast<double>(forest->trees.size()));
        }
        return {k, ll};
    }
    const auto& logistic = std::get<LogisticModel>(predictor.model());
    (void)rows;
    return {logistic.latency.nonzero_coefficients() + logistic.staleness.nonzero_coefficients(),
            logistic.latency.log_likelihood + logistic.staleness.log_likelihood};
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kMagic = "qtune-model 1";

void save_tree(std::ostream& out, const TreeModel& tree)
{
    out << "tree " << tree.nodes.size() << '\n';
    for (const auto& n : tree.nodes) {
        if (n.is_leaf()) {
            out << "leaf," << to_string(n.label) << '\n';
        } else {
            out << fmt::format("split,{},{:.17g},{},{}\n", feature_name(n.feature), n.threshold,
                               n.left, n.right);
        }
    }
}

void save_logit(std::ostream& out, const std::string& name, const LogitFit& fit)
{
    out << fmt::format("logit {} {} {:.17g}\n", name, fit.iterations, fit.log_likelihood);
    out << "mean";
    for (const double v : fit.mean) {
        out << fmt::format(" {:.17g}", v);
    }
    out << "\nscale";
    for (const double v : fit.scale) {
        out << fmt::format(" {:.17g}", v);
    }
    out << "\nbeta";
    for (const double v : fit.beta) {
        out << fmt::format(" {:.17g}", v);
    }
    out << '\n';
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string line()
    {
        std::string l;
        do {
            if (!std::getline(in_, l)) {
                throw std::runtime_error("model: unexpected end of file after line " +
                                         std::to_string(line_no_));
            }
            ++line_no_;
            if (!l.empty() && l.back() == '\r') {
                l.pop_back();
            }
        } while (l.empty());
        return l;
    }

    std::istringstream expect(const std::string& word)
    {
        std::istringstream s(line());
        std::string head;
        s >> head;
        if (head != word) {
            fail("expected '" + word + "'");
        }
        return s;
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw std::runtime_error("model: line " + std::to_string(line_no_) + ": " + what);
    }

private:
    std::istream& in_;
    int line_no_ = 0;
};

int parse_feature(const std::string& name, Reader& reader)
{
    for (int f = 0; f < kFeatureCount; ++f) {
        if (feature_name(f) == name) {
            return f;
        }
    }
    reader.fail("unknown feature '" + name + "'");
}

TreeModel load_tree(Reader& reader)
{
    std::size_t count = 0;
    if (!(reader.expect("tree") >> count) || count == 0) {
        reader.fail("bad node count");
    }
    TreeModel tree;
    tree.nodes.resize(count);
    for (auto& node : tree.nodes) {
        std::vector<std::string> f;
        std::istringstream s(reader.line());
        std::string item;
        while (std::getline(s, item, ',')) {
            f.push_back(item);
        }
        try {
            if (f.size() == 2 && f[0] == "leaf") {
                node.label = parse_label(f[1]);
            } else if (f.size() == 5 && f[0] == "split") {
                node.feature = parse_feature(f[1], reader);
                node.threshold = std::stod(f[2]);
                node.left = std::stoi(f[3]);
                node.right = std::stoi(f[4]);
                if (node.left < 0 || node.right < 0 || static_cast<std::size_t>(node.left) >= count ||
                    static_cast<std::size_t>(node.right) >= count) {
                    reader.fail("child index out of range");
                }
            } else {
                reader.fail("expected 'leaf,LABEL' or 'split,FEATURE,THRESHOLD,LEFT,RIGHT'");
            }
        } catch (const std::invalid_argument& e) {
            reader.fail(e.what());
        }
    }
    return tree;
}

LogitFit load_logit(Reader& reader, const std::string& name)
{
    LogitFit fit;
    auto head = reader.expect("logit");
    std::string got;
    if (!(head >> got >> fit.iterations >> fit.log_likelihood) || got != name) {
        reader.fail("expected logit " + name);
    }
    auto read_array = [&](const std::string& word, auto& arr) {
        auto s = reader.expect(word);
        for (auto& v : arr) {
            if (!(s >> v)) {
                reader.fail("short '" + word + "' row");
            }
        }
    };
    read_array("mean", fit.mean);
    read_array("scale", fit.scale);
    read_array("beta", fit.beta);
    return fit;
}

} // namespace

void save_model(std::ostream& out, const Predictor& predictor)
{
    if (!predictor.trained()) {
        throw std::logic_error("cannot save an untrained model");
    }
    out << kMagic << '\n';
    out << "learner " << to_string(predictor.kind()) << '\n';
    out << fmt::format("sla {:.17g} {:.17g}\n", predictor.sla().latency_threshold_ms,
                       predictor.sla().staleness_threshold_ms);
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, TreeModel>) {
                save_tree(out, m);
            } else if constexpr (std::is_same_v<M, ForestModel>) {
                out << "forest " << m.trees.size() << '\n';
                for (const auto& t : m.trees) {
                    save_tree(out, t);
                }
            } else {
                out << fmt::format("logistic {:.17g} {:.17g}\n", m.cut, m.rw_step);
                save_logit(out, "latency", m.latency);
                save_logit(out, "staleness", m.staleness);
                out << "level_throughput";
                for (const double t : m.level_throughput) {
                    out << fmt::format(" {:.17g}", t);
                }
                out << "\ncells " << m.cell_throughput.size() << '\n';
                for (const auto& [key, t] : m.cell_throughput) {
                    out << fmt::format("cell {} {} {} {:.17g}\n", std::get<0>(key),
                                       std::get<1>(key), std::get<2>(key), t);
                }
            }
        },
        predictor.model());
}

Predictor load_model(std::istream& in)
{
    Reader reader(in);
    if (reader.line() != kMagic) {
        reader.fail("not an qtune model file");
    }
    std::string kind_text;
    if (!(reader.expect("learner") >> kind_text)) {
        reader.fail("missing learner kind");
    }
    const auto kind = parse_learner(kind_text);
    SubSLA sla;
    if (!(reader.expect("sla") >> sla.latency_threshold_ms >> sla.staleness_threshold_ms)) {
        reader.fail("bad sla row");
    }

    switch (kind) {
    case LearnerKind::Tree:
        return Predictor(load_tree(reader), sla);
    case LearnerKind::Forest: {
        std::size_t count = 0;
        if (!(reader.expect("forest") >> count) || count == 0) {
            reader.fail("bad tree count");
        }
        ForestModel forest;
        for (std::size_t t = 0; t < count; ++t) {
            forest.trees.push_back(load_tree(reader));
        }
        return Predictor(std::move(forest), sla);
    }
    case LearnerKind::Logistic: {
        LogisticModel m;
        if (!(reader.expect("logistic") >> m.cut >> m.rw_step)) {
            reader.fail("bad logistic header");
        }
        m.latency = load_logit(reader, "latency");
        m.staleness = load_logit(reader, "staleness");
        auto lt = reader.expect("level_throughput");
        for (auto& t : m.level_throughput) {
            if (!(lt >> t)) {
                reader.fail("short level_throughput row");
            }
        }
        std::size_t cells = 0;
        if (!(reader.expect("cells") >> cells)) {
            reader.fail("bad cell count");
        }
        for (std::size_t i = 0; i < cells; ++i) {
            long rw = 0;
            int tc = 0;
            int level = 0;
            double t = 0.0;
            if (!(reader.expect("cell") >> rw >> tc >> level >> t)) {
                reader.fail("bad cell row");
            }
            m.cell_throughput[std::make_tuple(rw, tc, level)] = t;
        }
        m.fitted = true;
        return Predictor(std::move(m), sla);
    }
    }
    reader.fail("unknown learner");
}

} // namespace qtune
