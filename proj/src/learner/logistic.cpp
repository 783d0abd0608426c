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
#include "qtune/learner/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qtune {
namespace {

constexpr double kProbFloor = 1e-12;

double soft_threshold(double v, double t)
{
    if (v > t) {
        return v - t;
    }
    if (v < -t) {
        return v + t;
    }
    return 0.0;
}

double sigmoid(double x)
{
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

using Row = std::array<double, kLogitColumns>;

Row design_row(const LogitFit& fit, ConsistencyLevel level, double rw, double p, double tc)
{
    Row x{};
    x[0] = 1.0;
    if (level.index() > 0) {
        x[static_cast<std::size_t>(level.index())] = 1.0;
    }
    const std::array<double, 3> raw{rw, p, tc};
    for (std::size_t k = 0; k < 3; ++k) {
        x[static_cast<std::size_t>(kLevelCount) + k] =
            fit.scale[k] > 0.0 ? (raw[k] - fit.mean[k]) / fit.scale[k] : 0.0;
    }
    return x;
}

} // namespace

double LogitFit::linear(ConsistencyLevel level, double rw, double p, double tc) const
{
    const auto x = design_row(*this, level, rw, p, tc);
    double eta = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        eta += beta[j] * x[j];
    }
    return eta;
}

double LogitFit::probability(ConsistencyLevel level, double rw, double p, double tc) const
{
    return sigmoid(linear(level, rw, p, tc));
}

int LogitFit::nonzero_coefficients() const
{
    return static_cast<int>(std::count_if(beta.begin(), beta.end(), [](double b) { return b != 0.0; }));
}

LogitFit fit_logit(const std::vector<TrainingRow>& rows, const std::vector<int>& targets,
                   const LogisticParams& params)
{
    if (rows.empty() || rows.size() != targets.size()) {
        throw std::invalid_argument("logistic fit needs one target per non-empty row");
    }
    if (params.lambda < 0.0) {
        throw std::invalid_argument("lambda must be non-negative");
    }
    const auto n = rows.size();
    LogitFit fit;

    // Standardize the numeric inputs.
    for (std::size_t k = 0; k < 3; ++k) {
        double sum = 0.0;
        double sq = 0.0;
        for (const auto& r : rows) {
            const double v = k == 0 ? r.rw : k == 1 ? static_cast<double>(r.p) : r.tc;
            sum += v;
            sq += v * v;
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(sq / static_cast<double>(n) - mean * mean, 0.0);
        fit.mean[k] = mean;
        fit.scale[k] = var > 1e-18 * std::max(1.0, mean * mean) ? std::sqrt(var) : 0.0;
    }

    std::vector<Row> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = design_row(fit, rows[i].c, rows[i].rw, static_cast<double>(rows[i].p), rows[i].tc);
    }
    std::vector<double> y(n);
    double positives = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = targets[i] != 0 ? 1.0 : 0.0;
        positives += y[i];
    }
    const double base = std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
    fit.beta[0] = std::log(base / (1.0 - base));

    auto log_likelihood = [&](const std::array<double, kLogitColumns>& beta) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j < kLogitColumns; ++j) {
                eta += beta[j] * x[i][j];
            }
            const double prob = std::clamp(sigmoid(eta), kProbFloor, 1.0 - kProbFloor);
            ll += y[i] * std::log(prob) + (1.0 - y[i]) * std::log(1.0 - prob);
        }
        return ll;
    };
    auto objective = [&](const std::array<double, kLogitColumns>& beta) {
        double penalty = 0.0;
        for (std::size_t j = 1; j < kLogitColumns; ++j) {
            penalty += std::abs(beta[j]);
        }
        return -log_likelihood(beta) + params.lambda * penalty;
    };

    std::vector<double> w(n);
    std::vector<double> z(n);
    std::vector<double> resid(n);
    double change = 0.0;
    for (int iter = 1; iter <= params.max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j < kLogitColumns; ++j) {
                eta += fit.beta[j] * x[i][j];
            }
            const double prob = std::clamp(sigmoid(eta), kProbFloor, 1.0 - kProbFloor);
            w[i] = prob * (1.0 - prob);
            z[i] = eta + (y[i] - prob) / w[i];
            resid[i] = z[i] - eta;
        }

        const auto before = fit.beta;
        for (int pass = 0; pass < 1000; ++pass) {
            double pass_change = 0.0;
            for (std::size_t j = 0; j < kLogitColumns; ++j) {
                double num = 0.0;
                double den = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    num += w[i] * x[i][j] * (resid[i] + x[i][j] * fit.beta[j]);
                    den += w[i] * x[i][j] * x[i][j];
                }
                double updated = 0.0;
                if (den > 0.0) {
                    updated = j == 0 ? num / den : soft_threshold(num, params.lambda) / den;
                }
                const double delta = updated - fit.beta[j];
                if (delta != 0.0) {
                    for (std::size_t i = 0; i < n; ++i) {
                        resid[i] -= delta * x[i][j];
                    }
                    fit.beta[j] = updated;
                }
                pass_change = std::max(pass_change, den * delta * delta);
            }
            if (pass_change < params.tolerance * 1e-2) {
                break;
            }
        }

        // Backtrack when the quadratic model overshoots the penalized objective.
        const auto proposal = fit.beta;
        const double f_before = objective(before);
        for (double t = 1.0; t > 1e-10; t *= 0.5) {
            for (std::size_t j = 0; j < kLogitColumns; ++j) {
                fit.beta[j] = before[j] + t * (proposal[j] - before[j]);
            }
            if (objective(fit.beta) <= f_before + 1e-12 * std::abs(f_before)) {
                break;
            }
        }

        // Curvature-weighted step size, so saturated directions count as settled.
        change = 0.0;
        for (std::size_t j = 0; j < kLogitColumns; ++j) {
            double den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                den += w[i] * x[i][j] * x[i][j];
            }
            const double d = fit.beta[j] - before[j];
            change = std::max(change, den * d * d);
        }
        fit.iterations = iter;
        if (change < params.tolerance) {
            fit.log_likelihood = log_likelihood(fit.beta);
            return fit;
        }
    }
    throw std::runtime_error(fmt::format(
        "logistic regression did not converge in {} iterations (residual step {:.3g})",
        params.max_iterations, change));
}

Label LogisticModel::predict(const Features& features) const
{
    if (!fitted) {
        throw std::logic_error("logistic model is not trained");
    }
    const double rw = features[0];
    const double tc = features[1];
    const double p = features[2];
    int best = -1;
    double best_t = 0.0;
    for (int level = 0; level < kLevelCount; ++level) {
        const auto c = ConsistencyLevel::from_index(level);
        if (latency.probability(c, rw, p, tc) >= cut || staleness.probability(c, rw, p, tc) >= cut) {
            continue;
        }
        const double t = expected_throughput(features, level);
        if (best < 0 || t > best_t) {
            best = level;
            best_t = t;
        }
    }
    return best < 0 ? Label::infeasible() : Label::from_index(best);
}

double LogisticModel::expected_throughput(const Features& features, int level) const
{
    const auto key = std::make_tuple(std::lround(features[0] / rw_step),
                                     static_cast<int>(std::lround(features[1])), level);
    const auto it = cell_throughput.find(key);
    return it != cell_throughput.end() ? it->second
                                       : level_throughput[static_cast<std::size_t>(level)];
}

LogisticModel fit_logistic(const std::vector<TrainingRow>& rows, const SubSLA& sla,
                           const LogisticParams& params)
{
    if (rows.empty()) {
        throw std::invalid_argument("cannot fit a logistic model on an empty set");
    }
    std::vector<int> over_latency(rows.size());
    std::vector<int> over_staleness(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        over_latency[i] = rows[i].l_ms > sla.latency_threshold_ms ? 1 : 0;
        over_staleness[i] = rows[i].s_ms > sla.staleness_threshold_ms ? 1 : 0;
    }
    LogisticModel model;
    model.latency = fit_logit(rows, over_latency, params);
    model.staleness = fit_logit(rows, over_staleness, params);
    model.cut = params.cut;
    model.rw_step = params.rw_step;

    std::map<std::tuple<long, int, int>, std::pair<double, int>> sums;
    std::array<std::pair<double, int>, kLevelCount> level_sums{};
    for (const auto& r : rows) {
        auto& s = sums[std::make_tuple(std::lround(r.rw / params.rw_step), r.tc, r.c.index())];
        s.first += r.t_ops;
        ++s.second;
        auto& l = level_sums[static_cast<std::size_t>(r.c.index())];
        l.first += r.t_ops;
        ++l.second;
    }
    for (const auto& [key, s] : sums) {
        model.cell_throughput[key] = s.first / s.second;
    }
    for (std::size_t l = 0; l < level_sums.size(); ++l) {
        model.level_throughput[l] =
            level_sums[l].second > 0 ? level_sums[l].first / level_sums[l].second : 0.0;
    }
    model.fitted = true;
    return model;
}

} // namespace qtune
