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

namespace qtune {

/// Corrected Akaike criterion: 2k - 2 lnL + 2k(k+1)/(n-k-1).
/// Throws std::domain_error unless n > k + 1.
double aicc(int k, double n, double log_likelihood);

enum class BicForm {
    /// 2k ln N - 2 lnL
    DoublePenalty,
    /// k ln N - 2 lnL, the textbook form
    Standard,
};

/// Throws std::domain_error for N < 1.
double bic(int k, double sample_size, double log_likelihood,
           BicForm form = BicForm::DoublePenalty);

struct PerfConfig {
    double o_base = 1.5;   // ms, overhead of the slowest learner
    double e_base = 1.98;  // error of the least accurate learner
    double w_speedup = 0.5;
    double w_accuracy = 0.5;

    void validate() const;
};

/// w_speedup * (o_base - overhead)/o_base + w_accuracy * (e_base - error)/e_base.
/// Not clamped: a learner slower or worse than the baseline scores negative.
double perf(double overhead_ms, double error, const PerfConfig& config);

struct ModelScore {
    double cv_error = 0.0;
    double aicc = 0.0;
    double bic = 0.0;
    int k = 0;
    double n = 0.0;
    double log_likelihood = 0.0;
    double overhead_ms = 0.0;
    double overhead_variance = 0.0;
};

} // namespace qtune
