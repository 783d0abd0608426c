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
#include "qtune/learner/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace qtune {

double aicc(int k, double n, double log_likelihood)
{
    if (!(n > k + 1)) {
        throw std::domain_error("AICC needs n > k + 1");
    }
    return 2.0 * k - 2.0 * log_likelihood + 2.0 * k * (k + 1) / (n - k - 1);
}

double bic(int k, double sample_size, double log_likelihood, BicForm form)
{
    if (!(sample_size >= 1.0)) {
        throw std::domain_error("BIC needs a sample size of at least 1");
    }
    const double penalty = (form == BicForm::DoublePenalty ? 2.0 : 1.0) * k * std::log(sample_size);
    return penalty - 2.0 * log_likelihood;
}

void PerfConfig::validate() const
{
    if (!(o_base > 0.0) || !(e_base > 0.0)) {
        throw std::invalid_argument("Perf baselines must be positive");
    }
    if (w_speedup < 0.0 || w_speedup > 1.0 || w_accuracy < 0.0 || w_accuracy > 1.0 ||
        std::abs(w_speedup + w_accuracy - 1.0) > 1e-9) {
        throw std::invalid_argument("Perf weights must lie in [0,1] and sum to 1");
    }
}

double perf(double overhead_ms, double error, const PerfConfig& config)
{
    config.validate();
    const double speedup = (config.o_base - overhead_ms) / config.o_base;
    const double accuracy = (config.e_base - error) / config.e_base;
    return config.w_speedup * speedup + config.w_accuracy * accuracy;
}

} // namespace qtune
