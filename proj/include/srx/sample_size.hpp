/*
 Copyright 2026 The srx Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef SRX_SAMPLE_SIZE_HPP
#define SRX_SAMPLE_SIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "srx/errors.hpp"

namespace srx {

/**
 * Violation level, confidence and support dimension of the scenario bound.
 *
 * `beta` can be taken very small (1e-5 .. 1e-7 is typical): N grows only
 * logarithmically in 1/beta. `d` defaults to dim(lambda) + dim(h); a smaller
 * support rank may be supplied when one is known.
 */
struct ScenarioParams {
    double epsilon = 0.1;
    double beta = 1e-6;
    std::int64_t d = 1;

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) {
            throw InvalidArgument("epsilon must lie in (0, 1)");
        }
        if (!(beta > 0.0 && beta < 1.0)) {
            throw InvalidArgument("beta must lie in (0, 1)");
        }
        if (d < 1) {
            throw InvalidArgument("support dimension d must be >= 1");
        }
    }
};

/**
 * sum_{i=0}^{d-1} C(N, i) eps^i (1 - eps)^(N - i).
 *
 * Terms are generated in log space through the ratio
 * t_{i+1} / t_i = (N - i) / (i + 1) * eps / (1 - eps) and combined with a
 * log-sum-exp, so neither huge binomials nor tiny powers over/underflow.
 */
inline double binomial_tail(std::int64_t N, std::int64_t d, double epsilon) {
    if (d < 1) {
        throw InvalidArgument("binomial_tail: d must be >= 1");
    }
    if (N < d) {
        throw InvalidArgument("binomial_tail: N (" + std::to_string(N) + ") must be >= d (" +
                              std::to_string(d) + ")");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw InvalidArgument("binomial_tail: epsilon must lie in (0, 1)");
    }
    const double log_odds = std::log(epsilon) - std::log1p(-epsilon);
    std::vector<double> logs(static_cast<std::size_t>(d));
    double lt = static_cast<double>(N) * std::log1p(-epsilon);
    logs[0] = lt;
    for (std::int64_t i = 1; i < d; ++i) {
        lt += std::log(static_cast<double>(N - i + 1)) - std::log(static_cast<double>(i)) + log_odds;
        logs[static_cast<std::size_t>(i)] = lt;
    }
    const double peak = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (double v : logs) {
        acc += std::exp(v - peak);
    }
    return std::min(1.0, std::exp(peak + std::log(acc)));
}

/// Smallest N >= d with binomial_tail(N, d, epsilon) <= beta.
inline std::int64_t solve_sample_size(const ScenarioParams& sp) {
    sp.validate();
    auto ok = [&](std::int64_t N) { return binomial_tail(N, sp.d, sp.epsilon) <= sp.beta; };
    if (ok(sp.d)) {
        return sp.d;
    }
    std::int64_t lo = sp.d;  // fails
    std::int64_t hi = 2 * sp.d;
    while (!ok(hi)) {
        lo = hi;
        if (hi > std::numeric_limits<std::int64_t>::max() / 2) {
            throw InvalidArgument("solve_sample_size: required N overflows");
        }
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace srx

#endif  // SRX_SAMPLE_SIZE_HPP
