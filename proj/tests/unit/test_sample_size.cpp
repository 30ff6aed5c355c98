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
#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <random>

#include "srx/sample_size.hpp"

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

/// Exact tail for eps = num/den in rational arithmetic.
cpp_rational exact_tail(int N, int d, int num, int den) {
    const cpp_rational eps(num, den);
    const cpp_rational one_minus = 1 - eps;
    cpp_rational sum = 0;
    cpp_int binom = 1;
    for (int i = 0; i < d; ++i) {
        cpp_rational term = cpp_rational(binom);
        for (int k = 0; k < i; ++k) term *= eps;
        for (int k = 0; k < N - i; ++k) term *= one_minus;
        sum += term;
        binom = binom * (N - i) / (i + 1);
    }
    return sum;
}

TEST(BinomialTail, SmallExamples) {
    EXPECT_NEAR(srx::binomial_tail(1, 1, 0.1), 0.9, 1e-15);
    EXPECT_NEAR(srx::binomial_tail(2, 2, 0.5), 0.75, 1e-15);
    EXPECT_NEAR(srx::binomial_tail(5, 5, 0.3), 1.0 - std::pow(0.3, 5), 1e-14);
}

TEST(BinomialTail, MatchesExactRationalArithmetic) {
    const int fracs[][2] = {{1, 10}, {1, 4}, {1, 2}, {3, 100}, {9, 10}};
    for (const auto& f : fracs) {
        const double eps = static_cast<double>(f[0]) / f[1];
        for (int N = 1; N <= 30; ++N) {
            for (int d = 1; d <= N; ++d) {
                const double exact = exact_tail(N, d, f[0], f[1]).convert_to<double>();
                EXPECT_NEAR(srx::binomial_tail(N, d, eps), exact, 1e-12)
                    << "N=" << N << " d=" << d << " eps=" << eps;
            }
        }
    }
}

TEST(BinomialTail, RejectsBadArguments) {
    EXPECT_THROW(srx::binomial_tail(3, 4, 0.1), srx::InvalidArgument);
    EXPECT_THROW(srx::binomial_tail(3, 0, 0.1), srx::InvalidArgument);
    EXPECT_THROW(srx::binomial_tail(3, 1, 0.0), srx::InvalidArgument);
    EXPECT_THROW(srx::binomial_tail(3, 1, 1.0), srx::InvalidArgument);
}

TEST(BinomialTail, DecreasesInNIncreasesInD) {
    for (std::int64_t d : {1, 5, 40}) {
        double prev = 2.0;
        for (std::int64_t N = d; N < d + 600; N += 7) {
            const double v = srx::binomial_tail(N, d, 0.05);
            EXPECT_LE(v, prev + 1e-15);
            prev = v;
        }
    }
    for (std::int64_t N : {50, 400}) {
        double prev = -1.0;
        for (std::int64_t d = 1; d <= 50; ++d) {
            const double v = srx::binomial_tail(N, d, 0.1);
            EXPECT_GE(v, prev);
            prev = v;
        }
    }
}

TEST(SampleSize, SingleDecisionVariable) {
    // With d = 1 the bound reduces to (1 - eps)^N <= beta.
    const std::int64_t N = srx::solve_sample_size({0.1, 1e-6, 1});
    EXPECT_EQ(N, 132);
    EXPECT_EQ(N, static_cast<std::int64_t>(std::ceil(std::log(1e-6) / std::log(0.9))));
}

TEST(SampleSize, MassSpringProblemSize) {
    const std::int64_t N = srx::solve_sample_size({0.1, 1e-6, 368});
    EXPECT_EQ(N, 4614);
    EXPECT_LE(srx::binomial_tail(N, 368, 0.1), 1e-6);
    EXPECT_GT(srx::binomial_tail(N - 1, 368, 0.1), 1e-6);
}

TEST(SampleSize, MinimalityAndMonotonicity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ue(0.01, 0.4), ulb(-9.0, -1.0);
    std::uniform_int_distribution<std::int64_t> ud(1, 120);
    for (int trial = 0; trial < 60; ++trial) {
        const srx::ScenarioParams sp{ue(rng), std::pow(10.0, ulb(rng)), ud(rng)};
        const std::int64_t N = srx::solve_sample_size(sp);
        EXPECT_GE(N, sp.d);
        EXPECT_LE(srx::binomial_tail(N, sp.d, sp.epsilon), sp.beta);
        if (N > sp.d) {
            EXPECT_GT(srx::binomial_tail(N - 1, sp.d, sp.epsilon), sp.beta);
        }
        auto more_d = sp;
        more_d.d += 1;
        EXPECT_GE(srx::solve_sample_size(more_d), N);
        auto smaller_beta = sp;
        smaller_beta.beta *= 0.1;
        EXPECT_GE(srx::solve_sample_size(smaller_beta), N);
        auto smaller_eps = sp;
        smaller_eps.epsilon *= 0.5;
        EXPECT_GE(srx::solve_sample_size(smaller_eps), N);
    }
}

TEST(SampleSize, ValidatesParameters) {
    EXPECT_THROW(srx::solve_sample_size({0.0, 1e-6, 3}), srx::InvalidArgument);
    EXPECT_THROW(srx::solve_sample_size({0.1, 1.0, 3}), srx::InvalidArgument);
    EXPECT_THROW(srx::solve_sample_size({0.1, 1e-6, 0}), srx::InvalidArgument);
}

}  // namespace
