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

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "srx/cost.hpp"
#include "srx/scenarios.hpp"

namespace {

using srx::Index;
using srx::MatrixXd;
using srx::VectorXd;

struct Instance {
    srx::StackedDynamics sd;
    srx::CostSpec cs;
    VectorXd x0;
};

Instance random_instance(std::mt19937_64& rng, bool with_mean) {
    const Index n = oracle::uniform_int(rng, 1, 4);
    const Index m = oracle::uniform_int(rng, 1, 3);
    const Index nw = oracle::uniform_int(rng, 1, n);
    const Index M = oracle::uniform_int(rng, 1, 5);
    const auto sys = oracle::random_system(rng, n, m, nw);
    const MatrixXd Qh = oracle::randn(rng, n, n);
    const MatrixXd Rh = oracle::randn(rng, m, m);
    const VectorXd mean = with_mean ? VectorXd(0.5 * oracle::randn(rng, nw)) : VectorXd::Zero(nw);
    const MatrixXd Ch = oracle::randn(rng, nw, nw);
    const MatrixXd cov = with_mean ? MatrixXd(Ch * Ch.transpose() + 0.1 * MatrixXd::Identity(nw, nw))
                                   : MatrixXd::Identity(nw, nw);
    Instance in{srx::build_stacked(sys, M),
                srx::CostSpec::iid(Qh * Qh.transpose(), Rh * Rh.transpose() +
                                   0.1 * MatrixXd::Identity(m, m), mean, cov, M),
                oracle::randn(rng, n)};
    return in;
}

TEST(ExpectedCost, DeterministicCase) {
    std::mt19937_64 rng(1);
    const auto sys = oracle::random_system(rng, 3, 2, 2);
    const Index M = 3;
    const auto sd = srx::build_stacked(sys, M);
    srx::CostSpec cs{MatrixXd::Identity(3, 3), 0.5 * MatrixXd::Identity(2, 2),
                     MatrixXd::Zero(6, 6), VectorXd::Zero(6)};
    auto p = srx::PolicyParams::zeros(srx::layout_of(sd));
    p.gamma = oracle::randn(rng, 6);
    const VectorXd x0 = oracle::randn(rng, 3);
    const VectorXd x = sd.F * x0 + sd.G * p.gamma;
    const double expect = x.squaredNorm() + 0.5 * p.gamma.squaredNorm();
    EXPECT_NEAR(srx::expected_cost(cs, sd, x0, p), expect, 1e-10 * expect);
}

TEST(ExpectedCost, PureNoiseIsTraceOfHQH) {
    std::mt19937_64 rng(2);
    const auto sys = oracle::random_system(rng, 3, 2, 3);
    const Index M = 4;
    const auto sd = srx::build_stacked(sys, M);
    const MatrixXd Qh = oracle::randn(rng, 3, 3);
    const MatrixXd Q = Qh * Qh.transpose();
    const auto cs = srx::CostSpec::iid(Q, MatrixXd::Identity(2, 2), VectorXd::Zero(3),
                                       MatrixXd::Identity(3, 3), M);
    MatrixXd Qb = MatrixXd::Zero(12, 12);
    for (Index t = 0; t < M; ++t) {
        Qb.block(3 * t, 3 * t, 3, 3) = Q;
    }
    const double expect = (sd.H.transpose() * Qb * sd.H).trace();
    EXPECT_NEAR(srx::expected_cost(cs, sd, VectorXd::Zero(3),
                                   srx::PolicyParams::zeros(srx::layout_of(sd))),
                expect, 1e-10 * expect);
}

TEST(ExpectedCost, MatchesMonteCarloWithinThreeStandardErrors) {
    std::mt19937_64 rng(20240602);
    for (int trial = 0; trial < 20; ++trial) {
        const bool with_mean = trial % 2 == 1;
        const auto in = random_instance(rng, with_mean);
        const auto p = oracle::random_policy(rng, srx::layout_of(in.sd), 0.5);
        const Index nw = in.sd.nw;
        const VectorXd mean = in.cs.mu.head(nw);
        const MatrixXd cov = (in.cs.S - in.cs.mu * in.cs.mu.transpose()).topLeftCorner(nw, nw);
        const MatrixXd W =
            srx::draw_samples(srx::gaussian_iid(mean, cov, in.sd.M), 100000, 1000 + trial);
        // Direct per-sample evaluation through the recursion, independent of the trace formula.
        VectorXd costs(W.cols());
        MatrixXd Qb = MatrixXd::Zero(in.sd.n * in.sd.M, in.sd.n * in.sd.M);
        MatrixXd Rb = MatrixXd::Zero(in.sd.m * in.sd.M, in.sd.m * in.sd.M);
        for (Index t = 0; t < in.sd.M; ++t) {
            Qb.block(t * in.sd.n, t * in.sd.n, in.sd.n, in.sd.n) = in.cs.Q;
            Rb.block(t * in.sd.m, t * in.sd.m, in.sd.m, in.sd.m) = in.cs.R;
        }
        for (Index k = 0; k < W.cols(); ++k) {
            const VectorXd u = oracle::policy_input(p, W.col(k));
            const VectorXd x = in.sd.F * in.x0 + in.sd.G * u + in.sd.H * W.col(k);
            costs(k) = x.dot(Qb * x) + u.dot(Rb * u);
        }
        const double mean_cost = costs.mean();
        const double se = std::sqrt((costs.array() - mean_cost).square().sum() /
                                    static_cast<double>(costs.size() - 1) /
                                    static_cast<double>(costs.size()));
        const double closed = srx::expected_cost(in.cs, in.sd, in.x0, p);
        EXPECT_LE(std::abs(closed - mean_cost), 3.0 * se) << "trial " << trial;
        EXPECT_NEAR(srx::empirical_cost(in.cs, in.sd, in.x0, p, W), mean_cost,
                    1e-9 * std::abs(mean_cost));
    }
}

TEST(CostQuadraticForm, ScalarHandExpansion) {
    const srx::LtiSystem sys(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1));
    const auto sd = srx::build_stacked(sys, 1);
    const srx::CostSpec cs{MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1),
                           VectorXd::Zero(1)};
    const auto qf = srx::cost_quadratic_form(cs, sd, VectorXd::Ones(1));
    EXPECT_NEAR(qf.P(0, 0), 2.0, 1e-14);
    EXPECT_NEAR(qf.q(0), 2.0, 1e-14);
    EXPECT_NEAR(qf.c, 2.0, 1e-14);
}

TEST(CostQuadraticForm, ZeroWeightsGiveZeroForm) {
    std::mt19937_64 rng(3);
    const auto sys = oracle::random_system(rng, 3, 2, 2);
    const auto sd = srx::build_stacked(sys, 3);
    const auto cs = srx::CostSpec::iid(MatrixXd::Zero(3, 3), MatrixXd::Zero(2, 2),
                                       VectorXd::Zero(2), MatrixXd::Identity(2, 2), 3);
    const auto qf = srx::cost_quadratic_form(cs, sd, oracle::randn(rng, 3));
    EXPECT_TRUE(qf.P.isZero(0.0));
    EXPECT_TRUE(qf.q.isZero(0.0));
    EXPECT_EQ(qf.c, 0.0);
}

TEST(CostQuadraticForm, AgreesWithExpectedCostAndIsConvex) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const auto in = random_instance(rng, trial % 2 == 1);
        const auto qf = srx::cost_quadratic_form(in.cs, in.sd, in.x0);
        const auto l = srx::layout_of(in.sd);
        EXPECT_LE((qf.P - qf.P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(qf.P);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()));
        // R > 0 and S > 0 hold for these instances.
        ASSERT_TRUE(srx::strictly_convex(in.cs));
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
        for (int probe = 0; probe < 5; ++probe) {
            const VectorXd lambda = oracle::randn(rng, l.dim());
            const double direct = srx::expected_cost(in.cs, in.sd, in.x0, srx::unpack(lambda, l));
            EXPECT_LE(oracle::rel_err(qf(lambda), direct), 1e-8);
        }
    }
}

TEST(CostQuadraticForm, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_instance(rng, trial % 2 == 1);
        const auto qf = srx::cost_quadratic_form(in.cs, in.sd, in.x0);
        const auto l = srx::layout_of(in.sd);
        const VectorXd lambda = oracle::randn(rng, l.dim());
        const VectorXd g = qf.gradient(lambda);
        VectorXd fd(l.dim());
        for (Index i = 0; i < l.dim(); ++i) {
            const double hstep = 1e-5 * std::max(1.0, std::abs(lambda(i)));
            VectorXd lp = lambda, lm = lambda;
            lp(i) += hstep;
            lm(i) -= hstep;
            fd(i) = (srx::expected_cost(in.cs, in.sd, in.x0, srx::unpack(lp, l)) -
                     srx::expected_cost(in.cs, in.sd, in.x0, srx::unpack(lm, l))) /
                    (2 * hstep);
        }
        EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm())) << "trial " << trial;
    }
}

TEST(CostSpec, IidSecondMoment) {
    VectorXd mean(2);
    mean << 1, -2;
    MatrixXd cov(2, 2);
    cov << 2, 0.5, 0.5, 1;
    const auto cs = srx::CostSpec::iid(MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), mean,
                                       cov, 3);
    ASSERT_EQ(cs.S.rows(), 6);
    EXPECT_EQ(cs.mu.segment(4, 2), mean);
    EXPECT_EQ(cs.S.block(2, 2, 2, 2), cov + mean * mean.transpose());
    EXPECT_EQ(cs.S.block(0, 2, 2, 2), mean * mean.transpose());
}

TEST(CostSpec, ValidationErrors) {
    std::mt19937_64 rng(6);
    const auto sys = oracle::random_system(rng, 2, 1, 1);
    const auto sd = srx::build_stacked(sys, 2);
    auto cs = srx::CostSpec::iid(MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1),
                                 VectorXd::Zero(1), MatrixXd::Identity(1, 1), 2);
    EXPECT_NO_THROW(srx::validate(cs, sd));
    auto bad = cs;
    bad.Q = MatrixXd::Identity(3, 3);
    EXPECT_THROW(srx::validate(bad, sd), srx::DimensionError);
    bad = cs;
    bad.Q(0, 1) = 1.0;
    EXPECT_THROW(srx::validate(bad, sd), srx::InvalidArgument);
    bad = cs;
    bad.R(0, 0) = -1.0;
    EXPECT_THROW(srx::validate(bad, sd), srx::InvalidArgument);
    EXPECT_TRUE(srx::strictly_convex(cs));
    bad = cs;
    bad.R(0, 0) = 0.0;
    EXPECT_FALSE(srx::strictly_convex(bad));
}

}  // namespace
