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

#include <random>

#include "oracles.hpp"
#include "srx/config.hpp"
#include "srx/lq_baseline.hpp"

namespace {

using srx::Index;
using srx::MatrixXd;
using srx::VectorXd;

MatrixXd random_psd(std::mt19937_64& rng, Index n, double shift) {
    const MatrixXd L = oracle::randn(rng, n, n);
    return L * L.transpose() + shift * MatrixXd::Identity(n, n);
}

/// sum_{t=1..M} x_t' Q x_t + sum_{t=0..M-1} u_t' R u_t along a rollout.
double realized_cost(const MatrixXd& Q, const MatrixXd& R, const VectorXd& xs,
                     const VectorXd& us, Index M) {
    const Index n = Q.rows(), m = R.rows();
    double c = 0.0;
    for (Index t = 0; t < M; ++t) {
        const VectorXd x = xs.segment(t * n, n);
        const VectorXd u = us.segment(t * m, m);
        c += x.dot(Q * x) + u.dot(R * u);
    }
    return c;
}

TEST(Riccati, ScalarHandComputation) {
    const srx::LtiSystem sys(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1));
    const auto d = srx::riccati_finite_horizon(sys, MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 1);
    ASSERT_EQ(d.horizon(), 1);
    EXPECT_DOUBLE_EQ(d.K[0](0, 0), -0.5);
    EXPECT_DOUBLE_EQ(d.P[0](0, 0), 1.5);
    EXPECT_DOUBLE_EQ(d.P[1](0, 0), 1.0);
}

TEST(Riccati, NothingToControlOrNothingToRegulate) {
    std::mt19937_64 rng(51);
    const MatrixXd A = oracle::randn(rng, 3, 3);
    const srx::LtiSystem blind(A, MatrixXd::Zero(3, 2), MatrixXd::Identity(3, 3));
    const auto d0 = srx::riccati_finite_horizon(blind, MatrixXd::Identity(3, 3),
                                                MatrixXd::Identity(2, 2), 5);
    for (const auto& K : d0.K) EXPECT_EQ(K.cwiseAbs().maxCoeff(), 0.0);

    const srx::LtiSystem sys(A, oracle::randn(rng, 3, 2), MatrixXd::Identity(3, 3));
    const auto d1 = srx::riccati_finite_horizon(sys, MatrixXd::Zero(3, 3),
                                                MatrixXd::Identity(2, 2), 5);
    for (const auto& K : d1.K) EXPECT_EQ(K.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Riccati, ValueMatricesAreSymmetricPsd) {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = oracle::uniform_int(rng, 1, 5), m = oracle::uniform_int(rng, 1, 3);
        const auto sys = oracle::random_system(rng, n, m, 1);
        const auto d = srx::riccati_finite_horizon(sys, random_psd(rng, n, 0.0),
                                                   random_psd(rng, m, 0.1), 6);
        for (const auto& P : d.P) {
            EXPECT_LE((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + P.norm()));
            EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(P).eigenvalues().minCoeff(),
                      -1e-9 * (1.0 + P.norm()));
        }
    }
}

TEST(Riccati, RejectsSingularInputWeight) {
    const srx::LtiSystem sys(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1));
    EXPECT_THROW(srx::riccati_finite_horizon(sys, MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1), 3),
                 srx::InvalidArgument);
    EXPECT_THROW(srx::riccati_finite_horizon(sys, -MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 3),
                 srx::InvalidArgument);
    EXPECT_THROW(srx::riccati_finite_horizon(sys, MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 0),
                 srx::InvalidArgument);
}

TEST(LqPolicy, DisturbanceFeedbackReproducesStateFeedback) {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = oracle::uniform_int(rng, 1, 5), m = oracle::uniform_int(rng, 1, 3);
        const Index nw = oracle::uniform_int(rng, 1, n), M = oracle::uniform_int(rng, 1, 8);
        const auto sys = oracle::random_system(rng, n, m, nw);
        const auto d = srx::riccati_finite_horizon(sys, random_psd(rng, n, 0.0),
                                                   random_psd(rng, m, 0.1), M);
        const VectorXd x0 = oracle::randn(rng, n);
        const auto p = srx::to_disturbance_feedback(d, sys, x0);
        const auto sd = srx::build_stacked(sys, M);
        for (int draw = 0; draw < 5; ++draw) {
            const VectorXd w = oracle::randn(rng, nw * M);
            const auto [xs, us] = srx::simulate_state_feedback(d, sys, x0, w);
            const VectorXd u = srx::input_map(p, w);
            const VectorXd x = srx::state_map(sd, p, x0, w);
            EXPECT_LE((u - us).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + us.cwiseAbs().maxCoeff()));
            EXPECT_LE((x - xs).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + xs.cwiseAbs().maxCoeff()));
        }
    }
}

TEST(LqCost, ZeroGainZeroNoiseIsAutonomousCost) {
    std::mt19937_64 rng(54);
    const auto sys = oracle::random_system(rng, 3, 2, 2);
    const Index M = 5;
    const auto d = srx::riccati_finite_horizon(sys, MatrixXd::Zero(3, 3), MatrixXd::Identity(2, 2), M);
    const MatrixXd Q = random_psd(rng, 3, 0.0);
    const auto cs = srx::CostSpec::iid(Q, MatrixXd::Identity(2, 2), VectorXd::Zero(2),
                                       MatrixXd::Zero(2, 2), M);
    const VectorXd x0 = oracle::randn(rng, 3);
    double expect = 0.0;
    VectorXd x = x0;
    for (Index t = 0; t < M; ++t) {
        x = sys.A() * x;
        expect += x.dot(Q * x);
    }
    EXPECT_NEAR(srx::lq_expected_cost(d, cs, sys, x0, M), expect, 1e-10 * (1.0 + expect));
}

TEST(LqCost, MatchesMonteCarloAverage) {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 3; ++trial) {
        const Index n = 3, m = 2, nw = 2, M = 5;
        const auto sys = oracle::random_system(rng, n, m, nw);
        const auto d = srx::riccati_finite_horizon(sys, random_psd(rng, n, 0.0),
                                                   random_psd(rng, m, 0.1), M);
        const MatrixXd Q = random_psd(rng, n, 0.0), R = random_psd(rng, m, 0.0);
        const VectorXd mean = oracle::randn(rng, nw) * 0.3;
        const MatrixXd cov = random_psd(rng, nw, 0.1);
        const auto cs = srx::CostSpec::iid(Q, R, mean, cov, M);
        const VectorXd x0 = oracle::randn(rng, n);
        const double J = srx::lq_expected_cost(d, cs, sys, x0, M);

        const auto sampler = srx::gaussian_iid(mean, cov, M);
        srx::Rng draw(700 + trial);
        const int K = 100000;
        double s1 = 0.0, s2 = 0.0;
        for (int k = 0; k < K; ++k) {
            const auto [xs, us] = srx::simulate_state_feedback(d, sys, x0, sampler.draw(draw));
            const double c = realized_cost(Q, R, xs, us, M);
            s1 += c;
            s2 += c * c;
        }
        const double avg = s1 / K;
        const double se = std::sqrt((s2 / K - avg * avg) / K);
        EXPECT_NEAR(avg, J, 3.0 * se) << "trial " << trial;
    }
}

TEST(LqCost, RiccatiBeatsRandomLinearPolicies) {
    std::mt19937_64 rng(56);
    for (int trial = 0; trial < 5; ++trial) {
        const Index n = 3, m = 2, M = 6;
        const auto sys = oracle::random_system(rng, n, m, 1);
        const MatrixXd Q = random_psd(rng, n, 0.0), R = random_psd(rng, m, 0.1);
        const auto d = srx::riccati_finite_horizon(sys, Q, R, M);
        const VectorXd x0 = oracle::randn(rng, n) * 2.0;
        const VectorXd w0 = VectorXd::Zero(M);
        const auto [xs, us] = srx::simulate_state_feedback(d, sys, x0, w0);
        const double best = realized_cost(Q, R, xs, us, M);
        // Zero-noise optimal value from the recursion (P_0 carries the x_0 stage).
        EXPECT_NEAR(best, x0.dot(d.P[0] * x0) - x0.dot(Q * x0), 1e-8 * (1.0 + best));
        for (int k = 0; k < 100; ++k) {
            srx::LqDesign other = d;
            for (auto& K : other.K) K = d.K[0] + oracle::randn(rng, m, n) * 0.5;
            const auto [xo, uo] = srx::simulate_state_feedback(other, sys, x0, w0);
            EXPECT_LE(best, realized_cost(Q, R, xo, uo, M) + 1e-9);
        }
    }
}

TEST(LqCost, MassSpringTableValues) {
    const srx::Experiment ex(srx::parse_config(oracle::source_path("configs/mass_spring.cfg")));
    const auto& sys = ex.system();
    const Index M = ex.stacked().M;
    const double cases[3][3] = {{1.0, 0.0, 126.44}, {0.0, 1.0, 4347.20}, {0.2, 9.0, 2318.50}};
    for (const auto& c : cases) {
        MatrixXd Q = MatrixXd::Zero(8, 8);
        Q.topLeftCorner(4, 4).diagonal().setConstant(c[0]);
        Q.bottomRightCorner(4, 4).diagonal().setConstant(c[1]);
        const auto d = srx::riccati_finite_horizon(sys, Q, 1e-6 * MatrixXd::Identity(3, 3), M);
        const double J = srx::lq_expected_cost(d, ex.cost(), sys, ex.x0(), M);
        EXPECT_NEAR(J, c[2], 0.02 * c[2]) << "q_J=" << c[0] << " q_L=" << c[1];
    }
}

}  // namespace
