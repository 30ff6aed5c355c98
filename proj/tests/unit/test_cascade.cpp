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
#include "srx/cascade.hpp"

namespace {

using srx::ConstraintAtom;
using srx::ConstraintSpec;
using srx::Index;
using srx::MatrixXd;
using srx::VectorXd;

/// Small random problem: input boxes (hard) and per-step state boxes with one slot each.
struct Instance {
    srx::LtiSystem sys;
    srx::StackedDynamics sd;
    ConstraintSpec spec;
    srx::CostSpec cost;
    VectorXd x0;
    srx::ScenarioSet W;
};

Instance make_instance(std::mt19937_64& rng, double state_bound, Index N) {
    const Index n = oracle::uniform_int(rng, 2, 3);
    const Index m = oracle::uniform_int(rng, 1, 2);
    const Index nw = oracle::uniform_int(rng, 1, 2);
    const Index M = oracle::uniform_int(rng, 2, 3);
    auto sys = oracle::random_system(rng, n, m, nw);
    auto sd = srx::build_stacked(sys, M);
    ConstraintSpec spec;
    spec.p_y = M;
    for (Index t = 0; t < M; ++t) {
        spec.f_atoms.push_back(
            ConstraintAtom::inf_norm(srx::select_input(sd, t), VectorXd::Zero(m), 1.5));
        spec.g_atoms.push_back(ConstraintAtom::inf_norm(srx::select_state(sd, t + 1),
                                                        VectorXd::Zero(n), state_bound, t));
    }
    auto cost = srx::CostSpec::iid(MatrixXd::Identity(n, n), 0.1 * MatrixXd::Identity(m, m),
                                   VectorXd::Zero(nw), 0.25 * MatrixXd::Identity(nw, nw), M);
    const VectorXd x0 = oracle::randn(rng, n) * 2.0;
    auto W = srx::ScenarioSet::draw(srx::gaussian_iid(VectorXd::Zero(nw),
                                                      0.25 * MatrixXd::Identity(nw, nw), M),
                                    N, rng());
    return {sys, sd, spec, cost, x0, W};
}

srx::ScenarioProgram program(const Instance& in) {
    return srx::ScenarioProgram(in.spec, in.sd, in.x0, in.W);
}

/// Largest template residual at (lambda, h) over all scenarios.
double max_residual(const srx::ScenarioProgram& prog, const VectorXd& lambda, const VectorXd& h) {
    return prog.residuals(lambda, h).maxCoeff();
}

TEST(Cascade, ScalarToyProblem) {
    const srx::LtiSystem sys(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1));
    const auto sd = srx::build_stacked(sys, 1);
    ConstraintSpec spec;
    spec.p_y = 1;
    spec.f_atoms.push_back(ConstraintAtom::inf_norm(srx::select_input(sd, 0), VectorXd::Zero(1), 1.0));
    Eigen::RowVectorXd a(2);
    a << 1.0, 0.0;
    spec.g_atoms.push_back(ConstraintAtom::affine(a, 0.0, 0.0, 0));
    MatrixXd w(1, 3);
    w << 0.1, -0.2, 0.3;
    const srx::ScenarioProgram prog(spec, sd, VectorXd::Constant(1, 5.0),
                                    srx::ScenarioSet(w, 0, "fixed"));
    const auto cs = srx::CostSpec::iid(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1),
                                       VectorXd::Zero(1), MatrixXd::Ones(1, 1), 1);
    const auto sol = srx::solve_cascade(prog, cs, srx::RelaxationCost::identity(1));
    EXPECT_NEAR(sol.h_star(0), 4.3, 1e-6);
    EXPECT_NEAR(sol.L_star, 4.3 * 4.3, 1e-5);
    EXPECT_NEAR(sol.lambda_star.gamma(0), -1.0, 1e-6);
    EXPECT_EQ(sol.num_scenarios, 3);
    EXPECT_EQ(sol.scenario_hash, prog.scenarios().hash());
}

TEST(Cascade, LooseBoundsNeedNoRelaxation) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance in = make_instance(rng, 1e3, 15);
        const auto prog = program(in);
        const auto sol =
            srx::solve_cascade(prog, in.cost, srx::RelaxationCost::identity(in.spec.p_y));
        EXPECT_EQ(sol.h_star.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(sol.L_star, 0.0);
    }
}

TEST(Cascade, InactiveConstraintsGiveUnconstrainedMinimizer) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 5; ++trial) {
        Instance in = make_instance(rng, 1e6, 12);
        in.spec.f_atoms.clear();
        const auto prog = program(in);
        const auto sol =
            srx::solve_cascade(prog, in.cost, srx::RelaxationCost::identity(in.spec.p_y));
        const auto J = srx::cost_quadratic_form(in.cost, in.sd, in.x0);
        const VectorXd free_min = J.P.ldlt().solve(-0.5 * J.q);
        EXPECT_LE((srx::pack(sol.lambda_star) - free_min).cwiseAbs().maxCoeff(),
                  1e-6 * (1.0 + free_min.cwiseAbs().maxCoeff()));
        EXPECT_NEAR(sol.J_star, J(free_min), 1e-7 * (1.0 + std::abs(sol.J_star)));
    }
}

TEST(Cascade, StepTwoNeverWorsensCostAndStaysFeasible) {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 8; ++trial) {
        const Instance in = make_instance(rng, 0.5, 15);
        const auto prog = program(in);
        const auto sol =
            srx::solve_cascade(prog, in.cost, srx::RelaxationCost::identity(in.spec.p_y));
        EXPECT_LE(sol.J_star, sol.J_feasible + 1e-8 * (1.0 + std::abs(sol.J_feasible)));
        EXPECT_GE(sol.h_star.minCoeff(), 0.0);
        const double tol = 1e-7 * (1.0 + sol.h_star.cwiseAbs().maxCoeff());
        EXPECT_LE(max_residual(prog, srx::pack(sol.lambda_star), sol.h_star), tol);
        EXPECT_LE(max_residual(prog, sol.lambda_feasible, sol.h_star), tol);
        EXPECT_NEAR(sol.J_star,
                    srx::expected_cost(in.cost, in.sd, in.x0, sol.lambda_star),
                    1e-8 * (1.0 + std::abs(sol.J_star)));
    }
}

TEST(Cascade, FeasibleProgramsRecoverZeroRelaxation) {
    std::mt19937_64 rng(34);
    int feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 16; ++trial) {
        const Instance in = make_instance(rng, trial % 2 == 0 ? 0.4 : 2.5, 12);
        const auto prog = program(in);
        const auto s1 = srx::solve_step1(prog, srx::RelaxationCost::identity(in.spec.p_y));
        if (srx::unrelaxed_feasible(prog)) {
            ++feasible;
            EXPECT_LE(s1.h_star.cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
        } else {
            ++infeasible;
            EXPECT_GT(s1.h_star.maxCoeff(), 1e-7) << "trial " << trial;
        }
    }
    EXPECT_GT(feasible, 0);
    EXPECT_GT(infeasible, 0);
}

TEST(Cascade, RelaxationIsUniqueAcrossSolvers) {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance in = make_instance(rng, 0.4, 8);
        const auto prog = program(in);
        const Index d = prog.lambda_dim(), py = prog.p_y();
        const auto s1 = srx::solve_step1(prog, srx::RelaxationCost::identity(py));

        // Same step-1 problem, dense, through the operator-splitting solver.
        const auto lin = prog.assemble(true);
        MatrixXd P = MatrixXd::Zero(d + py, d + py);
        P.bottomRightCorner(py, py).setIdentity();
        srx::AdmmSettings st;
        st.tolerance = 1e-11;
        st.max_iterations = 2000000;
        const auto admm = srx::solve_qp_admm(P, VectorXd::Zero(d + py), lin.A, lin.b, st);
        ASSERT_EQ(admm.status, srx::QpStatus::Solved);
        EXPECT_LE((admm.z.tail(py) - s1.h_star).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    }
}

TEST(Auxiliary, ConvergesToCascadeSolution) {
    std::mt19937_64 rng(36);
    for (int trial = 0; trial < 4; ++trial) {
        const Instance in = make_instance(rng, 0.4, 10);
        const auto prog = program(in);
        const auto rc = srx::RelaxationCost::identity(in.spec.p_y);
        const auto sol = srx::solve_cascade(prog, in.cost, rc);
        VectorXd star(prog.lambda_dim() + prog.p_y());
        star << srx::pack(sol.lambda_star), sol.h_star;
        double prev = std::numeric_limits<double>::infinity();
        for (double n : {1e2, 1e3, 1e4, 1e6}) {
            const auto aux = srx::solve_auxiliary(prog, rc, in.cost, n);
            VectorXd v(star.size());
            v << aux.lambda, aux.h;
            const double dist = (v - star).norm();
            // lambda is ill-conditioned in h near the minimal h*, so monotonicity is
            // checked at the same relative accuracy as the final gap.
            EXPECT_LE(dist, prev + 1e-3 * (1.0 + star.norm())) << "trial " << trial << " n " << n;
            prev = dist;
            // The cascade point is feasible for the auxiliary problem.
            EXPECT_LE(aux.objective,
                      sol.L_star + sol.J_star / n + 1e-8 * (1.0 + sol.L_star + std::abs(sol.J_star)));
            // h* minimizes L over the same set.
            EXPECT_GE(rc(aux.h), sol.L_star - 1e-8 * (1.0 + sol.L_star));
        }
        EXPECT_LE(prev, 1e-3 * (1.0 + star.norm())) << "trial " << trial;
    }
}

TEST(Auxiliary, DominantRelaxationWeightActsLikeStepOne) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 3; ++trial) {
        const Instance in = make_instance(rng, 0.4, 10);
        const auto prog = program(in);
        const auto s1 = srx::solve_step1(prog, srx::RelaxationCost::identity(in.spec.p_y));
        const srx::RelaxationCost heavy{1e6 * MatrixXd::Identity(in.spec.p_y, in.spec.p_y)};
        const auto aux = srx::solve_auxiliary(prog, heavy, in.cost, 1.0);
        EXPECT_LE((aux.h - s1.h_star).cwiseAbs().maxCoeff(),
                  1e-3 * (1.0 + s1.h_star.cwiseAbs().maxCoeff()));
    }
}

TEST(Cascade, StepTwoRejectsForeignScenarioSet) {
    std::mt19937_64 rng(38);
    const Instance in = make_instance(rng, 0.5, 6);
    const auto prog = program(in);
    const auto s1 = srx::solve_step1(prog, srx::RelaxationCost::identity(in.spec.p_y));
    const srx::ScenarioSet other = srx::ScenarioSet::draw(
        srx::gaussian_iid(VectorXd::Zero(in.sd.nw), MatrixXd::Identity(in.sd.nw, in.sd.nw),
                          in.sd.M),
        6, 999);
    const srx::ScenarioProgram prog2(in.spec, in.sd, in.x0, other);
    EXPECT_THROW(srx::solve_step2(prog2, in.cost, s1), srx::InvalidArgument);
}

TEST(Cascade, ValidatesRelaxationCost) {
    std::mt19937_64 rng(39);
    const Instance in = make_instance(rng, 0.5, 4);
    const auto prog = program(in);
    EXPECT_THROW(srx::solve_step1(prog, srx::RelaxationCost::identity(in.spec.p_y + 1)),
                 srx::Error);
    srx::RelaxationCost indefinite = srx::RelaxationCost::identity(in.spec.p_y);
    indefinite.T(0, 0) = -1.0;
    EXPECT_THROW(srx::solve_step1(prog, indefinite), srx::Error);
}

TEST(Cascade, DeterministicForIdenticalInputs) {
    std::mt19937_64 rng(40);
    const Instance in = make_instance(rng, 0.5, 10);
    const auto prog = program(in);
    const auto rc = srx::RelaxationCost::identity(in.spec.p_y);
    const auto a = srx::solve_cascade(prog, in.cost, rc);
    const auto b = srx::solve_cascade(prog, in.cost, rc);
    EXPECT_EQ(a.h_star, b.h_star);
    EXPECT_TRUE(a.lambda_star == b.lambda_star);
    EXPECT_EQ(a.J_star, b.J_star);
}

}  // namespace
