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
#ifndef SRX_LQ_BASELINE_HPP
#define SRX_LQ_BASELINE_HPP

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "srx/cost.hpp"
#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"
#include "srx/policy.hpp"

namespace srx {

/// Finite-horizon LQ state feedback u_t = K_t x_t; P_M = Q (no extra terminal weight).
struct LqDesign {
    MatrixXd Q;
    MatrixXd R;
    std::vector<MatrixXd> K;  // t = 0..M-1
    std::vector<MatrixXd> P;  // t = 0..M

    Index horizon() const noexcept { return static_cast<Index>(K.size()); }
};

inline LqDesign riccati_finite_horizon(const LtiSystem& sys, const MatrixXd& Q,
                                       const MatrixXd& R, Index M) {
    const Index n = sys.n();
    const Index m = sys.m();
    if (M < 1) {
        throw InvalidArgument("riccati_finite_horizon: horizon must be >= 1");
    }
    if (Q.rows() != n || Q.cols() != n) {
        throw DimensionError("riccati_finite_horizon: Q is " + detail::shape(Q));
    }
    if (R.rows() != m || R.cols() != m) {
        throw DimensionError("riccati_finite_horizon: R is " + detail::shape(R));
    }
    if (!detail::symmetric_psd(Q, 1e-10, 1e-10)) {
        throw InvalidArgument("riccati_finite_horizon: Q must be symmetric PSD");
    }
    if (!detail::positive_definite(R)) {
        throw InvalidArgument("riccati_finite_horizon: R must be positive definite");
    }
    const MatrixXd& A = sys.A();
    const MatrixXd& B = sys.B();
    LqDesign d;
    d.Q = Q;
    d.R = R;
    d.K.assign(static_cast<std::size_t>(M), MatrixXd());
    d.P.assign(static_cast<std::size_t>(M + 1), MatrixXd());
    d.P[static_cast<std::size_t>(M)] = Q;
    for (Index t = M - 1; t >= 0; --t) {
        const MatrixXd& Pn = d.P[static_cast<std::size_t>(t + 1)];
        const MatrixXd S = R + B.transpose() * Pn * B;
        Eigen::LLT<MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
            throw SolverError(SolverError::Kind::NumericalBreakdown,
                              "riccati_finite_horizon: R + B'PB is not positive definite at t=" +
                                  std::to_string(t));
        }
        MatrixXd K = -llt.solve(B.transpose() * Pn * A);
        MatrixXd P = Q + A.transpose() * Pn * (A + B * K);
        d.P[static_cast<std::size_t>(t)] = 0.5 * (P + P.transpose());
        d.K[static_cast<std::size_t>(t)] = std::move(K);
    }
    return d;
}

namespace detail {

inline void check_design(const LqDesign& d, const LtiSystem& sys, Index M) {
    if (d.horizon() != M) {
        throw DimensionError("LQ design has horizon " + std::to_string(d.horizon()) +
                             ", expected " + std::to_string(M));
    }
    for (const auto& K : d.K) {
        if (K.rows() != sys.m() || K.cols() != sys.n()) {
            throw DimensionError("LQ gain is " + shape(K));
        }
    }
}

}  // namespace detail

/**
 * The disturbance-feedback pair equivalent to u_t = K_t x_t:
 * gamma_t = K_t Phi(t,0) x0 and theta_{t,tau} = K_t Phi(t,tau+1) Bw,
 * with Phi(t,s) the closed-loop transition from s to t.
 */
inline PolicyParams to_disturbance_feedback(const LqDesign& d, const LtiSystem& sys,
                                            const VectorXd& x0) {
    const Index M = d.horizon();
    detail::check_design(d, sys, M);
    detail::require_len(x0, sys.n(), "to_disturbance_feedback: initial state");
    PolicyParams p = PolicyParams::zeros({sys.m(), sys.nw(), M});
    // phi[s] holds Phi(t, s) for the current t; phi[t] = I.
    std::vector<MatrixXd> phi;
    for (Index t = 0; t < M; ++t) {
        const MatrixXd& K = d.K[static_cast<std::size_t>(t)];
        if (t > 0) {
            const MatrixXd Acl = sys.A() + sys.B() * d.K[static_cast<std::size_t>(t - 1)];
            for (auto& f : phi) {
                f = Acl * f;
            }
        }
        phi.push_back(MatrixXd::Identity(sys.n(), sys.n()));
        p.gamma.segment(t * sys.m(), sys.m()) = K * (phi.front() * x0);
        for (Index tau = 0; tau < t; ++tau) {
            p.theta_blocks[static_cast<std::size_t>(p.layout.block_index(t, tau))] =
                K * phi[static_cast<std::size_t>(tau + 1)] * sys.Bw();
        }
    }
    return p;
}

/// Recursive closed-loop rollout; returns stacked (x_1..x_M, u_0..u_{M-1}).
inline std::pair<VectorXd, VectorXd> simulate_state_feedback(const LqDesign& d,
                                                             const LtiSystem& sys,
                                                             const VectorXd& x0,
                                                             const VectorXd& w) {
    const Index M = d.horizon();
    detail::check_design(d, sys, M);
    detail::require_len(x0, sys.n(), "simulate_state_feedback: initial state");
    detail::require_len(w, sys.nw() * M, "simulate_state_feedback: disturbance");
    VectorXd xs(sys.n() * M);
    VectorXd us(sys.m() * M);
    VectorXd x = x0;
    for (Index t = 0; t < M; ++t) {
        const VectorXd u = d.K[static_cast<std::size_t>(t)] * x;
        x = simulate_step(sys, x, u, w.segment(t * sys.nw(), sys.nw()));
        us.segment(t * sys.m(), sys.m()) = u;
        xs.segment(t * sys.n(), sys.n()) = x;
    }
    return {xs, us};
}

/// Expected cost of the LQ closed loop under the weights of `cs` (not those of the design).
inline double lq_expected_cost(const LqDesign& d, const CostSpec& cs, const LtiSystem& sys,
                               const VectorXd& x0, Index M) {
    detail::check_design(d, sys, M);
    return expected_cost(cs, build_stacked(sys, M), x0, to_disturbance_feedback(d, sys, x0));
}

}  // namespace srx

#endif  // SRX_LQ_BASELINE_HPP
