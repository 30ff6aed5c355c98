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
#ifndef SRX_POLICY_HPP
#define SRX_POLICY_HPP

#include <Eigen/Dense>

#include <vector>

#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"

namespace srx {

/// Stacked disturbance [w_0; ...; w_{M-1}] of length n_w M.
using DisturbanceTrajectory = VectorXd;

/**
 * Index bookkeeping for the decision vector lambda.
 *
 * Ordering: gamma_0 ... gamma_{M-1} (m entries each), then the causal gain
 * blocks theta_{t,tau} for 1 <= t <= M-1, 0 <= tau <= t-1 in lexicographic
 * (t, tau) order, each m x n_w block stored row-major.
 */
struct PolicyLayout {
    Index m = 0;
    Index nw = 0;
    Index M = 0;

    Index num_blocks() const noexcept { return M * (M - 1) / 2; }
    Index block_size() const noexcept { return m * nw; }
    Index dim() const noexcept { return m * M + block_size() * num_blocks(); }
    Index gamma_offset(Index t) const noexcept { return t * m; }
    /// Position of block (t, tau) in the lexicographic block list.
    Index block_index(Index t, Index tau) const noexcept { return t * (t - 1) / 2 + tau; }
    Index theta_offset(Index t, Index tau) const noexcept {
        return m * M + block_index(t, tau) * block_size();
    }

    bool operator==(const PolicyLayout&) const = default;
};

inline PolicyLayout layout_of(const StackedDynamics& sd) { return {sd.m, sd.nw, sd.M}; }

/// Disturbance-feedback policy u_t = gamma_t + sum_{tau<t} theta_{t,tau} w_tau.
struct PolicyParams {
    PolicyLayout layout;
    VectorXd gamma;                     // m M
    std::vector<MatrixXd> theta_blocks;  // lexicographic (t, tau), each m x n_w

    static PolicyParams zeros(const PolicyLayout& l) {
        PolicyParams p;
        p.layout = l;
        p.gamma = VectorXd::Zero(l.m * l.M);
        p.theta_blocks.assign(static_cast<std::size_t>(l.num_blocks()), MatrixXd::Zero(l.m, l.nw));
        return p;
    }

    const MatrixXd& theta(Index t, Index tau) const {
        return theta_blocks[static_cast<std::size_t>(layout.block_index(t, tau))];
    }
    MatrixXd& theta(Index t, Index tau) {
        return theta_blocks[static_cast<std::size_t>(layout.block_index(t, tau))];
    }

    bool operator==(const PolicyParams& o) const {
        if (!(layout == o.layout) || gamma.size() != o.gamma.size() || gamma != o.gamma ||
            theta_blocks.size() != o.theta_blocks.size()) {
            return false;
        }
        for (std::size_t i = 0; i < theta_blocks.size(); ++i) {
            if (theta_blocks[i].rows() != o.theta_blocks[i].rows() ||
                theta_blocks[i].cols() != o.theta_blocks[i].cols() ||
                theta_blocks[i] != o.theta_blocks[i]) {
                return false;
            }
        }
        return true;
    }
};

namespace detail {

inline void check_params(const PolicyParams& p) {
    const auto& l = p.layout;
    if (p.gamma.size() != l.m * l.M) {
        throw DimensionError("policy: gamma has length " + std::to_string(p.gamma.size()) +
                             ", expected " + std::to_string(l.m * l.M));
    }
    if (static_cast<Index>(p.theta_blocks.size()) != l.num_blocks()) {
        throw DimensionError("policy: expected " + std::to_string(l.num_blocks()) +
                             " theta blocks, got " + std::to_string(p.theta_blocks.size()));
    }
    for (const auto& b : p.theta_blocks) {
        if (b.rows() != l.m || b.cols() != l.nw) {
            throw DimensionError("policy: theta block has shape " + shape(b));
        }
    }
}

}  // namespace detail

inline VectorXd pack(const PolicyParams& p) {
    detail::check_params(p);
    const auto& l = p.layout;
    VectorXd lambda(l.dim());
    lambda.head(l.m * l.M) = p.gamma;
    Index k = l.m * l.M;
    for (const auto& b : p.theta_blocks) {
        for (Index i = 0; i < l.m; ++i) {
            for (Index j = 0; j < l.nw; ++j) {
                lambda(k++) = b(i, j);
            }
        }
    }
    return lambda;
}

inline PolicyParams unpack(const VectorXd& lambda, Index m, Index nw, Index M) {
    const PolicyLayout l{m, nw, M};
    if (m < 1 || nw < 1 || M < 1) {
        throw DimensionError("unpack: dimensions must be positive");
    }
    if (lambda.size() != l.dim()) {
        throw DimensionError("unpack: lambda has length " + std::to_string(lambda.size()) +
                             ", expected " + std::to_string(l.dim()));
    }
    PolicyParams p = PolicyParams::zeros(l);
    p.gamma = lambda.head(m * M);
    Index k = m * M;
    for (auto& b : p.theta_blocks) {
        for (Index i = 0; i < m; ++i) {
            for (Index j = 0; j < nw; ++j) {
                b(i, j) = lambda(k++);
            }
        }
    }
    return p;
}

inline PolicyParams unpack(const VectorXd& lambda, const PolicyLayout& l) {
    return unpack(lambda, l.m, l.nw, l.M);
}

/// Dense (mM) x (n_w M) gain matrix; block (t, tau) is zero for tau >= t.
inline MatrixXd theta_matrix(const PolicyParams& p) {
    detail::check_params(p);
    const auto& l = p.layout;
    MatrixXd Theta = MatrixXd::Zero(l.m * l.M, l.nw * l.M);
    for (Index t = 1; t < l.M; ++t) {
        for (Index tau = 0; tau < t; ++tau) {
            Theta.block(t * l.m, tau * l.nw, l.m, l.nw) = p.theta(t, tau);
        }
    }
    return Theta;
}

/**
 * Matrix U(w) with u = U(w) lambda for the stacked input trajectory.
 *
 * Column of gamma_t[j] is the unit vector e_{tm+j}; column of
 * theta_{t,tau}(j, l) is w_tau[l] e_{tm+j}.
 */
inline MatrixXd input_jacobian(const PolicyLayout& l, const VectorXd& w) {
    detail::require_len(w, l.nw * l.M, "input_jacobian: disturbance");
    MatrixXd U = MatrixXd::Zero(l.m * l.M, l.dim());
    U.leftCols(l.m * l.M).setIdentity();
    for (Index t = 1; t < l.M; ++t) {
        for (Index tau = 0; tau < t; ++tau) {
            const Index off = l.theta_offset(t, tau);
            for (Index j = 0; j < l.m; ++j) {
                for (Index c = 0; c < l.nw; ++c) {
                    U(t * l.m + j, off + j * l.nw + c) = w(tau * l.nw + c);
                }
            }
        }
    }
    return U;
}

inline VectorXd input_map(const PolicyParams& p, const DisturbanceTrajectory& w) {
    detail::check_params(p);
    detail::require_len(w, p.layout.nw * p.layout.M, "input_map: disturbance");
    const auto& l = p.layout;
    VectorXd u = p.gamma;
    for (Index t = 1; t < l.M; ++t) {
        for (Index tau = 0; tau < t; ++tau) {
            u.segment(t * l.m, l.m) += p.theta(t, tau) * w.segment(tau * l.nw, l.nw);
        }
    }
    return u;
}

inline VectorXd state_map(const StackedDynamics& sd, const PolicyParams& p, const VectorXd& x0,
                          const DisturbanceTrajectory& w) {
    if (!(layout_of(sd) == p.layout)) {
        throw DimensionError("state_map: policy layout does not match stacked dynamics");
    }
    detail::require_len(x0, sd.n, "state_map: initial state");
    return sd.F * x0 + sd.G * input_map(p, w) + sd.H * w;
}

/// w = Bw^+ (x_next - A x - B u); exact whenever the residual lies in range(Bw).
inline VectorXd recover_disturbance(const LtiSystem& sys, const VectorXd& x_next,
                                    const VectorXd& x, const VectorXd& u) {
    detail::require_len(x_next, sys.n(), "recover_disturbance: next state");
    detail::require_len(x, sys.n(), "recover_disturbance: state");
    detail::require_len(u, sys.m(), "recover_disturbance: input");
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(sys.Bw());
    cod.setThreshold(1e-10);
    const VectorXd r = x_next - sys.A() * x - sys.B() * u;
    return cod.solve(r);
}

}  // namespace srx

#endif  // SRX_POLICY_HPP
