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
#ifndef SRX_COST_HPP
#define SRX_COST_HPP

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"
#include "srx/policy.hpp"

namespace srx {

/**
 * Weights of J = E[ sum_{t=1..M} x_t' Q x_t + sum_{t=0..M-1} u_t' R u_t ] and
 * the first two moments of the stacked disturbance.
 */
struct CostSpec {
    MatrixXd Q;   // n x n
    MatrixXd R;   // m x m
    MatrixXd S;   // (n_w M) x (n_w M), second moment E[w w']
    VectorXd mu;  // n_w M, mean of w

    /// Independent steps with per-step mean and covariance.
    static CostSpec iid(MatrixXd Q, MatrixXd R, const VectorXd& step_mean,
                        const MatrixXd& step_cov, Index M) {
        const Index nw = step_mean.size();
        if (step_cov.rows() != nw || step_cov.cols() != nw) {
            throw DimensionError("CostSpec::iid: covariance is " + detail::shape(step_cov));
        }
        CostSpec cs;
        cs.Q = std::move(Q);
        cs.R = std::move(R);
        cs.mu = step_mean.replicate(M, 1);
        cs.S = cs.mu * cs.mu.transpose();
        for (Index t = 0; t < M; ++t) {
            cs.S.block(t * nw, t * nw, nw, nw) += step_cov;
        }
        return cs;
    }
};

namespace detail {

inline bool symmetric_psd(const MatrixXd& X, double sym_tol, double eig_tol) {
    if ((X - X.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(X, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -eig_tol;
}

inline bool positive_definite(const MatrixXd& X) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (X + X.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > 0.0;
}

inline MatrixXd block_diag_repeat(const MatrixXd& X, Index M) {
    MatrixXd out = MatrixXd::Zero(X.rows() * M, X.cols() * M);
    for (Index t = 0; t < M; ++t) {
        out.block(t * X.rows(), t * X.cols(), X.rows(), X.cols()) = X;
    }
    return out;
}

/// Columns L with L L' = S - mu mu' (negative eigenvalues from round-off dropped).
inline MatrixXd covariance_factor(const CostSpec& cs) {
    const MatrixXd Sigma = cs.S - cs.mu * cs.mu.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Sigma + Sigma.transpose()));
    const VectorXd& ev = es.eigenvalues();
    const double cutoff = 1e-14 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Index keep = 0;
    for (Index i = 0; i < ev.size(); ++i) {
        keep += ev(i) > cutoff ? 1 : 0;
    }
    MatrixXd L(Sigma.rows(), keep);
    Index k = 0;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > cutoff) {
            L.col(k++) = es.eigenvectors().col(i) * std::sqrt(ev(i));
        }
    }
    return L;
}

}  // namespace detail

inline void validate(const CostSpec& cs, const StackedDynamics& sd) {
    const Index dw = sd.nw * sd.M;
    if (cs.Q.rows() != sd.n || cs.Q.cols() != sd.n) {
        throw DimensionError("cost: Q is " + detail::shape(cs.Q));
    }
    if (cs.R.rows() != sd.m || cs.R.cols() != sd.m) {
        throw DimensionError("cost: R is " + detail::shape(cs.R));
    }
    if (cs.S.rows() != dw || cs.S.cols() != dw) {
        throw DimensionError("cost: S is " + detail::shape(cs.S) + ", expected " +
                             std::to_string(dw) + " square");
    }
    detail::require_len(cs.mu, dw, "cost: mu");
    if (!detail::symmetric_psd(cs.Q, 1e-12, 1e-10) || !detail::symmetric_psd(cs.R, 1e-12, 1e-10)) {
        throw InvalidArgument("cost: Q and R must be symmetric positive semidefinite");
    }
    if (!detail::symmetric_psd(cs.S, 1e-10, 1e-10)) {
        throw InvalidArgument("cost: S must be symmetric positive semidefinite");
    }
}

/// R > 0 and E[w w'] > 0 together make J strictly convex in lambda.
inline bool strictly_convex(const CostSpec& cs) {
    return detail::positive_definite(cs.R) && detail::positive_definite(cs.S);
}

/// Closed-form expectation of J for a fixed policy.
inline double expected_cost(const CostSpec& cs, const StackedDynamics& sd, const VectorXd& x0,
                            const PolicyParams& p) {
    validate(cs, sd);
    detail::require_len(x0, sd.n, "expected_cost: initial state");
    if (!(layout_of(sd) == p.layout)) {
        throw DimensionError("expected_cost: policy layout does not match stacked dynamics");
    }
    const MatrixXd Qb = detail::block_diag_repeat(cs.Q, sd.M);
    const MatrixXd Rb = detail::block_diag_repeat(cs.R, sd.M);
    const MatrixXd Theta = theta_matrix(p);
    const MatrixXd Y = sd.G * Theta + sd.H;
    const MatrixXd Sigma = cs.S - cs.mu * cs.mu.transpose();

    const VectorXd xbar = sd.F * x0 + sd.G * p.gamma + Y * cs.mu;
    const VectorXd ubar = p.gamma + Theta * cs.mu;
    const double state_cov = (Y.transpose() * Qb * Y * Sigma).trace();
    const double input_cov = (Theta.transpose() * Rb * Theta * Sigma).trace();
    return xbar.dot(Qb * xbar) + state_cov + ubar.dot(Rb * ubar) + input_cov;
}

/// J(lambda) = lambda' P lambda + q' lambda + c.
struct QuadraticForm {
    MatrixXd P;
    VectorXd q;
    double c = 0.0;

    double operator()(const VectorXd& lambda) const {
        return lambda.dot(P * lambda) + q.dot(lambda) + c;
    }
    VectorXd gradient(const VectorXd& lambda) const { return 2.0 * (P * lambda) + q; }
};

/**
 * Quadratic form of the expected cost in lambda.
 *
 * Built from u = U(w) lambda: the mean contributes through U(mu), and each
 * covariance factor column v through the feedback part of U(v).
 */
inline QuadraticForm cost_quadratic_form(const CostSpec& cs, const StackedDynamics& sd,
                                         const VectorXd& x0) {
    validate(cs, sd);
    detail::require_len(x0, sd.n, "cost_quadratic_form: initial state");
    const PolicyLayout l = layout_of(sd);
    const Index d = l.dim();
    const Index mM = sd.m * sd.M;
    const MatrixXd Qb = detail::block_diag_repeat(cs.Q, sd.M);
    const MatrixXd Rb = detail::block_diag_repeat(cs.R, sd.M);
    const MatrixXd W = sd.G.transpose() * Qb * sd.G + Rb;  // input-space Hessian
    const MatrixXd GtQ = sd.G.transpose() * Qb;

    QuadraticForm qf;
    qf.P = MatrixXd::Zero(d, d);
    qf.q = VectorXd::Zero(d);

    const MatrixXd Umean = input_jacobian(l, cs.mu);
    const VectorXd xfree = sd.F * x0 + sd.H * cs.mu;
    qf.P += Umean.transpose() * W * Umean;
    qf.q += 2.0 * Umean.transpose() * (GtQ * xfree);
    qf.c += xfree.dot(Qb * xfree);

    const MatrixXd L = detail::covariance_factor(cs);
    for (Index k = 0; k < L.cols(); ++k) {
        MatrixXd Uv = input_jacobian(l, L.col(k));
        Uv.leftCols(mM).setZero();
        const VectorXd xv = sd.H * L.col(k);
        qf.P += Uv.transpose() * W * Uv;
        qf.q += 2.0 * Uv.transpose() * (GtQ * xv);
        qf.c += xv.dot(Qb * xv);
    }
    qf.P = 0.5 * (qf.P + qf.P.transpose());
    return qf;
}

/// Per-sample realized costs for the columns of `samples` (each of length n_w M).
inline VectorXd sampled_costs(const CostSpec& cs, const StackedDynamics& sd, const VectorXd& x0,
                              const PolicyParams& p, const MatrixXd& samples) {
    if (samples.rows() != sd.nw * sd.M || samples.cols() == 0) {
        throw DimensionError("sampled_costs: samples are " + detail::shape(samples));
    }
    detail::require_len(x0, sd.n, "sampled_costs: initial state");
    const MatrixXd Qb = detail::block_diag_repeat(cs.Q, sd.M);
    const MatrixXd Rb = detail::block_diag_repeat(cs.R, sd.M);
    const MatrixXd Theta = theta_matrix(p);
    const MatrixXd U = Theta * samples;
    const MatrixXd X = (sd.G * Theta + sd.H) * samples;
    const VectorXd xfree = sd.F * x0 + sd.G * p.gamma;
    VectorXd out(samples.cols());
    for (Index k = 0; k < samples.cols(); ++k) {
        const VectorXd x = xfree + X.col(k);
        const VectorXd u = p.gamma + U.col(k);
        out(k) = x.dot(Qb * x) + u.dot(Rb * u);
    }
    return out;
}

/// Empirical fallback for distributions known only through samples.
inline double empirical_cost(const CostSpec& cs, const StackedDynamics& sd, const VectorXd& x0,
                             const PolicyParams& p, const MatrixXd& samples) {
    return sampled_costs(cs, sd, x0, p, samples).mean();
}

}  // namespace srx

#endif  // SRX_COST_HPP
