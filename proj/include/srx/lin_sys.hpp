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
#ifndef SRX_LIN_SYS_HPP
#define SRX_LIN_SYS_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "srx/errors.hpp"

namespace srx {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline bool all_finite(const MatrixXd& m) { return m.allFinite(); }

inline std::string shape(const MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_len(const VectorXd& v, Index n, const char* what) {
    if (v.size() != n) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                             ", got " + std::to_string(v.size()));
    }
}

}  // namespace detail

/**
 * Discrete-time LTI plant x+ = A x + B u + Bw w.
 *
 * Construction validates shapes, finiteness, n_w <= n and that Bw has full
 * column rank, so every LtiSystem in circulation satisfies those.
 */
class LtiSystem {
public:
    LtiSystem(MatrixXd A, MatrixXd B, MatrixXd Bw)
        : A_(std::move(A)), B_(std::move(B)), Bw_(std::move(Bw)) {
        const Index n = A_.rows();
        if (n == 0 || A_.cols() != n) {
            throw InvalidModel("A must be square and non-empty, got " + detail::shape(A_));
        }
        if (B_.rows() != n || B_.cols() == 0) {
            throw InvalidModel("B must be " + std::to_string(n) + "xm with m >= 1, got " +
                               detail::shape(B_));
        }
        if (Bw_.rows() != n || Bw_.cols() == 0) {
            throw InvalidModel("Bw must be " + std::to_string(n) + "xn_w with n_w >= 1, got " +
                               detail::shape(Bw_));
        }
        if (!A_.allFinite() || !B_.allFinite() || !Bw_.allFinite()) {
            throw InvalidModel("system matrices contain non-finite entries");
        }
        if (Bw_.cols() > n) {
            throw InvalidModel("n_w must not exceed n");
        }
        Eigen::JacobiSVD<MatrixXd> svd(Bw_);
        const auto& sv = svd.singularValues();
        const double tol = 1e-10 * sv(0);
        if (sv(0) == 0.0 || sv(sv.size() - 1) <= tol) {
            throw InvalidModel("Bw must have full column rank");
        }
    }

    const MatrixXd& A() const noexcept { return A_; }
    const MatrixXd& B() const noexcept { return B_; }
    const MatrixXd& Bw() const noexcept { return Bw_; }
    Index n() const noexcept { return A_.rows(); }
    Index m() const noexcept { return B_.cols(); }
    Index nw() const noexcept { return Bw_.cols(); }

private:
    MatrixXd A_;
    MatrixXd B_;
    MatrixXd Bw_;
};

/// x = F x0 + G u + H w over a horizon of M steps (x = [x_1; ...; x_M]).
struct StackedDynamics {
    MatrixXd F;  // (nM) x n
    MatrixXd G;  // (nM) x (mM)
    MatrixXd H;  // (nM) x (n_w M)
    Index M = 0;
    Index n = 0;
    Index m = 0;
    Index nw = 0;
};

/**
 * Zero-order-hold discretization: A = exp(Ac Ts), B = int_0^Ts exp(Ac s) ds Bc.
 *
 * Both blocks come out of one exponential of [[Ac, Bc], [0, 0]] Ts.
 */
inline std::pair<MatrixXd, MatrixXd> zoh_discretize(const MatrixXd& Ac, const MatrixXd& Bc,
                                                    double Ts) {
    if (!(Ts > 0.0) || !std::isfinite(Ts)) {
        throw InvalidModel("sampling time must be positive and finite");
    }
    if (!Ac.allFinite() || !Bc.allFinite()) {
        throw InvalidModel("continuous-time matrices contain non-finite entries");
    }
    const Index n = Ac.rows();
    const Index m = Bc.cols();
    if (Ac.cols() != n || Bc.rows() != n) {
        throw DimensionError("zoh_discretize: Ac is " + detail::shape(Ac) + ", Bc is " +
                             detail::shape(Bc));
    }
    MatrixXd aug = MatrixXd::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = Ac * Ts;
    aug.topRightCorner(n, m) = Bc * Ts;
    const MatrixXd e = aug.exp();
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

inline StackedDynamics build_stacked(const LtiSystem& sys, Index M) {
    if (M < 1) {
        throw InvalidArgument("horizon M must be >= 1");
    }
    const Index n = sys.n(), m = sys.m(), nw = sys.nw();
    StackedDynamics sd;
    sd.M = M;
    sd.n = n;
    sd.m = m;
    sd.nw = nw;
    sd.F.resize(n * M, n);
    sd.G = MatrixXd::Zero(n * M, m * M);
    sd.H = MatrixXd::Zero(n * M, nw * M);

    // powB[k] = A^k B, powBw[k] = A^k Bw, filled incrementally.
    std::vector<MatrixXd> powB(M), powBw(M);
    MatrixXd Ak = MatrixXd::Identity(n, n);
    for (Index k = 0; k < M; ++k) {
        powB[k] = Ak * sys.B();
        powBw[k] = Ak * sys.Bw();
        Ak = sys.A() * Ak;
        sd.F.middleRows(k * n, n) = Ak;
    }
    for (Index i = 0; i < M; ++i) {
        for (Index j = 0; j <= i; ++j) {
            sd.G.block(i * n, j * m, n, m) = powB[i - j];
            sd.H.block(i * n, j * nw, n, nw) = powBw[i - j];
        }
    }
    return sd;
}

inline VectorXd simulate_step(const LtiSystem& sys, const VectorXd& x, const VectorXd& u,
                              const VectorXd& w) {
    detail::require_len(x, sys.n(), "simulate_step: state");
    detail::require_len(u, sys.m(), "simulate_step: input");
    detail::require_len(w, sys.nw(), "simulate_step: disturbance");
    return sys.A() * x + sys.B() * u + sys.Bw() * w;
}

}  // namespace srx

#endif  // SRX_LIN_SYS_HPP
