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
// Independent reference computations shared by the unit tests.
#ifndef SRX_TESTS_ORACLES_HPP
#define SRX_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

#include "srx/srx.hpp"

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd randn(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> nd(0.0, 1.0);
    MatrixXd m(r, c);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = nd(rng);
    }
    return m;
}

inline VectorXd randn(std::mt19937_64& rng, Index n) { return randn(rng, n, 1); }

inline Index uniform_int(std::mt19937_64& rng, Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

/// A with spectral radius around 0.9 so powers up to M ~ 10 stay O(1).
inline srx::LtiSystem random_system(std::mt19937_64& rng, Index n, Index m, Index nw) {
    MatrixXd A = randn(rng, n, n);
    const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 0.0) {
        A *= 0.9 / rho;
    }
    return srx::LtiSystem(A, randn(rng, n, m), randn(rng, n, nw));
}

/// Step-by-step simulation; returns [x_1; ...; x_M].
inline VectorXd rollout(const srx::LtiSystem& sys, const VectorXd& x0, const VectorXd& u,
                        const VectorXd& w, Index M) {
    VectorXd xs(sys.n() * M);
    VectorXd x = x0;
    for (Index t = 0; t < M; ++t) {
        x = sys.A() * x + sys.B() * u.segment(t * sys.m(), sys.m()) +
            sys.Bw() * w.segment(t * sys.nw(), sys.nw());
        xs.segment(t * sys.n(), sys.n()) = x;
    }
    return xs;
}

/// Input of the disturbance feedback policy evaluated term by term.
inline VectorXd policy_input(const srx::PolicyParams& p, const VectorXd& w) {
    const auto& l = p.layout;
    VectorXd u(l.m * l.M);
    for (Index t = 0; t < l.M; ++t) {
        VectorXd ut = p.gamma.segment(t * l.m, l.m);
        for (Index tau = 0; tau < t; ++tau) {
            ut += p.theta(t, tau) * w.segment(tau * l.nw, l.nw);
        }
        u.segment(t * l.m, l.m) = ut;
    }
    return u;
}

inline srx::PolicyParams random_policy(std::mt19937_64& rng, const srx::PolicyLayout& l,
                                       double scale = 1.0) {
    return srx::unpack(scale * randn(rng, l.dim()), l);
}

inline double max_abs(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::string source_path(const std::string& rel) {
    return std::string(SRX_SOURCE_DIR) + "/" + rel;
}

}  // namespace oracle

#endif  // SRX_TESTS_ORACLES_HPP
