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
#ifndef SRX_QP_HPP
#define SRX_QP_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"

namespace srx {

// Every QP here is   min z' P z + q' z   s.t.   A z <= b,
// matching the lambda' P lambda + q' lambda convention of the cost module.

enum class QpStatus { Solved, MaxIterations, NumericalBreakdown };

inline const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::Solved: return "solved";
        case QpStatus::MaxIterations: return "max_iterations";
        case QpStatus::NumericalBreakdown: return "numerical_breakdown";
    }
    return "unknown";
}

struct QpSettings {
    double tolerance = 1e-8;
    int max_iterations = 200;
};

struct QpResult {
    VectorXd z;
    VectorXd y;  // inequality multipliers, >= 0
    QpStatus status = QpStatus::MaxIterations;
    int iterations = 0;
    double primal_residual = 0.0;  // max(A z - b)_+
    double dual_residual = 0.0;    // ||2 P z + q + A' y||_inf
    double gap = 0.0;              // |y' (b - A z)|
    double objective = 0.0;
};

namespace detail {

inline double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

inline double max_step(const VectorXd& v, const VectorXd& dv) {
    double a = 1.0;
    for (Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) {
            a = std::min(a, -v(i) / dv(i));
        }
    }
    return a;
}

inline void check_qp_data(const MatrixXd& P, const VectorXd& q, const MatrixXd& A,
                          const VectorXd& b) {
    const Index n = q.size();
    if (P.rows() != n || P.cols() != n) {
        throw DimensionError("qp: P is " + shape(P) + ", q has length " + std::to_string(n));
    }
    if (A.cols() != n || A.rows() != b.size()) {
        throw DimensionError("qp: A is " + shape(A) + ", b has length " + std::to_string(b.size()));
    }
    if (!P.allFinite() || !q.allFinite() || !A.allFinite() || !b.allFinite()) {
        throw InvalidArgument("qp: non-finite problem data");
    }
}

}  // namespace detail

/**
 * Dense primal-dual interior point method with Mehrotra predictor-corrector.
 *
 * Newton systems are reduced to the normal equations
 * (2P + A' diag(y/s) A) dz = r and factored with Cholesky; a tiny diagonal
 * shift plus iterative refinement covers semidefinite P with directions that
 * no constraint touches. Deterministic for identical inputs.
 */
inline QpResult solve_qp(const MatrixXd& P, const VectorXd& q, const MatrixXd& A, const VectorXd& b,
                         const QpSettings& settings = {}) {
    detail::check_qp_data(P, q, A, b);
    const Index n = q.size();
    const Index mc = b.size();
    const MatrixXd H = 2.0 * P;
    const double eps = settings.tolerance;
    const double bnorm = detail::inf_norm(b);
    const double qnorm = detail::inf_norm(q);

    double scale = 1.0 + (n > 0 ? H.diagonal().cwiseAbs().maxCoeff() : 0.0);
    if (mc > 0) {
        scale += A.colwise().squaredNorm().maxCoeff();
    }
    const double shift = 1e-13 * scale;
    const double heavy = 1e8 * scale;

    QpResult res;
    res.z = VectorXd::Zero(n);
    res.y = VectorXd::Zero(mc);

    auto finish = [&](const VectorXd& z, const VectorXd& y) {
        const VectorXd Az = A * z;
        res.z = z;
        res.y = y;
        res.primal_residual = mc > 0 ? std::max(0.0, (Az - b).maxCoeff()) : 0.0;
        res.dual_residual = detail::inf_norm(H * z + q + A.transpose() * y);
        res.gap = mc > 0 ? std::abs(y.dot(b - Az)) : 0.0;
        res.objective = z.dot(P * z) + q.dot(z);
    };

    // Cholesky of K + shift I, retried with growing shifts when round-off makes the
    // barrier-weighted matrix numerically indefinite. Refinement is against K itself.
    auto factorize = [&](const MatrixXd& K, Eigen::LLT<MatrixXd>& llt) -> bool {
        double sh = shift;
        for (int attempt = 0; attempt < 12; ++attempt, sh *= 10.0) {
            MatrixXd Ks = K;
            Ks.diagonal().array() += sh;
            llt.compute(Ks);
            if (llt.info() == Eigen::Success) {
                return true;
            }
        }
        return false;
    };
    auto refine = [](const Eigen::LLT<MatrixXd>& llt, const MatrixXd& K, const VectorXd& rhs) {
        VectorXd out = llt.solve(rhs);
        for (int it = 0; it < 2; ++it) out += llt.solve(rhs - K * out);
        return out;
    };
    auto factor_solve = [&](const MatrixXd& K, const VectorXd& rhs, VectorXd& out) -> bool {
        Eigen::LLT<MatrixXd> llt;
        if (!factorize(K, llt)) {
            return false;
        }
        out = refine(llt, K, rhs);
        return out.allFinite();
    };

    if (mc == 0) {
        VectorXd z;
        if (!factor_solve(H, -q, z)) {
            res.status = QpStatus::NumericalBreakdown;
            return res;
        }
        finish(z, VectorXd::Zero(0));
        res.iterations = 1;
        res.status = res.dual_residual <= eps * (1.0 + qnorm) * 1e2 ? QpStatus::Solved
                                                                  : QpStatus::NumericalBreakdown;
        return res;
    }

    // Starting point: regularized least-squares fit of the constraints.
    VectorXd z;
    {
        MatrixXd K0 = H;
        K0.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
        K0.triangularView<Eigen::StrictlyUpper>() = K0.transpose();
        if (!factor_solve(K0, -q + A.transpose() * b, z)) {
            z = VectorXd::Zero(n);
        }
    }
    VectorXd s = b - A * z;
    VectorXd y = VectorXd::Ones(mc);
    {
        const double smin = s.minCoeff();
        const double lift = std::max(1.0, 1.0 + detail::inf_norm(s) * 1e-2);
        if (smin < lift) {
            s.array() += lift - std::min(smin, 0.0);
        }
        s = s.cwiseMax(lift);
    }

    for (int k = 0; k < settings.max_iterations; ++k) {
        const VectorXd Az = A * z;
        const VectorXd rd = H * z + q + A.transpose() * y;
        const VectorXd rp = Az + s - b;
        const double mu = s.dot(y) / static_cast<double>(mc);
        const double obj = z.dot(P * z) + q.dot(z);

        const double pres = detail::inf_norm(rp);
        const double dscale =
            1.0 + std::max({qnorm, detail::inf_norm(H * z), detail::inf_norm(A.transpose() * y)});
        const double dres = detail::inf_norm(rd);
        if (pres <= eps * (1.0 + bnorm) && dres <= eps * dscale &&
            s.dot(y) <= eps * (1.0 + std::abs(obj))) {
            finish(z, y);
            res.iterations = k;
            res.status = QpStatus::Solved;
            return res;
        }

        // Rows with a huge barrier weight y/s (nearly active) would wreck the
        // conditioning of the normal matrix; they are kept in an augmented
        // system [K_r, A_a'; A_a, -S_a/Y_a] instead.
        const VectorXd D = y.cwiseQuotient(s);
        std::vector<Index> act;
        VectorXd Dr = D;
        for (Index i = 0; i < mc; ++i) {
            if (D(i) > heavy) {
                act.push_back(i);
                Dr(i) = 0.0;
            }
        }
        const Index na = static_cast<Index>(act.size());
        MatrixXd K = H;
        {
            const MatrixXd As = Dr.cwiseSqrt().asDiagonal() * A;
            K.selfadjointView<Eigen::Lower>().rankUpdate(As.transpose());
            K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
        }
        Eigen::LLT<MatrixXd> llt;
        Eigen::PartialPivLU<MatrixXd> lu;
        MatrixXd Aug;
        bool factored = true;
        if (na == 0) {
            factored = factorize(K, llt);
        } else {
            Aug = MatrixXd::Zero(n + na, n + na);
            Aug.topLeftCorner(n, n) = K;
            Aug.topLeftCorner(n, n).diagonal().array() += shift;
            for (Index j = 0; j < na; ++j) {
                const Index i = act[static_cast<std::size_t>(j)];
                Aug.block(0, n + j, n, 1) = A.row(i).transpose();
                Aug.block(n + j, 0, 1, n) = A.row(i);
                Aug(n + j, n + j) = -s(i) / y(i);
            }
            lu.compute(Aug);
        }
        if (!factored) {
            finish(z, y);
            res.iterations = k;
            res.status = QpStatus::NumericalBreakdown;
            return res;
        }
        auto solve_dir = [&](const VectorXd& rc, VectorXd& dz, VectorXd& dy, VectorXd& ds) {
            // rc is the complementarity right-hand side: Y ds + S dy = rc.
            const VectorXd rcs = rc.cwiseQuotient(s);
            if (na == 0) {
                const VectorXd rhs = -rd - A.transpose() * (D.cwiseProduct(rp) + rcs);
                dz = refine(llt, K, rhs);
                const VectorXd Adz = A * dz;
                dy = D.cwiseProduct(Adz + rp) + rcs;
                ds = -rp - Adz;
                return;
            }
            VectorXd w = Dr.cwiseProduct(rp) + rcs;
            for (Index i : act) w(i) = 0.0;
            VectorXd rhs(n + na);
            rhs.head(n) = -rd - A.transpose() * w;
            for (Index j = 0; j < na; ++j) {
                const Index i = act[static_cast<std::size_t>(j)];
                rhs(n + j) = -rp(i) - rc(i) / y(i);
            }
            VectorXd sol = lu.solve(rhs);
            for (int it = 0; it < 2; ++it) sol += lu.solve(rhs - Aug * sol);
            dz = sol.head(n);
            const VectorXd Adz = A * dz;
            dy = Dr.cwiseProduct(Adz + rp) + rcs;
            for (Index j = 0; j < na; ++j) {
                dy(act[static_cast<std::size_t>(j)]) = sol(n + j);
            }
            ds = -rp - Adz;
        };

        VectorXd dz, dy, ds;
        solve_dir(-s.cwiseProduct(y), dz, dy, ds);
        const double a_aff = std::min(detail::max_step(s, ds), detail::max_step(y, dy));
        const double mu_aff = (s + a_aff * ds).dot(y + a_aff * dy) / static_cast<double>(mc);
        const double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);

        const VectorXd rc =
            -s.cwiseProduct(y) - ds.cwiseProduct(dy) + VectorXd::Constant(mc, sigma * mu);
        solve_dir(rc, dz, dy, ds);
        const double a_max = std::min(detail::max_step(s, ds), detail::max_step(y, dy));
        const double alpha = std::min(1.0, 0.99 * a_max);
        if (!dz.allFinite() || !dy.allFinite() || !(alpha > 0.0)) {
            finish(z, y);
            res.iterations = k;
            res.status = QpStatus::NumericalBreakdown;
            return res;
        }
        z += alpha * dz;
        y += alpha * dy;
        s += alpha * ds;
        // Keep strictly interior despite round-off.
        s = s.cwiseMax(std::numeric_limits<double>::min());
        y = y.cwiseMax(std::numeric_limits<double>::min());
        res.iterations = k + 1;
    }
    finish(z, y);
    res.status = QpStatus::MaxIterations;
    return res;
}

/// Throwing wrapper: SolverError unless the IPM reports Solved.
inline QpResult solve_qp_or_throw(const MatrixXd& P, const VectorXd& q, const MatrixXd& A,
                                  const VectorXd& b, const QpSettings& settings = {}) {
    QpResult r = solve_qp(P, q, A, b, settings);
    if (r.status != QpStatus::Solved) {
        throw SolverError(r.status == QpStatus::MaxIterations ? SolverError::Kind::MaxIterations
                                                              : SolverError::Kind::NumericalBreakdown,
                          std::string("qp: ") + to_string(r.status) + " after " +
                              std::to_string(r.iterations) + " iterations",
                          r.primal_residual, r.dual_residual, r.gap);
    }
    return r;
}

struct AdmmSettings {
    double rho = 0.1;
    double sigma = 1e-8;
    double alpha = 1.6;
    double tolerance = 1e-10;
    int max_iterations = 400000;
};

/**
 * Operator-splitting (ADMM) solver for the same problem class.
 *
 * Independent of the interior point method; used to cross-check it.
 * rho is kept fixed so a single factorization serves all iterations.
 */
inline QpResult solve_qp_admm(const MatrixXd& P, const VectorXd& q, const MatrixXd& A,
                              const VectorXd& b, const AdmmSettings& st = {}) {
    detail::check_qp_data(P, q, A, b);
    const Index n = q.size();
    const MatrixXd H = 2.0 * P;
    MatrixXd K = H + st.sigma * MatrixXd::Identity(n, n) + st.rho * A.transpose() * A;
    Eigen::LLT<MatrixXd> llt(K);
    QpResult res;
    if (llt.info() != Eigen::Success) {
        res.status = QpStatus::NumericalBreakdown;
        return res;
    }
    VectorXd x = VectorXd::Zero(n);
    VectorXd zc = VectorXd::Zero(b.size());
    VectorXd y = VectorXd::Zero(b.size());
    const double bnorm = detail::inf_norm(b);
    for (int k = 0; k < st.max_iterations; ++k) {
        const VectorXd xt = llt.solve(st.sigma * x - q + A.transpose() * (st.rho * zc - y));
        const VectorXd zt = A * xt;
        x = st.alpha * xt + (1.0 - st.alpha) * x;
        const VectorXd zr = st.alpha * zt + (1.0 - st.alpha) * zc;
        const VectorXd znew = (zr + y / st.rho).cwiseMin(b);
        y += st.rho * (zr - znew);
        zc = znew;
        res.iterations = k + 1;
        if (k % 50 == 0 || k + 1 == st.max_iterations) {
            const double rp = detail::inf_norm(A * x - zc);
            const double rd = detail::inf_norm(H * x + q + A.transpose() * y);
            if (rp <= st.tolerance * (1.0 + bnorm) && rd <= st.tolerance * (1.0 + detail::inf_norm(q))) {
                res.status = QpStatus::Solved;
                break;
            }
        }
    }
    res.z = x;
    res.y = y.cwiseMax(0.0);
    const VectorXd Az = A * x;
    res.primal_residual = b.size() > 0 ? std::max(0.0, (Az - b).maxCoeff()) : 0.0;
    res.dual_residual = detail::inf_norm(H * x + q + A.transpose() * res.y);
    res.gap = b.size() > 0 ? std::abs(res.y.dot(b - Az)) : 0.0;
    res.objective = x.dot(P * x) + q.dot(x);
    return res;
}

/**
 * Source of constraint rows too numerous to hand to the IPM at once.
 *
 * Rows come in `num_groups()` contiguous groups of `group_size()` rows, so
 * that violated rows can be picked evenly across groups.
 */
class RowSource {
public:
    virtual ~RowSource() = default;
    virtual Index num_groups() const = 0;
    virtual Index group_size() const = 0;
    /// Residuals a_i' z - b_i of every row, group-major.
    virtual VectorXd residuals(const VectorXd& z) const = 0;
    virtual std::pair<VectorXd, double> row(Index i) const = 0;
};

struct CuttingPlaneSettings {
    QpSettings qp;
    /// Rows added per group per round.
    Index per_group = 8;
    /// A row counts as violated above feasibility_tol * (1 + |b|_inf).
    double feasibility_tol = 1e-9;
    int max_rounds = 200;
};

struct CuttingPlaneResult {
    QpResult qp;
    int rounds = 0;
    Index working_rows = 0;
    double max_violation = 0.0;  // over all rows, fixed and generated
};

/**
 * Constraint generation: solve over the fixed rows plus a working subset of
 * the source rows, add the most violated source rows, repeat until every row
 * holds. The last subproblem optimum is then optimal for the full problem.
 */
inline CuttingPlaneResult solve_qp_generated(const MatrixXd& P, const VectorXd& q,
                                             const MatrixXd& A_fixed, const VectorXd& b_fixed,
                                             const RowSource& source,
                                             const CuttingPlaneSettings& st = {}) {
    const Index n = q.size();
    const Index total = source.num_groups() * source.group_size();
    std::vector<char> in_set(static_cast<std::size_t>(total), 0);
    std::vector<VectorXd> rows;
    std::vector<double> rhs;
    CuttingPlaneResult out;

    double bscale = 1.0 + detail::inf_norm(b_fixed);
    for (int round = 0; round < st.max_rounds; ++round) {
        const Index mw = b_fixed.size() + static_cast<Index>(rows.size());
        MatrixXd A(mw, n);
        VectorXd b(mw);
        A.topRows(b_fixed.size()) = A_fixed;
        b.head(b_fixed.size()) = b_fixed;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            A.row(b_fixed.size() + static_cast<Index>(i)) = rows[i].transpose();
            b(b_fixed.size() + static_cast<Index>(i)) = rhs[i];
        }
        out.qp = solve_qp(P, q, A, b, st.qp);
        out.rounds = round + 1;
        out.working_rows = mw;
        if (out.qp.status != QpStatus::Solved) {
            throw SolverError(out.qp.status == QpStatus::MaxIterations
                                  ? SolverError::Kind::MaxIterations
                                  : SolverError::Kind::NumericalBreakdown,
                              std::string("qp: ") + to_string(out.qp.status) + " in round " +
                                  std::to_string(round + 1) + " with " + std::to_string(mw) +
                                  " rows",
                              out.qp.primal_residual, out.qp.dual_residual, out.qp.gap);
        }
        const VectorXd r = source.residuals(out.qp.z);
        const double tol = st.feasibility_tol * bscale;
        out.max_violation = std::max(out.qp.primal_residual, total > 0 ? r.maxCoeff() : 0.0);

        Index added = 0;
        std::vector<std::pair<double, Index>> cand;
        for (Index g = 0; g < source.num_groups(); ++g) {
            cand.clear();
            for (Index k = 0; k < source.group_size(); ++k) {
                const Index i = g * source.group_size() + k;
                if (r(i) > tol && !in_set[static_cast<std::size_t>(i)]) {
                    cand.emplace_back(r(i), i);
                }
            }
            const Index take = std::min<Index>(st.per_group, static_cast<Index>(cand.size()));
            std::partial_sort(cand.begin(), cand.begin() + take, cand.end(),
                              [](const auto& a, const auto& b2) {
                                  return a.first > b2.first || (a.first == b2.first && a.second < b2.second);
                              });
            for (Index j = 0; j < take; ++j) {
                const Index i = cand[static_cast<std::size_t>(j)].second;
                auto [a, bi] = source.row(i);
                bscale = std::max(bscale, 1.0 + std::abs(bi));
                rows.push_back(std::move(a));
                rhs.push_back(bi);
                in_set[static_cast<std::size_t>(i)] = 1;
                ++added;
            }
        }
        if (added == 0) {
            return out;
        }
    }
    throw SolverError(SolverError::Kind::MaxIterations,
                      "constraint generation did not converge in " + std::to_string(st.max_rounds) +
                          " rounds",
                      out.max_violation, out.qp.dual_residual, out.qp.gap);
}

}  // namespace srx

#endif  // SRX_QP_HPP
