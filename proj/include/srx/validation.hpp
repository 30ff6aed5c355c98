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
#ifndef SRX_VALIDATION_HPP
#define SRX_VALIDATION_HPP

#include <Eigen/Dense>
#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "srx/constraints.hpp"
#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"
#include "srx/policy.hpp"
#include "srx/scenarios.hpp"

namespace srx {

struct ViolationEstimate {
    double eps_hat = 0.0;
    Index n_trials = 0;
    Index n_violations = 0;
    double confidence = 0.99;
    double ci_low = 0.0;
    double ci_high = 1.0;
    /// Violation rate per atom, f atoms first, then g atoms.
    VectorXd per_constraint_rates;
};

/// Exact (Clopper-Pearson) two-sided interval for k successes in n trials.
inline std::pair<double, double> clopper_pearson(Index k, Index n, double confidence = 0.99) {
    if (n < 1 || k < 0 || k > n) {
        throw InvalidArgument("clopper_pearson: need 0 <= k <= n, n >= 1");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw InvalidArgument("clopper_pearson: confidence must lie in (0, 1)");
    }
    const double alpha = 1.0 - confidence;
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    double lo = 0.0;
    double hi = 1.0;
    if (k > 0) {
        lo = boost::math::quantile(boost::math::beta_distribution<double>(kd, nd - kd + 1.0),
                                   alpha / 2.0);
    }
    if (k < n) {
        hi = boost::math::quantile(boost::math::beta_distribution<double>(kd + 1.0, nd - kd),
                                   1.0 - alpha / 2.0);
    }
    return {lo, hi};
}

namespace detail {

inline constexpr Index kTrialBatch = 4096;

/// Stacked trajectories [x; u] for the columns of W.
inline MatrixXd trajectory_batch(const StackedDynamics& sd, const PolicyParams& p,
                                 const VectorXd& x0, const MatrixXd& W) {
    const MatrixXd Theta = theta_matrix(p);
    MatrixXd Z((sd.n + sd.m) * sd.M, W.cols());
    Z.topRows(sd.n * sd.M) = (sd.G * Theta + sd.H) * W;
    Z.topRows(sd.n * sd.M).colwise() += sd.F * x0 + sd.G * p.gamma;
    Z.bottomRows(sd.m * sd.M) = Theta * W;
    Z.bottomRows(sd.m * sd.M).colwise() += p.gamma;
    return Z;
}

/// Atom values (before the bound) for every column of Z.
inline Eigen::RowVectorXd atom_values(const ConstraintAtom& a, const MatrixXd& Z) {
    MatrixXd V = a.A * Z;
    V.colwise() += a.b;
    if (a.kind == ConstraintAtom::Kind::Affine) {
        return V.row(0);
    }
    return V.cwiseAbs().colwise().maxCoeff();
}

inline void check_validation_inputs(const StackedDynamics& sd, const VectorXd& x0,
                                    const PolicyParams& p, const Sampler& sampler,
                                    Index n_trials, const char* who) {
    if (n_trials < 1) {
        throw InvalidArgument(std::string(who) + ": n_trials must be >= 1");
    }
    if (!(layout_of(sd) == p.layout)) {
        throw DimensionError(std::string(who) + ": policy layout does not match stacked dynamics");
    }
    require_len(x0, sd.n, who);
    if (sampler.dim != sd.nw * sd.M) {
        throw DimensionError(std::string(who) + ": sampler draws length " +
                             std::to_string(sampler.dim) + ", expected " +
                             std::to_string(sd.nw * sd.M));
    }
}

}  // namespace detail

/**
 * Monte-Carlo estimate of P{f > 0 or g > h} on fresh draws.
 *
 * Trials are drawn in order from one generator seeded with `seed`, so trial k
 * is column k of draw_samples(sampler, n_trials, seed).
 */
inline ViolationEstimate estimate_violation(const StackedDynamics& sd, const VectorXd& x0,
                                            const ConstraintSpec& spec, const PolicyParams& p,
                                            const VectorXd& h, const Sampler& sampler,
                                            Index n_trials, std::uint64_t seed,
                                            double confidence = 0.99) {
    detail::check_validation_inputs(sd, x0, p, sampler, n_trials, "estimate_violation");
    validate(spec, sd);
    if (h.size() != spec.p_y) {
        throw DimensionError("estimate_violation: h has length " + std::to_string(h.size()) +
                             ", expected " + std::to_string(spec.p_y));
    }
    const Index nf = static_cast<Index>(spec.f_atoms.size());
    const Index ng = static_cast<Index>(spec.g_atoms.size());
    VectorXd atom_hits = VectorXd::Zero(nf + ng);
    Index hits = 0;

    Rng rng(seed);
    for (Index start = 0; start < n_trials; start += detail::kTrialBatch) {
        const Index b = std::min(detail::kTrialBatch, n_trials - start);
        MatrixXd W(sampler.dim, b);
        for (Index k = 0; k < b; ++k) {
            W.col(k) = sampler.draw(rng);
        }
        const MatrixXd Z = detail::trajectory_batch(sd, p, x0, W);
        Eigen::Array<bool, 1, Eigen::Dynamic> any = Eigen::Array<bool, 1, Eigen::Dynamic>::Constant(b, false);
        auto account = [&](const ConstraintAtom& a, double rhs, Index idx) {
            const auto viol = (detail::atom_values(a, Z).array() > rhs).eval();
            atom_hits(idx) += static_cast<double>(viol.count());
            any = any || viol;
        };
        for (Index i = 0; i < nf; ++i) {
            const auto& a = spec.f_atoms[static_cast<std::size_t>(i)];
            account(a, a.bound, i);
        }
        for (Index i = 0; i < ng; ++i) {
            const auto& a = spec.g_atoms[static_cast<std::size_t>(i)];
            account(a, a.bound + (a.relax_slot ? h(*a.relax_slot) : 0.0), nf + i);
        }
        hits += any.count();
    }

    ViolationEstimate est;
    est.n_trials = n_trials;
    est.n_violations = hits;
    est.confidence = confidence;
    est.eps_hat = static_cast<double>(hits) / static_cast<double>(n_trials);
    std::tie(est.ci_low, est.ci_high) = clopper_pearson(hits, n_trials, confidence);
    est.per_constraint_rates = atom_hits / static_cast<double>(n_trials);
    return est;
}

/// Sorted samples of ||C x_i||_inf per time step i = 1..M.
struct CdfTable {
    std::vector<VectorXd> values;  // values[i - 1], ascending

    Index steps() const noexcept { return static_cast<Index>(values.size()); }
    Index trials() const noexcept { return values.empty() ? 0 : values.front().size(); }

    /// Fraction of samples at step i that are <= v.
    double cumulative(Index i, double v) const {
        const VectorXd& s = values.at(static_cast<std::size_t>(i - 1));
        const auto* end = s.data() + s.size();
        const auto n = std::upper_bound(s.data(), end, v) - s.data();
        return static_cast<double>(n) / static_cast<double>(s.size());
    }
};

inline CdfTable empirical_cdf(const StackedDynamics& sd, const VectorXd& x0, const MatrixXd& C,
                              const PolicyParams& p, const Sampler& sampler, Index n_trials,
                              std::uint64_t seed) {
    detail::check_validation_inputs(sd, x0, p, sampler, n_trials, "empirical_cdf");
    if (C.cols() != sd.n || C.rows() == 0) {
        throw DimensionError("empirical_cdf: output matrix is " + detail::shape(C) +
                             ", expected k x " + std::to_string(sd.n));
    }
    CdfTable table;
    table.values.assign(static_cast<std::size_t>(sd.M), VectorXd(n_trials));
    Rng rng(seed);
    for (Index start = 0; start < n_trials; start += detail::kTrialBatch) {
        const Index b = std::min(detail::kTrialBatch, n_trials - start);
        MatrixXd W(sampler.dim, b);
        for (Index k = 0; k < b; ++k) {
            W.col(k) = sampler.draw(rng);
        }
        const MatrixXd Z = detail::trajectory_batch(sd, p, x0, W);
        for (Index t = 0; t < sd.M; ++t) {
            table.values[static_cast<std::size_t>(t)].segment(start, b) =
                (C * Z.middleRows(t * sd.n, sd.n)).cwiseAbs().colwise().maxCoeff().transpose();
        }
    }
    for (auto& v : table.values) {
        std::sort(v.data(), v.data() + v.size());
    }
    return table;
}

/**
 * Columns time_step, value, cumulative_prob. With max_points > 0 each step is
 * thinned to the order statistics at levels j / max_points (the last sample
 * always included); otherwise one row per sample.
 */
inline void write_cdf_csv(std::ostream& os, const CdfTable& table, Index max_points = 0) {
    os << "time_step,value,cumulative_prob\n";
    os.precision(17);
    for (Index i = 1; i <= table.steps(); ++i) {
        const VectorXd& s = table.values[static_cast<std::size_t>(i - 1)];
        const Index n = s.size();
        const Index points = max_points > 0 ? std::min(max_points, n) : n;
        for (Index j = 1; j <= points; ++j) {
            // Smallest order statistic whose level reaches j / points.
            const Index k = (j * n + points - 1) / points - 1;
            os << i << ',' << s(k) << ',' << static_cast<double>(k + 1) / static_cast<double>(n)
               << '\n';
        }
    }
}

}  // namespace srx

#endif  // SRX_VALIDATION_HPP
