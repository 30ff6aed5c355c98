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
#ifndef SRX_CONSTRAINTS_HPP
#define SRX_CONSTRAINTS_HPP

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"
#include "srx/policy.hpp"
#include "srx/scenarios.hpp"

namespace srx {

/**
 * One convex piece of f or g, acting on the stacked trajectory
 * z = [x_1; ...; x_M; u_0; ...; u_{M-1}] through the affine selector A z + b.
 *
 * AFFINE:   (A z + b) <= bound (+ h[slot]),  A has exactly one row.
 * INF_NORM: ||A z + b||_inf <= bound (+ h[slot]), i.e. 2 rows(A) inequalities.
 */
struct ConstraintAtom {
    enum class Kind { Affine, InfNorm };

    Kind kind = Kind::Affine;
    MatrixXd A;
    VectorXd b;
    double bound = 0.0;
    std::optional<Index> relax_slot;
    std::string label;

    static ConstraintAtom affine(const Eigen::RowVectorXd& a, double offset, double bound,
                                 std::optional<Index> slot = std::nullopt) {
        ConstraintAtom at;
        at.kind = Kind::Affine;
        at.A = a;
        at.b = VectorXd::Constant(1, offset);
        at.bound = bound;
        at.relax_slot = slot;
        return at;
    }

    static ConstraintAtom inf_norm(MatrixXd A, VectorXd b, double bound,
                                   std::optional<Index> slot = std::nullopt) {
        ConstraintAtom at;
        at.kind = Kind::InfNorm;
        at.A = std::move(A);
        at.b = std::move(b);
        at.bound = bound;
        at.relax_slot = slot;
        return at;
    }

    /// Number of scalar linear inequalities this atom expands to per scenario.
    Index num_rows() const noexcept { return kind == Kind::Affine ? 1 : 2 * A.rows(); }

    bool operator==(const ConstraintAtom& o) const {
        return kind == o.kind && A.rows() == o.A.rows() && A.cols() == o.A.cols() && A == o.A &&
               b.size() == o.b.size() && b == o.b && bound == o.bound &&
               relax_slot == o.relax_slot;
    }
};

/// f atoms (input only, never relaxed) and g atoms (relaxed through p_y slots).
struct ConstraintSpec {
    std::vector<ConstraintAtom> f_atoms;
    std::vector<ConstraintAtom> g_atoms;
    Index p_y = 0;

    bool operator==(const ConstraintSpec&) const = default;
};

inline Index trajectory_dim(const StackedDynamics& sd) { return (sd.n + sd.m) * sd.M; }

/// Selector rows C x_t for t in 1..M.
inline MatrixXd select_state(const StackedDynamics& sd, Index t, const MatrixXd& C) {
    if (t < 1 || t > sd.M) {
        throw SpecError("state(" + std::to_string(t) + "): time index must be in 1.." +
                        std::to_string(sd.M));
    }
    if (C.cols() != sd.n) {
        throw SpecError("output matrix has " + std::to_string(C.cols()) + " columns, expected " +
                        std::to_string(sd.n));
    }
    MatrixXd S = MatrixXd::Zero(C.rows(), trajectory_dim(sd));
    S.block(0, (t - 1) * sd.n, C.rows(), sd.n) = C;
    return S;
}

inline MatrixXd select_state(const StackedDynamics& sd, Index t) {
    return select_state(sd, t, MatrixXd::Identity(sd.n, sd.n));
}

/// Selector rows D u_t for t in 0..M-1.
inline MatrixXd select_input(const StackedDynamics& sd, Index t, const MatrixXd& D) {
    if (t < 0 || t >= sd.M) {
        throw SpecError("input(" + std::to_string(t) + "): time index must be in 0.." +
                        std::to_string(sd.M - 1));
    }
    if (D.cols() != sd.m) {
        throw SpecError("input selector has " + std::to_string(D.cols()) + " columns, expected " +
                        std::to_string(sd.m));
    }
    MatrixXd S = MatrixXd::Zero(D.rows(), trajectory_dim(sd));
    S.block(0, sd.n * sd.M + t * sd.m, D.rows(), sd.m) = D;
    return S;
}

inline MatrixXd select_input(const StackedDynamics& sd, Index t) {
    return select_input(sd, t, MatrixXd::Identity(sd.m, sd.m));
}

inline void validate(const ConstraintSpec& spec, const StackedDynamics& sd) {
    const Index zdim = trajectory_dim(sd);
    const Index nx = sd.n * sd.M;
    std::vector<bool> used(static_cast<std::size_t>(std::max<Index>(spec.p_y, 0)), false);
    if (spec.p_y < 0) {
        throw SpecError("p_y must be non-negative");
    }
    auto check_shape = [&](const ConstraintAtom& a, const std::string& where) {
        if (a.A.cols() != zdim) {
            throw SpecError(where + ": selector has " + std::to_string(a.A.cols()) +
                            " columns, expected " + std::to_string(zdim));
        }
        if (a.A.rows() == 0 || a.b.size() != a.A.rows()) {
            throw SpecError(where + ": selector offset must match selector rows");
        }
        if (a.kind == ConstraintAtom::Kind::Affine && a.A.rows() != 1) {
            throw SpecError(where + ": affine atoms take a single row");
        }
        if (!a.A.allFinite() || !a.b.allFinite() || std::isnan(a.bound)) {
            throw SpecError(where + ": non-finite selector data");
        }
    };
    for (std::size_t i = 0; i < spec.f_atoms.size(); ++i) {
        const auto& a = spec.f_atoms[i];
        const std::string where = "f_atoms[" + std::to_string(i) + "]";
        check_shape(a, where);
        if (a.relax_slot) {
            throw SpecError(where + ": input constraints cannot be relaxed");
        }
        if (a.A.leftCols(nx).cwiseAbs().maxCoeff() != 0.0) {
            throw SpecError(where + ": input constraints must not depend on the state");
        }
    }
    for (std::size_t i = 0; i < spec.g_atoms.size(); ++i) {
        const auto& a = spec.g_atoms[i];
        const std::string where = "g_atoms[" + std::to_string(i) + "]";
        check_shape(a, where);
        if (a.relax_slot) {
            if (*a.relax_slot < 0 || *a.relax_slot >= spec.p_y) {
                throw SpecError(where + ": relax slot " + std::to_string(*a.relax_slot) +
                                " outside [0, " + std::to_string(spec.p_y) + ")");
            }
            used[static_cast<std::size_t>(*a.relax_slot)] = true;
        }
    }
    for (Index s = 0; s < spec.p_y; ++s) {
        if (!used[static_cast<std::size_t>(s)]) {
            throw SpecError("relax slot " + std::to_string(s) + " is not referenced by any g atom");
        }
    }
}

/// lhs - rhs per atom; an atom is satisfied iff its margin is <= 0.
struct Margins {
    VectorXd f;
    VectorXd g;

    bool satisfied() const {
        return (f.size() == 0 || f.maxCoeff() <= 0.0) && (g.size() == 0 || g.maxCoeff() <= 0.0);
    }
};

namespace detail {

inline double atom_value(const ConstraintAtom& a, const VectorXd& z) {
    const VectorXd v = a.A * z + a.b;
    return a.kind == ConstraintAtom::Kind::Affine ? v(0) : v.cwiseAbs().maxCoeff();
}

}  // namespace detail

inline Margins evaluate(const ConstraintSpec& spec, const VectorXd& x, const VectorXd& u,
                        const VectorXd& h) {
    if (x.size() == 0 && u.size() == 0 && spec.f_atoms.empty() && spec.g_atoms.empty()) {
        return {};
    }
    VectorXd z(x.size() + u.size());
    z << x, u;
    Margins mg;
    mg.f.resize(static_cast<Index>(spec.f_atoms.size()));
    mg.g.resize(static_cast<Index>(spec.g_atoms.size()));
    auto check = [&](const ConstraintAtom& a) {
        if (a.A.cols() != z.size()) {
            throw DimensionError("evaluate: trajectory has length " + std::to_string(z.size()) +
                                 ", selector expects " + std::to_string(a.A.cols()));
        }
    };
    for (std::size_t i = 0; i < spec.f_atoms.size(); ++i) {
        const auto& a = spec.f_atoms[i];
        check(a);
        mg.f(static_cast<Index>(i)) = detail::atom_value(a, z) - a.bound;
    }
    for (std::size_t i = 0; i < spec.g_atoms.size(); ++i) {
        const auto& a = spec.g_atoms[i];
        check(a);
        double rhs = a.bound;
        if (a.relax_slot) {
            if (*a.relax_slot < 0 || *a.relax_slot >= h.size()) {
                throw SpecError("evaluate: g_atoms[" + std::to_string(i) + "] references slot " +
                                std::to_string(*a.relax_slot) + " but h has length " +
                                std::to_string(h.size()));
            }
            rhs += h(*a.relax_slot);
        }
        mg.g(static_cast<Index>(i)) = detail::atom_value(a, z) - rhs;
    }
    return mg;
}

/// Dense inequality system A_ineq v <= b_ineq.
struct LinearInequalities {
    MatrixXd A;
    VectorXd b;
};

/**
 * The scenario constraints of the cascade as a linear system in (lambda, h).
 *
 * Each atom row (and, for INF_NORM, each sign) is a template c' z + offset <= bound + h[slot].
 * Since z is affine in lambda for fixed w, a template instantiated at scenario k is
 *   (phi' U(w_k)) lambda - h[slot] <= bound - offset - c_x' (F x0 + H w_k),
 * with phi = G' c_x + c_u. Rows are materialized on demand.
 */
class ScenarioProgram {
public:
    struct Template {
        VectorXd c;      // over z
        VectorXd phi;    // over the stacked input
        VectorXd psi;    // H' c_x, over the stacked disturbance
        double offset = 0.0;    // signed selector offset
        double constant = 0.0;  // offset + c_x' F x0
        double bound = 0.0;
        Index slot = -1;
        Index atom = 0;  // position in f_atoms followed by g_atoms
        bool is_f = false;
    };

    ScenarioProgram(ConstraintSpec spec, StackedDynamics sd, VectorXd x0, ScenarioSet scenarios)
        : spec_(std::move(spec)),
          sd_(std::move(sd)),
          x0_(std::move(x0)),
          scenarios_(std::move(scenarios)),
          layout_(layout_of(sd_)) {
        validate(spec_, sd_);
        detail::require_len(x0_, sd_.n, "ScenarioProgram: initial state");
        if (scenarios_.dim() != sd_.nw * sd_.M) {
            throw DimensionError("ScenarioProgram: scenarios have length " +
                                 std::to_string(scenarios_.dim()) + ", expected " +
                                 std::to_string(sd_.nw * sd_.M));
        }
        if (scenarios_.size() < 1) {
            throw InvalidArgument("ScenarioProgram: at least one scenario is required");
        }
        const Index nx = sd_.n * sd_.M;
        const VectorXd Fx0 = sd_.F * x0_;
        Index atom = 0;
        auto add_atom = [&](const ConstraintAtom& a, bool is_f) {
            atom_first_.push_back(static_cast<Index>(templates_.size()));
            for (Index r = 0; r < a.A.rows(); ++r) {
                const int signs = a.kind == ConstraintAtom::Kind::Affine ? 1 : 2;
                for (int s = 0; s < signs; ++s) {
                    const double sign = s == 0 ? 1.0 : -1.0;
                    Template t;
                    t.c = sign * a.A.row(r).transpose();
                    const auto cx = t.c.head(nx);
                    t.phi = sd_.G.transpose() * cx + t.c.tail(sd_.m * sd_.M);
                    t.psi = sd_.H.transpose() * cx;
                    t.offset = sign * a.b(r);
                    t.constant = t.offset + cx.dot(Fx0);
                    t.bound = a.bound;
                    t.slot = a.relax_slot ? *a.relax_slot : -1;
                    t.atom = atom;
                    t.is_f = is_f;
                    templates_.push_back(std::move(t));
                }
            }
            ++atom;
        };
        for (const auto& a : spec_.f_atoms) add_atom(a, true);
        for (const auto& a : spec_.g_atoms) add_atom(a, false);
        atom_first_.push_back(static_cast<Index>(templates_.size()));

        C_.resize(static_cast<Index>(templates_.size()), trajectory_dim(sd_));
        for (std::size_t i = 0; i < templates_.size(); ++i) {
            C_.row(static_cast<Index>(i)) = templates_[i].c.transpose();
        }
    }

    const ConstraintSpec& spec() const noexcept { return spec_; }
    const StackedDynamics& dynamics() const noexcept { return sd_; }
    const VectorXd& x0() const noexcept { return x0_; }
    const ScenarioSet& scenarios() const noexcept { return scenarios_; }
    const PolicyLayout& layout() const noexcept { return layout_; }
    const std::vector<Template>& templates() const noexcept { return templates_; }

    Index num_templates() const noexcept { return static_cast<Index>(templates_.size()); }
    Index num_scenarios() const noexcept { return scenarios_.size(); }
    Index num_scenario_rows() const noexcept { return num_templates() * num_scenarios(); }
    Index p_y() const noexcept { return spec_.p_y; }
    Index lambda_dim() const noexcept { return layout_.dim(); }

    /**
     * Trajectories for every scenario: column k is z(w_k, lambda).
     */
    MatrixXd trajectories(const PolicyParams& p) const {
        const MatrixXd& W = scenarios_.samples();
        const MatrixXd Theta = theta_matrix(p);
        const Index nx = sd_.n * sd_.M;
        MatrixXd Z(trajectory_dim(sd_), W.cols());
        Z.topRows(nx) = (sd_.G * Theta + sd_.H) * W;
        Z.topRows(nx).colwise() += sd_.F * x0_ + sd_.G * p.gamma;
        Z.bottomRows(sd_.m * sd_.M) = Theta * W;
        Z.bottomRows(sd_.m * sd_.M).colwise() += p.gamma;
        return Z;
    }

    /// Template residuals (lhs - rhs): entry (t, k) is row t at scenario k.
    MatrixXd residuals(const VectorXd& lambda, const VectorXd& h) const {
        if (h.size() != spec_.p_y) {
            throw DimensionError("residuals: h has length " + std::to_string(h.size()) +
                                 ", expected " + std::to_string(spec_.p_y));
        }
        const PolicyParams p = unpack(lambda, layout_);
        MatrixXd R = C_ * trajectories(p);
        for (Index t = 0; t < num_templates(); ++t) {
            const auto& tp = templates_[static_cast<std::size_t>(t)];
            R.row(t).array() += tp.offset - tp.bound - (tp.slot >= 0 ? h(tp.slot) : 0.0);
        }
        return R;
    }

    /**
     * Row of template t at scenario k over v = [lambda; h] (length d + p_y),
     * as coefficient vector and right-hand side.
     */
    std::pair<VectorXd, double> row(Index t, Index k) const {
        const auto& tp = templates_[static_cast<std::size_t>(t)];
        const auto w = scenarios_.samples().col(k);
        VectorXd a = VectorXd::Zero(layout_.dim() + spec_.p_y);
        lambda_coefficients(tp.phi, w, a.head(layout_.dim()));
        if (tp.slot >= 0) {
            a(layout_.dim() + tp.slot) = -1.0;
        }
        const double rhs = tp.bound - tp.constant - tp.psi.dot(w);
        return {std::move(a), rhs};
    }

    /**
     * Full dense system over [lambda; h] (with_h) or over lambda with h folded
     * into the right-hand side at `h_fixed`. Row order: atom, then scenario,
     * then the atom's rows (+ before -). With h, p_y rows -h <= 0 close the system.
     */
    LinearInequalities assemble(bool with_h, const VectorXd& h_fixed = VectorXd()) const {
        const Index d = layout_.dim();
        if (!with_h && h_fixed.size() != spec_.p_y) {
            throw DimensionError("assemble: fixed h has length " + std::to_string(h_fixed.size()) +
                                 ", expected " + std::to_string(spec_.p_y));
        }
        const Index cols = with_h ? d + spec_.p_y : d;
        const Index rows = num_scenario_rows() + (with_h ? spec_.p_y : 0);
        LinearInequalities sys;
        sys.A = MatrixXd::Zero(rows, cols);
        sys.b.resize(rows);
        Index r = 0;
        const Index atoms = static_cast<Index>(atom_first_.size()) - 1;
        for (Index a = 0; a < atoms; ++a) {
            for (Index k = 0; k < num_scenarios(); ++k) {
                for (Index t = atom_first_[a]; t < atom_first_[a + 1]; ++t) {
                    auto [coef, rhs] = row(t, k);
                    const auto& tp = templates_[static_cast<std::size_t>(t)];
                    if (with_h) {
                        sys.A.row(r) = coef.transpose();
                    } else {
                        sys.A.row(r) = coef.head(d).transpose();
                        if (tp.slot >= 0) {
                            rhs += h_fixed(tp.slot);
                        }
                    }
                    sys.b(r) = rhs;
                    ++r;
                }
            }
        }
        if (with_h) {
            for (Index s = 0; s < spec_.p_y; ++s) {
                sys.A(r, d + s) = -1.0;
                sys.b(r) = 0.0;
                ++r;
            }
        }
        return sys;
    }

private:
    template <typename Out>
    void lambda_coefficients(const VectorXd& phi, const Eigen::Ref<const VectorXd>& w,
                             Out&& out) const {
        const auto& l = layout_;
        out.head(l.m * l.M) = phi;
        for (Index t = 1; t < l.M; ++t) {
            for (Index tau = 0; tau < t; ++tau) {
                const Index off = l.theta_offset(t, tau);
                for (Index j = 0; j < l.m; ++j) {
                    out.segment(off + j * l.nw, l.nw) = phi(t * l.m + j) * w.segment(tau * l.nw, l.nw);
                }
            }
        }
    }

    ConstraintSpec spec_;
    StackedDynamics sd_;
    VectorXd x0_;
    ScenarioSet scenarios_;
    PolicyLayout layout_;
    std::vector<Template> templates_;
    std::vector<Index> atom_first_;
    MatrixXd C_;
};

/// Free-function form of ScenarioProgram::assemble.
inline LinearInequalities assemble_scenario_rows(const ConstraintSpec& spec,
                                                 const StackedDynamics& sd, const VectorXd& x0,
                                                 const ScenarioSet& scenarios, bool with_h,
                                                 const VectorXd& h_fixed = VectorXd()) {
    return ScenarioProgram(spec, sd, x0, scenarios).assemble(with_h, h_fixed);
}

}  // namespace srx

#endif  // SRX_CONSTRAINTS_HPP
