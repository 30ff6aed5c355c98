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
#ifndef SRX_CASCADE_HPP
#define SRX_CASCADE_HPP

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>
#include <string>
#include <utility>

#include "srx/constraints.hpp"
#include "srx/cost.hpp"
#include "srx/errors.hpp"
#include "srx/policy.hpp"
#include "srx/qp.hpp"

namespace srx {

/// L(h) = h' T h with T symmetric positive definite.
struct RelaxationCost {
    MatrixXd T;

    static RelaxationCost identity(Index p_y) { return {MatrixXd::Identity(p_y, p_y)}; }

    void validate(Index p_y) const {
        if (T.rows() != p_y || T.cols() != p_y) {
            throw DimensionError("relaxation weight T is " + detail::shape(T) + ", expected " +
                                 std::to_string(p_y) + " square");
        }
        if ((T - T.transpose()).cwiseAbs().maxCoeff() > 1e-12 || !detail::positive_definite(T)) {
            throw InvalidArgument("relaxation weight T must be symmetric positive definite");
        }
    }

    double operator()(const VectorXd& h) const { return h.dot(T * h); }
};

struct StepDiagnostics {
    QpStatus status = QpStatus::MaxIterations;
    int iterations = 0;  // IPM iterations of the final round
    int rounds = 0;      // constraint generation rounds
    Index working_rows = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    double max_violation = 0.0;
    double seconds = 0.0;
};

struct CascadeSettings {
    CuttingPlaneSettings generation;
    /// Weight of the lambda' lambda term that makes the step-1 lambda part well posed.
    double step1_lambda_weight = 1e-10;
    /// Negative h components above -clip_threshold are set to zero before step 2.
    double clip_threshold = 1e-9;
    /// Re-solve step 1 with relaxation components below the threshold pinned to zero.
    bool polish = true;
    double polish_threshold = 1e-4;
};

struct Step1Result {
    VectorXd h_star;
    VectorXd lambda_feasible;
    double L_star = 0.0;
    std::uint64_t scenario_hash = 0;
    StepDiagnostics diagnostics;
};

struct Step2Result {
    VectorXd lambda_star;
    double J_star = 0.0;
    StepDiagnostics diagnostics;
};

struct CascadeSolution {
    PolicyParams lambda_star;
    VectorXd h_star;
    double L_star = 0.0;
    double J_star = 0.0;
    VectorXd lambda_feasible;  // step-1 companion of h_star
    double J_feasible = 0.0;
    std::uint64_t scenario_seed = 0;
    Index num_scenarios = 0;
    std::uint64_t scenario_hash = 0;
    StepDiagnostics step1;
    StepDiagnostics step2;
};

/**
 * ScenarioProgram rows as a RowSource: one group per row template, one row
 * per scenario. Over [lambda; h] when `h_fixed` is empty, over lambda otherwise.
 */
class ScenarioRowSource final : public RowSource {
public:
    explicit ScenarioRowSource(const ScenarioProgram& prog, VectorXd h_fixed = VectorXd(),
                               bool with_h = true)
        : prog_(prog), h_fixed_(std::move(h_fixed)), with_h_(with_h) {}

    Index num_groups() const override { return prog_.num_templates(); }
    Index group_size() const override { return prog_.num_scenarios(); }

    VectorXd residuals(const VectorXd& z) const override {
        const Index d = prog_.lambda_dim();
        const VectorXd h = with_h_ ? VectorXd(z.tail(prog_.p_y())) : h_fixed_;
        const MatrixXd R = prog_.residuals(z.head(d), h);
        // Group-major flattening: entry t * N + k.
        VectorXd out(R.size());
        Eigen::Map<MatrixXd>(out.data(), R.cols(), R.rows()) = R.transpose();
        return out;
    }

    std::pair<VectorXd, double> row(Index i) const override {
        const Index N = prog_.num_scenarios();
        const Index t = i / N;
        auto [a, b] = prog_.row(t, i % N);
        if (with_h_) {
            return {std::move(a), b};
        }
        const Index slot = prog_.templates()[static_cast<std::size_t>(t)].slot;
        if (slot >= 0) {
            b += h_fixed_(slot);
        }
        return {VectorXd(a.head(prog_.lambda_dim())), b};
    }

private:
    const ScenarioProgram& prog_;
    VectorXd h_fixed_;
    bool with_h_;
};

namespace detail {

inline StepDiagnostics diagnostics_of(const CuttingPlaneResult& r, double seconds) {
    StepDiagnostics d;
    d.status = r.qp.status;
    d.iterations = r.qp.iterations;
    d.rounds = r.rounds;
    d.working_rows = r.working_rows;
    d.primal_residual = r.qp.primal_residual;
    d.dual_residual = r.qp.dual_residual;
    d.gap = r.qp.gap;
    d.max_violation = r.max_violation;
    d.seconds = seconds;
    return d;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Names the f atoms that cannot be met on their own, for step-1 failure reports.
inline std::string diagnose_f_atoms(const ScenarioProgram& prog, const CascadeSettings& st) {
    const auto& spec = prog.spec();
    if (spec.f_atoms.empty()) {
        return "no input constraints present";
    }
    std::string bad;
    for (std::size_t i = 0; i < spec.f_atoms.size(); ++i) {
        ConstraintSpec single;
        single.f_atoms = {spec.f_atoms[i]};
        ScenarioProgram sub(single, prog.dynamics(), prog.x0(), prog.scenarios());
        ScenarioRowSource src(sub, VectorXd::Zero(0), false);
        const Index d = sub.lambda_dim();
        try {
            solve_qp_generated(MatrixXd::Identity(d, d), VectorXd::Zero(d), MatrixXd(0, d),
                               VectorXd(0), src, st.generation);
        } catch (const SolverError&) {
            bad += (bad.empty() ? "" : ", ") + std::string("f_atoms[") + std::to_string(i) + "]";
        }
    }
    return bad.empty() ? "each input constraint is satisfiable on its own"
                       : "unsatisfiable on their own: " + bad;
}

}  // namespace detail

namespace detail {

inline CuttingPlaneResult step1_core(const ScenarioProgram& prog, const MatrixXd& T,
                                     const CascadeSettings& st) {
    const Index d = prog.lambda_dim();
    const Index py = prog.p_y();
    MatrixXd P = MatrixXd::Zero(d + py, d + py);
    P.topLeftCorner(d, d).diagonal().setConstant(st.step1_lambda_weight);
    P.bottomRightCorner(py, py) = T;
    MatrixXd A_fixed = MatrixXd::Zero(py, d + py);
    A_fixed.rightCols(py) = -MatrixXd::Identity(py, py);
    ScenarioRowSource src(prog);
    return solve_qp_generated(P, VectorXd::Zero(d + py), A_fixed, VectorXd::Zero(py), src,
                              st.generation);
}

}  // namespace detail

/**
 * min_{lambda, h} L(h)  s.t.  all scenario rows with relaxation h,  h >= 0.
 *
 * Components of h that vanish at the optimum sit on the degenerate face
 * h_i = 0 (zero multiplier), where the interior point iterates stall at
 * O(sqrt(mu)). Components below `polish_threshold` are therefore pinned to
 * zero and the problem re-solved without them; the pinned solution is kept
 * only if it is feasible and L does not increase.
 */
inline Step1Result solve_step1(const ScenarioProgram& prog, const RelaxationCost& rc,
                               const CascadeSettings& st = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const Index d = prog.lambda_dim();
    const Index py = prog.p_y();
    rc.validate(py);

    CuttingPlaneResult r;
    try {
        r = detail::step1_core(prog, rc.T, st);
    } catch (const SolverError& e) {
        throw SolverError(e.kind(),
                          std::string("step 1: ") + e.what() + " (" +
                              detail::diagnose_f_atoms(prog, st) + ")",
                          e.primal_residual(), e.dual_residual(), e.gap());
    }
    Step1Result out;
    out.lambda_feasible = r.qp.z.head(d);
    out.h_star = r.qp.z.tail(py);
    out.L_star = rc(out.h_star);
    out.scenario_hash = prog.scenarios().hash();
    out.diagnostics = detail::diagnostics_of(r, 0.0);

    std::vector<Index> keep;
    std::vector<Index> slot_map(static_cast<std::size_t>(py), -1);
    for (Index i = 0; i < py; ++i) {
        if (out.h_star(i) > st.polish_threshold) {
            slot_map[static_cast<std::size_t>(i)] = static_cast<Index>(keep.size());
            keep.push_back(i);
        }
    }
    if (st.polish && static_cast<Index>(keep.size()) < py) {
        ConstraintSpec reduced = prog.spec();
        for (auto& a : reduced.g_atoms) {
            if (a.relax_slot) {
                const Index ns = slot_map[static_cast<std::size_t>(*a.relax_slot)];
                a.relax_slot = ns >= 0 ? std::optional<Index>(ns) : std::nullopt;
            }
        }
        reduced.p_y = static_cast<Index>(keep.size());
        const ScenarioProgram sub(reduced, prog.dynamics(), prog.x0(), prog.scenarios());
        MatrixXd Tk(reduced.p_y, reduced.p_y);
        for (Index i = 0; i < reduced.p_y; ++i) {
            for (Index j = 0; j < reduced.p_y; ++j) {
                Tk(i, j) = rc.T(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
            }
        }
        try {
            const CuttingPlaneResult rp = detail::step1_core(sub, Tk, st);
            VectorXd h = VectorXd::Zero(py);
            for (std::size_t i = 0; i < keep.size(); ++i) {
                h(keep[i]) = rp.qp.z(d + static_cast<Index>(i));
            }
            const double L = rc(h);
            if (L <= out.L_star + 1e-9 * (1.0 + out.L_star)) {
                out.lambda_feasible = rp.qp.z.head(d);
                out.h_star = h;
                out.L_star = L;
                out.diagnostics = detail::diagnostics_of(rp, 0.0);
                out.diagnostics.rounds += r.rounds;
            }
        } catch (const SolverError&) {
            // Pinning made the problem infeasible: the small components are genuine.
        }
    }
    out.diagnostics.seconds = detail::seconds_since(t0);
    return out;
}

/// min_lambda J(lambda)  s.t.  all scenario rows with the relaxation fixed at h_star.
inline Step2Result solve_step2(const ScenarioProgram& prog, const CostSpec& cs,
                               const Step1Result& step1, const CascadeSettings& st = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (step1.scenario_hash != prog.scenarios().hash()) {
        throw InvalidArgument("step 2 must use the scenario set step 1 was solved on");
    }
    VectorXd h = step1.h_star;
    for (Index i = 0; i < h.size(); ++i) {
        if (h(i) < 0.0 && h(i) > -st.clip_threshold) {
            h(i) = 0.0;
        }
    }
    const QuadraticForm J = cost_quadratic_form(cs, prog.dynamics(), prog.x0());
    const Index d = prog.lambda_dim();
    ScenarioRowSource src(prog, h, false);
    CuttingPlaneResult r;
    try {
        r = solve_qp_generated(J.P, J.q, MatrixXd(0, d), VectorXd(0), src, st.generation);
    } catch (const SolverError& e) {
        throw SolverError(SolverError::Kind::Internal,
                          std::string("step 2 failed on the step-1 scenario set: ") + e.what(),
                          e.primal_residual(), e.dual_residual(), e.gap());
    }
    Step2Result out;
    out.lambda_star = r.qp.z;
    out.J_star = J(out.lambda_star);
    out.diagnostics = detail::diagnostics_of(r, detail::seconds_since(t0));
    return out;
}

/// Step 1 then step 2 on one scenario set; step 2 acts as the tie break among step-1 optima.
inline CascadeSolution solve_cascade(const ScenarioProgram& prog, const CostSpec& cs,
                                     const RelaxationCost& rc, const CascadeSettings& st = {}) {
    const Step1Result s1 = solve_step1(prog, rc, st);
    const Step2Result s2 = solve_step2(prog, cs, s1, st);
    CascadeSolution sol;
    sol.lambda_star = unpack(s2.lambda_star, prog.layout());
    sol.h_star = s1.h_star;
    sol.L_star = s1.L_star;
    sol.J_star = s2.J_star;
    sol.lambda_feasible = s1.lambda_feasible;
    sol.J_feasible =
        expected_cost(cs, prog.dynamics(), prog.x0(), unpack(s1.lambda_feasible, prog.layout()));
    sol.scenario_seed = prog.scenarios().seed();
    sol.num_scenarios = prog.num_scenarios();
    sol.scenario_hash = prog.scenarios().hash();
    sol.step1 = s1.diagnostics;
    sol.step2 = s2.diagnostics;
    return sol;
}

struct AuxiliaryResult {
    VectorXd lambda;
    VectorXd h;
    double objective = 0.0;  // L(h) + J(lambda) / n
    StepDiagnostics diagnostics;
};

/**
 * min_{lambda, h} L(h) + J(lambda) / n over the step-1 feasible set.
 *
 * Solved as n L(h) + J(lambda), which has the same minimizer and keeps the
 * lambda block at the scale of J for large n. For large n the joint solve
 * resolves lambda only to about tolerance * n, so lambda is then re-solved
 * as argmin J at the computed h, which is exact at the optimum.
 */
inline AuxiliaryResult solve_auxiliary(const ScenarioProgram& prog, const RelaxationCost& rc,
                                       const CostSpec& cs, double n,
                                       const CascadeSettings& st = {}) {
    if (!(n > 0.0)) {
        throw InvalidArgument("solve_auxiliary: n must be positive");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Index d = prog.lambda_dim();
    const Index py = prog.p_y();
    rc.validate(py);
    const QuadraticForm J = cost_quadratic_form(cs, prog.dynamics(), prog.x0());
    MatrixXd P = MatrixXd::Zero(d + py, d + py);
    P.topLeftCorner(d, d) = J.P;
    P.bottomRightCorner(py, py) = n * rc.T;
    VectorXd q = VectorXd::Zero(d + py);
    q.head(d) = J.q;
    MatrixXd A_fixed = MatrixXd::Zero(py, d + py);
    A_fixed.rightCols(py) = -MatrixXd::Identity(py, py);
    ScenarioRowSource src(prog);
    const CuttingPlaneResult r =
        solve_qp_generated(P, q, A_fixed, VectorXd::Zero(py), src, st.generation);
    AuxiliaryResult out;
    out.lambda = r.qp.z.head(d);
    out.h = r.qp.z.tail(py).cwiseMax(0.0);
    out.diagnostics = detail::diagnostics_of(r, 0.0);
    try {
        ScenarioRowSource fixed(prog, out.h, false);
        const CuttingPlaneResult rl =
            solve_qp_generated(J.P, J.q, MatrixXd(0, d), VectorXd(0), fixed, st.generation);
        if (J(rl.qp.z) <= J(out.lambda)) {
            out.lambda = rl.qp.z;
            out.diagnostics.rounds += rl.rounds;
        }
    } catch (const SolverError&) {
        // Keep the joint solution.
    }
    out.objective = rc(out.h) + J(out.lambda) / n;
    out.diagnostics.seconds = detail::seconds_since(t0);
    return out;
}

/**
 * Phase-1 test of the unrelaxed scenario program: minimizes t^2 with every
 * g row relaxed by a common t (f rows kept hard). Feasible iff t* <= tol.
 */
inline bool unrelaxed_feasible(const ScenarioProgram& prog, double tol = 1e-7,
                               const CascadeSettings& st = {}) {
    ConstraintSpec one = prog.spec();
    for (auto& a : one.g_atoms) {
        a.relax_slot = 0;
    }
    one.p_y = one.g_atoms.empty() ? 0 : 1;
    const ScenarioProgram shared(one, prog.dynamics(), prog.x0(), prog.scenarios());
    if (one.p_y == 0) {
        try {
            ScenarioRowSource src(shared, VectorXd::Zero(0), false);
            const Index d = shared.lambda_dim();
            solve_qp_generated(MatrixXd::Identity(d, d) * st.step1_lambda_weight,
                               VectorXd::Zero(d), MatrixXd(0, d), VectorXd(0), src, st.generation);
            return true;
        } catch (const SolverError&) {
            return false;
        }
    }
    const Index d = shared.lambda_dim();
    MatrixXd P = MatrixXd::Zero(d + 1, d + 1);
    P.topLeftCorner(d, d).diagonal().setConstant(st.step1_lambda_weight);
    P(d, d) = 1.0;
    ScenarioRowSource src(shared);
    const CuttingPlaneResult r = solve_qp_generated(P, VectorXd::Zero(d + 1), MatrixXd(0, d + 1),
                                                    VectorXd(0), src, st.generation);
    return r.qp.z(d) <= tol;
}

}  // namespace srx

#endif  // SRX_CASCADE_HPP
