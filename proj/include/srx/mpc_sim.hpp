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
#ifndef SRX_MPC_SIM_HPP
#define SRX_MPC_SIM_HPP

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "srx/cascade.hpp"
#include "srx/constraints.hpp"
#include "srx/cost.hpp"
#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"
#include "srx/sample_size.hpp"
#include "srx/scenarios.hpp"

namespace srx {

struct ClosedLoopTrace {
    std::vector<VectorXd> states;        // x_0..x_T
    std::vector<VectorXd> inputs;        // u_0..u_{T-1}
    std::vector<VectorXd> disturbances;  // w_0..w_{T-1}, as applied to the plant
    std::vector<VectorXd> h_stars;
    std::vector<double> costs;           // x_{t+1}' Q x_{t+1} + u_t' R u_t
    std::vector<double> J_stars;
    std::vector<std::uint64_t> design_seeds;
    std::vector<double> solve_ms;
    std::uint64_t seed = 0;
    Index num_scenarios = 0;  // per step
    Index d_used = 0;         // support dimension behind num_scenarios
    Index d_full = 0;         // dim(lambda) + p_y
    bool reduced_sample_size() const noexcept { return d_used < d_full; }
    Index length() const noexcept { return static_cast<Index>(inputs.size()); }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Per-step design seed derived from the run seed.
inline std::uint64_t mpc_design_seed(std::uint64_t seed, Index step) {
    return detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(step) + 1));
}

/// Seed of the plant disturbance stream.
inline std::uint64_t mpc_plant_seed(std::uint64_t seed) {
    return detail::splitmix64(seed ^ 0x5DEECE66DULL);
}

/**
 * Receding horizon loop: at each step a fresh scenario set of size
 * N(epsilon, beta, sp.d) is drawn, the cascade is solved from the measured
 * state and u_0 = gamma_0 is applied. sp.d below dim(lambda) + p_y is a
 * reduced sample size and is flagged in the trace.
 */
inline ClosedLoopTrace run_receding_horizon(const LtiSystem& sys, const ConstraintSpec& spec,
                                            const CostSpec& cs, const RelaxationCost& rc,
                                            const ScenarioParams& sp, const VectorXd& x0,
                                            Index M, Index sim_length,
                                            const Sampler& plant_sampler,
                                            const Sampler& design_sampler, std::uint64_t seed,
                                            const CascadeSettings& st = {}) {
    if (sim_length < 1) {
        throw InvalidArgument("run_receding_horizon: sim_length must be >= 1");
    }
    detail::require_len(x0, sys.n(), "run_receding_horizon: initial state");
    if (plant_sampler.dim != sys.nw()) {
        throw DimensionError("run_receding_horizon: plant sampler draws length " +
                             std::to_string(plant_sampler.dim) + ", expected " +
                             std::to_string(sys.nw()));
    }
    const StackedDynamics sd = build_stacked(sys, M);
    validate(spec, sd);
    validate(cs, sd);
    sp.validate();

    ClosedLoopTrace tr;
    tr.seed = seed;
    tr.d_used = sp.d;
    tr.d_full = layout_of(sd).dim() + spec.p_y;
    tr.num_scenarios = static_cast<Index>(solve_sample_size(sp));
    tr.states.push_back(x0);

    Rng plant(mpc_plant_seed(seed));
    VectorXd x = x0;
    for (Index k = 0; k < sim_length; ++k) {
        const std::uint64_t ds = mpc_design_seed(seed, k);
        const auto t0 = std::chrono::steady_clock::now();
        CascadeSolution sol;
        try {
            const ScenarioProgram prog(spec, sd, x,
                                       ScenarioSet::draw(design_sampler, tr.num_scenarios, ds));
            sol = solve_cascade(prog, cs, rc, st);
        } catch (const SolverError& e) {
            throw SolverError(e.kind(), "mpc step " + std::to_string(k) + ": " + e.what(),
                              e.primal_residual(), e.dual_residual(), e.gap());
        }
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        const VectorXd u = sol.lambda_star.gamma.head(sys.m());
        const VectorXd w = plant_sampler.draw(plant);
        const VectorXd xn = simulate_step(sys, x, u, w);

        tr.inputs.push_back(u);
        tr.disturbances.push_back(w);
        tr.h_stars.push_back(sol.h_star);
        tr.J_stars.push_back(sol.J_star);
        tr.costs.push_back(xn.dot(cs.Q * xn) + u.dot(cs.R * u));
        tr.design_seeds.push_back(ds);
        tr.solve_ms.push_back(ms);
        tr.states.push_back(xn);
        x = xn;
    }
    return tr;
}

/// Columns t, x1..xn, u1..um, h1..hp, solve_ms; one row per applied input.
inline void write_trace_csv(std::ostream& os, const ClosedLoopTrace& tr) {
    if (tr.inputs.empty()) {
        return;
    }
    const Index n = tr.states.front().size();
    const Index m = tr.inputs.front().size();
    const Index p = tr.h_stars.front().size();
    os << 't';
    for (Index i = 1; i <= n; ++i) os << ",x" << i;
    for (Index i = 1; i <= m; ++i) os << ",u" << i;
    for (Index i = 1; i <= p; ++i) os << ",h" << i;
    os << ",solve_ms\n";
    os.precision(17);
    for (Index t = 0; t < tr.length(); ++t) {
        const auto s = static_cast<std::size_t>(t);
        os << t;
        for (Index i = 0; i < n; ++i) os << ',' << tr.states[s](i);
        for (Index i = 0; i < m; ++i) os << ',' << tr.inputs[s](i);
        for (Index i = 0; i < p; ++i) os << ',' << tr.h_stars[s](i);
        os << ',' << tr.solve_ms[s] << '\n';
    }
}

}  // namespace srx

#endif  // SRX_MPC_SIM_HPP
