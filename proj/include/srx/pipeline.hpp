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
#ifndef SRX_PIPELINE_HPP
#define SRX_PIPELINE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "srx/cascade.hpp"
#include "srx/config.hpp"
#include "srx/errors.hpp"
#include "srx/lq_baseline.hpp"
#include "srx/solution_io.hpp"
#include "srx/validation.hpp"

namespace srx {

/// Sizes of the scenario program, available without solving anything.
struct ProblemPlan {
    Index N = 0;
    Index d = 0;
    Index d_full = 0;
    Index lambda_dim = 0;
    Index p_y = 0;
    Index row_templates = 0;
    Index scenario_rows = 0;  // row_templates * N
};

inline ProblemPlan plan(const Experiment& ex) {
    ProblemPlan p;
    p.N = ex.sample_size();
    p.d = ex.scenario_params().d;
    p.d_full = ex.d_full();
    p.lambda_dim = ex.lambda_dim();
    p.p_y = ex.p_y();
    for (const auto* atoms : {&ex.constraints().f_atoms, &ex.constraints().g_atoms}) {
        for (const auto& a : *atoms) {
            p.row_templates += a.num_rows();
        }
    }
    p.scenario_rows = p.row_templates * p.N;
    return p;
}

inline CascadeSolution solve_experiment(const Experiment& ex, std::uint64_t seed,
                                        const CascadeSettings& st = {}) {
    const ScenarioProgram prog(ex.constraints(), ex.stacked(), ex.x0(),
                               ex.design_scenarios(seed));
    return solve_cascade(prog, ex.cost(), ex.relaxation(), st);
}

struct ValidationReport {
    ViolationEstimate original;  // h = 0: the unrelaxed bounds
    ViolationEstimate relaxed;   // h = h*
};

inline ValidationReport validate_solution(const Experiment& ex, const CascadeSolution& sol,
                                          Index trials, std::uint64_t seed, double confidence) {
    ValidationReport r;
    r.original = estimate_violation(ex.stacked(), ex.x0(), ex.constraints(), sol.lambda_star,
                                    VectorXd::Zero(ex.p_y()), ex.sampler(), trials, seed,
                                    confidence);
    r.relaxed = estimate_violation(ex.stacked(), ex.x0(), ex.constraints(), sol.lambda_star,
                                   sol.h_star, ex.sampler(), trials, seed, confidence);
    return r;
}

struct LqRow {
    std::vector<double> weights;
    double J = 0.0;  // under the weights of the cost block
    ViolationEstimate violation;  // unrelaxed bounds
};

/// blockdiag(w_1 I_{b_1}, w_2 I_{b_2}, ...).
inline MatrixXd weighted_blocks(const std::vector<Index>& blocks,
                                const std::vector<double>& weights) {
    if (blocks.size() != weights.size()) {
        throw DimensionError("weighted_blocks: one weight per block is required");
    }
    Index n = 0;
    for (auto b : blocks) {
        n += b;
    }
    VectorXd diag(n);
    Index off = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        diag.segment(off, blocks[i]).setConstant(weights[i]);
        off += blocks[i];
    }
    return diag.asDiagonal();
}

inline LqRow evaluate_lq(const Experiment& ex, const LqConfig& lq,
                         const std::vector<double>& weights, Index trials, std::uint64_t seed,
                         double confidence) {
    const Index M = ex.config().horizon;
    const LqDesign d =
        riccati_finite_horizon(ex.system(), weighted_blocks(lq.blocks, weights), lq.R, M);
    LqRow row;
    row.weights = weights;
    row.J = lq_expected_cost(d, ex.cost(), ex.system(), ex.x0(), M);
    const PolicyParams p = to_disturbance_feedback(d, ex.system(), ex.x0());
    row.violation = estimate_violation(ex.stacked(), ex.x0(), ex.constraints(), p,
                                       VectorXd::Zero(ex.p_y()), ex.sampler(), trials, seed,
                                       confidence);
    return row;
}

inline json to_json(const ViolationEstimate& v) {
    return {{"eps_hat", v.eps_hat},           {"n_trials", v.n_trials},
            {"n_violations", v.n_violations}, {"confidence", v.confidence},
            {"ci_low", v.ci_low},             {"ci_high", v.ci_high},
            {"per_constraint_rates", to_json(v.per_constraint_rates)}};
}

struct PipelineOptions {
    std::optional<std::uint64_t> seed;    // overrides scenario.seed
    std::optional<Index> trials;          // overrides validation.trials
    bool dry_run = false;
    std::filesystem::path out_dir = "out";
    CascadeSettings settings;
};

struct PipelineSummary {
    ProblemPlan plan;
    std::optional<CascadeSolution> solution;
    std::optional<ValidationReport> validation;
    std::vector<LqRow> lq;
};

/// Applies command line overrides and re-validates the result.
inline ExperimentConfig with_overrides(ExperimentConfig cfg, std::optional<std::uint64_t> seed,
                                       std::optional<Index> trials) {
    if (seed) {
        cfg.scenario.seed = *seed;
    }
    if (trials) {
        if (*trials < 1) {
            throw SchemaError("validation.trials", "must be >= 1");
        }
        cfg.validation.trials = *trials;
    }
    if (cfg.scenario.seed == cfg.validation.seed) {
        throw SchemaError("validation.seed", "must differ from scenario.seed");
    }
    return cfg;
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p);
    if (!out) {
        throw Error("cannot write " + p.string());
    }
    out << s;
}

}  // namespace detail

/**
 * Solve, validate and compare against LQ; writes resolved_config.json,
 * solution.json, validation.json, cdf.csv (when validation.cdf_output is set)
 * and summary.csv under out_dir. Output is a function of the config and seeds
 * only; timings go to the optional log stream.
 */
inline PipelineSummary run_pipeline(const ExperimentConfig& base, const PipelineOptions& opt,
                                    std::ostream* log = nullptr) {
    const ExperimentConfig cfg = with_overrides(base, opt.seed, opt.trials);
    const Experiment ex(cfg);
    PipelineSummary out;
    out.plan = plan(ex);
    if (opt.dry_run) {
        return out;
    }
    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    detail::write_text(opt.out_dir / "resolved_config.json", to_json(cfg).dump(2) + "\n");

    CascadeSolution sol;
    try {
        sol = solve_experiment(ex, cfg.scenario.seed, opt.settings);
    } catch (const SolverError& e) {
        throw SolverError(e.kind(), std::string("solve: ") + e.what(), e.primal_residual(),
                          e.dual_residual(), e.gap());
    }
    if (log) {
        *log << "solve: step 1 " << sol.step1.seconds << " s, step 2 " << sol.step2.seconds
             << " s\n";
    }
    CascadeSolution stored = sol;
    stored.step1.seconds = 0.0;
    stored.step2.seconds = 0.0;
    write_solution((opt.out_dir / "solution.json").string(), cfg, stored);

    const ValidationReport vr = validate_solution(ex, sol, cfg.validation.trials,
                                                  cfg.validation.seed, cfg.validation.confidence);
    detail::write_text(opt.out_dir / "validation.json",
                       json{{"original", to_json(vr.original)}, {"relaxed", to_json(vr.relaxed)}}
                               .dump(2) +
                           "\n");
    if (cfg.validation.cdf_output.size() > 0) {
        const CdfTable t = empirical_cdf(ex.stacked(), ex.x0(), cfg.validation.cdf_output,
                                         sol.lambda_star, ex.sampler(), cfg.validation.trials,
                                         cfg.validation.seed);
        std::ofstream csv(opt.out_dir / "cdf.csv");
        write_cdf_csv(csv, t, 1000);
    }
    if (cfg.lq) {
        for (const auto& w : cfg.lq->cases) {
            out.lq.push_back(evaluate_lq(ex, *cfg.lq, w, cfg.validation.trials,
                                         cfg.validation.seed, cfg.validation.confidence));
        }
    }

    std::ostringstream table;
    table.precision(10);
    table << "approach,weights,J,eps_tilde,ci_low,ci_high\n";
    table << "scenario,," << sol.J_star << ',' << vr.original.eps_hat << ','
          << vr.original.ci_low << ',' << vr.original.ci_high << '\n';
    for (const auto& r : out.lq) {
        table << "lq,";
        for (std::size_t i = 0; i < r.weights.size(); ++i) {
            table << (i ? " " : "") << r.weights[i];
        }
        table << ',' << r.J << ',' << r.violation.eps_hat << ',' << r.violation.ci_low << ','
              << r.violation.ci_high << '\n';
    }
    detail::write_text(opt.out_dir / "summary.csv", table.str());

    out.solution = std::move(sol);
    out.validation = vr;
    return out;
}

}  // namespace srx

#endif  // SRX_PIPELINE_HPP
