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
// Command line driver: srx <subcommand> --config <file> ...

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "srx/srx.hpp"

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitSolver = 3;
constexpr int kExitOther = 1;

namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<srx::Index> trials;
    std::string out_dir = "out";
    bool dry_run = false;
};

void print_plan(const srx::ProblemPlan& p, std::ostream& os) {
    os << "dim(lambda) = " << p.lambda_dim << "\n"
       << "p_y         = " << p.p_y << "\n"
       << "d           = " << p.d << (p.d < p.d_full ? " (reduced)" : "") << "\n"
       << "N           = " << p.N << "\n"
       << "row templates = " << p.row_templates << ", scenario rows = " << p.scenario_rows
       << "\n";
}

void print_estimate(const char* what, const srx::ViolationEstimate& v, std::ostream& os) {
    os << what << ": eps = " << v.eps_hat << "  [" << v.ci_low << ", " << v.ci_high << "] at "
       << v.confidence << ", " << v.n_violations << "/" << v.n_trials << "\n";
}

srx::ExperimentConfig load(const Common& c) {
    return srx::with_overrides(srx::parse_config(c.config), c.seed, c.trials);
}

int cmd_sample_size(const Common& c, std::optional<double> eps, std::optional<double> beta,
                    std::optional<std::int64_t> d) {
    srx::ScenarioParams sp;
    if (!c.config.empty()) {
        const srx::Experiment ex(load(c));
        sp = ex.scenario_params();
        std::cout << "dim(lambda) = " << ex.lambda_dim() << "\np_y         = " << ex.p_y()
                  << "\n";
    } else if (!eps || !beta || !d) {
        throw srx::SchemaError("sample-size", "needs --config or all of --epsilon --beta --d");
    }
    if (eps) sp.epsilon = *eps;
    if (beta) sp.beta = *beta;
    if (d) sp.d = *d;
    if (!(sp.epsilon > 0.0 && sp.epsilon < 1.0)) {
        throw srx::SchemaError("epsilon", "must lie in (0, 1)");
    }
    if (!(sp.beta > 0.0 && sp.beta < 1.0)) {
        throw srx::SchemaError("beta", "must lie in (0, 1)");
    }
    if (sp.d < 1) {
        throw srx::SchemaError("d", "must be >= 1");
    }
    const std::int64_t N = srx::solve_sample_size(sp);
    std::cout << "d           = " << sp.d << "\nN           = " << N
              << "\ntail(N)     = " << srx::binomial_tail(N, sp.d, sp.epsilon) << " <= beta = "
              << sp.beta << "\n";
    return 0;
}

int cmd_solve(const Common& c) {
    const srx::ExperimentConfig cfg = load(c);
    const srx::Experiment ex(cfg);
    print_plan(srx::plan(ex), std::cout);
    if (c.dry_run) {
        return 0;
    }
    const srx::CascadeSolution sol = srx::solve_experiment(ex, cfg.scenario.seed);
    fs::create_directories(c.out_dir);
    const fs::path path = fs::path(c.out_dir) / "solution.json";
    srx::write_solution(path.string(), cfg, sol);
    std::cout << "h*  = " << sol.h_star.transpose() << "\nL*  = " << sol.L_star
              << "\nJ*  = " << sol.J_star << "\nstep 1: " << sol.step1.seconds << " s, "
              << sol.step1.rounds << " rounds; step 2: " << sol.step2.seconds << " s, "
              << sol.step2.rounds << " rounds\nwrote " << path.string() << "\n";
    return 0;
}

int cmd_validate(const Common& c, const std::string& solution_path) {
    srx::SolutionRecord rec = srx::read_solution(solution_path);
    rec.config = srx::with_overrides(rec.config, std::nullopt, c.trials);
    if (c.seed) {
        if (*c.seed == rec.config.scenario.seed) {
            throw srx::SchemaError("validation.seed", "must differ from scenario.seed");
        }
        rec.config.validation.seed = *c.seed;
    }
    const srx::Experiment ex(rec.config);
    const auto& v = rec.config.validation;
    const srx::ValidationReport r =
        srx::validate_solution(ex, rec.solution, v.trials, v.seed, v.confidence);
    print_estimate("original bounds", r.original, std::cout);
    print_estimate("relaxed bounds ", r.relaxed, std::cout);
    fs::create_directories(c.out_dir);
    std::ofstream(fs::path(c.out_dir) / "validation.json")
        << srx::json{{"original", srx::to_json(r.original)},
                     {"relaxed", srx::to_json(r.relaxed)}}
               .dump(2)
        << "\n";
    if (v.cdf_output.size() > 0) {
        const srx::CdfTable t = srx::empirical_cdf(ex.stacked(), ex.x0(), v.cdf_output,
                                                   rec.solution.lambda_star, ex.sampler(),
                                                   v.trials, v.seed);
        std::ofstream csv(fs::path(c.out_dir) / "cdf.csv");
        srx::write_cdf_csv(csv, t, 1000);
    }
    return 0;
}

int cmd_mpc(const Common& c, std::optional<srx::Index> steps) {
    const srx::ExperimentConfig cfg = load(c);
    const srx::Experiment ex(cfg);
    if (!cfg.mpc) {
        throw srx::SchemaError("mpc", "config has no mpc block");
    }
    srx::ScenarioParams sp = ex.scenario_params();
    if (cfg.mpc->d) {
        sp.d = *cfg.mpc->d;
    }
    const srx::Index n_steps = steps.value_or(cfg.mpc->steps);
    const std::uint64_t seed = c.seed.value_or(cfg.mpc->seed);
    std::cout << "steps = " << n_steps << ", d = " << sp.d << ", N per step = "
              << srx::solve_sample_size(sp) << (sp.d < ex.d_full() ? " (reduced)" : "") << "\n";
    if (c.dry_run) {
        return 0;
    }
    const srx::ClosedLoopTrace tr = srx::run_receding_horizon(
        ex.system(), ex.constraints(), ex.cost(), ex.relaxation(), sp, ex.x0(),
        cfg.horizon, n_steps, *ex.step_sampler(), ex.sampler(), seed);
    fs::create_directories(c.out_dir);
    const fs::path path = fs::path(c.out_dir) / "trace.csv";
    std::ofstream csv(path);
    srx::write_trace_csv(csv, tr);
    srx::Index relaxed = 0;
    for (const auto& h : tr.h_stars) {
        relaxed += h.size() > 0 && h.maxCoeff() > 0.0 ? 1 : 0;
    }
    std::cout << "steps with h* > 0: " << relaxed << "/" << tr.length() << "\nwrote "
              << path.string() << "\n";
    return 0;
}

int cmd_compare_lq(const Common& c, std::optional<double> qj, std::optional<double> ql) {
    const srx::ExperimentConfig cfg = load(c);
    const srx::Experiment ex(cfg);
    if (!cfg.lq) {
        throw srx::SchemaError("lq", "config has no lq block");
    }
    std::vector<std::vector<double>> cases = cfg.lq->cases;
    if (qj || ql) {
        if (cfg.lq->blocks.size() != 2) {
            throw srx::SchemaError("lq.blocks", "--qj/--ql need exactly two blocks");
        }
        cases = {{qj.value_or(0.0), ql.value_or(0.0)}};
    }
    const auto& v = cfg.validation;
    std::cout << "weights,J,eps_tilde,ci_low,ci_high\n";
    for (const auto& w : cases) {
        const srx::LqRow r = srx::evaluate_lq(ex, *cfg.lq, w, v.trials, v.seed, v.confidence);
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::cout << (i ? " " : "") << w[i];
        }
        std::cout << ',' << r.J << ',' << r.violation.eps_hat << ',' << r.violation.ci_low << ','
                  << r.violation.ci_high << "\n";
    }
    return 0;
}

int cmd_run(const Common& c) {
    srx::PipelineOptions opt;
    opt.seed = c.seed;
    opt.trials = c.trials;
    opt.dry_run = c.dry_run;
    opt.out_dir = c.out_dir;
    const srx::PipelineSummary s = srx::run_pipeline(srx::parse_config(c.config), opt, &std::cerr);
    print_plan(s.plan, std::cout);
    if (c.dry_run) {
        return 0;
    }
    std::cout << "h* = " << s.solution->h_star.transpose() << "\n";
    std::cout << std::ifstream(fs::path(c.out_dir) / "summary.csv").rdbuf();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario-based stochastic control with a two-step constraint relaxation"};
    app.require_subcommand(1);
    Common c;
    std::optional<double> eps, beta, qj, ql;
    std::optional<std::int64_t> d;
    std::optional<srx::Index> steps;
    std::string solution_path;

    auto add_common = [&c](CLI::App* sub, bool need_config) {
        auto* opt = sub->add_option("--config", c.config, "Experiment config (JSON)");
        if (need_config) {
            opt->required();
        }
        sub->add_option("--seed", c.seed, "Seed override");
        sub->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--trials", c.trials, "Monte-Carlo trials override");
        sub->add_flag("--dry-run", c.dry_run, "Report problem sizes without solving");
    };

    auto* ss = app.add_subcommand("sample-size", "Scenario count N(epsilon, beta, d)");
    add_common(ss, false);
    ss->add_option("--epsilon", eps);
    ss->add_option("--beta", beta);
    ss->add_option("--d", d);
    auto* solve = app.add_subcommand("solve", "Solve the scenario cascade");
    add_common(solve, true);
    auto* val = app.add_subcommand("validate", "Monte-Carlo validation of a solution file");
    add_common(val, false);
    val->add_option("--solution", solution_path, "solution.json from solve")->required();
    auto* mpc = app.add_subcommand("mpc-sim", "Receding horizon closed loop");
    add_common(mpc, true);
    mpc->add_option("--steps", steps, "Closed-loop length");
    auto* lq = app.add_subcommand("compare-lq", "Finite-horizon LQ comparison rows");
    add_common(lq, true);
    lq->add_option("--qj", qj, "Weight of the first state block");
    lq->add_option("--ql", ql, "Weight of the second state block");
    auto* run = app.add_subcommand("run", "Full pipeline: solve, validate, compare");
    add_common(run, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitSchema;
    }

    try {
        if (*ss) return cmd_sample_size(c, eps, beta, d);
        if (*solve) return cmd_solve(c);
        if (*val) return cmd_validate(c, solution_path);
        if (*mpc) return cmd_mpc(c, steps);
        if (*lq) return cmd_compare_lq(c, qj, ql);
        if (*run) return cmd_run(c);
    } catch (const srx::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const srx::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const srx::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
    return kExitOther;
}
