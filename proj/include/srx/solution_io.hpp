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
#ifndef SRX_SOLUTION_IO_HPP
#define SRX_SOLUTION_IO_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "srx/cascade.hpp"
#include "srx/config.hpp"
#include "srx/errors.hpp"
#include "srx/policy.hpp"

namespace srx {

/// A solved cascade together with the resolved config that produced it.
struct SolutionRecord {
    ExperimentConfig config;
    CascadeSolution solution;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline json diagnostics_json(const StepDiagnostics& d) {
    return {{"status", to_string(d.status)},
            {"iterations", d.iterations},
            {"rounds", d.rounds},
            {"working_rows", d.working_rows},
            {"primal_residual", d.primal_residual},
            {"dual_residual", d.dual_residual},
            {"gap", d.gap},
            {"max_violation", d.max_violation},
            {"seconds", d.seconds}};
}

inline VectorXd json_vector(const json& j, const char* what) {
    if (!j.is_array()) {
        throw ParseError(std::string("solution file: ") + what + " must be an array");
    }
    VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

}  // namespace detail

inline json solution_to_json(const ExperimentConfig& cfg, const CascadeSolution& sol) {
    json j;
    j["config"] = to_json(cfg);
    j["lambda_star"] = to_json(pack(sol.lambda_star));
    j["h_star"] = to_json(sol.h_star);
    j["L_star"] = sol.L_star;
    j["J_star"] = sol.J_star;
    j["lambda_feasible"] = to_json(sol.lambda_feasible);
    j["J_feasible"] = sol.J_feasible;
    j["scenarios"] = {{"seed", sol.scenario_seed},
                      {"count", sol.num_scenarios},
                      {"hash", detail::hex64(sol.scenario_hash)}};
    j["step1"] = detail::diagnostics_json(sol.step1);
    j["step2"] = detail::diagnostics_json(sol.step2);
    return j;
}

inline SolutionRecord solution_from_json(const json& j) {
    if (!j.is_object() || !j.contains("config") || !j.contains("lambda_star") ||
        !j.contains("h_star")) {
        throw ParseError("solution file: needs config, lambda_star and h_star");
    }
    SolutionRecord rec;
    rec.config = config_from_json(j.at("config"));
    const Experiment ex(rec.config);
    const VectorXd lambda = detail::json_vector(j.at("lambda_star"), "lambda_star");
    if (lambda.size() != ex.lambda_dim()) {
        throw DimensionError("solution file: lambda_star has length " +
                             std::to_string(lambda.size()) + ", config implies " +
                             std::to_string(ex.lambda_dim()));
    }
    auto& s = rec.solution;
    s.lambda_star = unpack(lambda, layout_of(ex.stacked()));
    s.h_star = detail::json_vector(j.at("h_star"), "h_star");
    if (s.h_star.size() != ex.p_y()) {
        throw DimensionError("solution file: h_star has length " + std::to_string(s.h_star.size()));
    }
    s.L_star = j.value("L_star", 0.0);
    s.J_star = j.value("J_star", 0.0);
    s.J_feasible = j.value("J_feasible", 0.0);
    if (j.contains("lambda_feasible")) {
        s.lambda_feasible = detail::json_vector(j.at("lambda_feasible"), "lambda_feasible");
    }
    if (j.contains("scenarios")) {
        const json& sc = j.at("scenarios");
        s.scenario_seed = sc.value("seed", std::uint64_t{0});
        s.num_scenarios = sc.value("count", Index{0});
        s.scenario_hash = std::stoull(sc.value("hash", std::string("0")), nullptr, 16);
    }
    return rec;
}

inline void write_solution(const std::string& path, const ExperimentConfig& cfg,
                           const CascadeSolution& sol) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << solution_to_json(cfg, sol).dump(2) << '\n';
}

inline SolutionRecord read_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open solution file " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": not valid JSON: " + e.what());
    }
    return solution_from_json(j);
}

}  // namespace srx

#endif  // SRX_SOLUTION_IO_HPP
