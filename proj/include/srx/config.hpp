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
#ifndef SRX_CONFIG_HPP
#define SRX_CONFIG_HPP

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "srx/cascade.hpp"
#include "srx/constraints.hpp"
#include "srx/cost.hpp"
#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"
#include "srx/policy.hpp"
#include "srx/sample_size.hpp"
#include "srx/scenarios.hpp"

namespace srx {

using json = nlohmann::json;

// Matrices in a config are nested row arrays or one of
//   {"identity": k, "scale": s}, {"diag": [...]}, {"zeros": [r, c]},
//   {"blocks": [[X11, X12, ...], ...]}.
// A resolved config always uses nested row arrays.

struct ModelConfig {
    bool continuous = false;  // A, B continuous time; discretized with ZOH over Ts
    MatrixXd A;
    MatrixXd B;
    MatrixXd Bw;  // always discrete time
    double Ts = 0.0;
};

struct DisturbanceConfig {
    bool iid = true;  // mean/cov per step; otherwise over the stacked horizon
    VectorXd mean;
    MatrixXd cov;
};

struct SelectorConfig {
    enum class Kind { State, Input, Output };
    Kind kind = Kind::State;
    Index t = 0;
    MatrixXd C;  // Output only
};

struct AtomConfig {
    bool hard = false;  // an f atom: input only, never relaxed
    ConstraintAtom::Kind kind = ConstraintAtom::Kind::InfNorm;
    SelectorConfig selector;
    VectorXd a;       // Affine only: weights over the selected rows
    VectorXd offset;  // InfNorm: one per selected row; Affine: length 1
    double bound = 0.0;
    std::optional<Index> slot;
    std::string label;
};

struct ScenarioConfig {
    double epsilon = 0.0;
    double beta = 0.0;
    std::optional<std::int64_t> d;  // support dimension override
    std::uint64_t seed = 0;
};

struct ValidationConfig {
    Index trials = 100000;
    std::uint64_t seed = 0;
    double confidence = 0.99;
    MatrixXd cdf_output;  // C of the ||C x_i||_inf tables; empty: no tables
};

/// LQ comparison: Q_LQ = blockdiag(c_1 I_{blocks_1}, c_2 I_{blocks_2}, ...) per case c.
struct LqConfig {
    MatrixXd R;
    std::vector<Index> blocks;
    std::vector<std::vector<double>> cases;
};

struct MpcConfig {
    Index steps = 100;
    std::optional<std::int64_t> d;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    std::string name;
    ModelConfig model;
    Index horizon = 0;
    VectorXd x0;
    DisturbanceConfig disturbance;
    MatrixXd Q;
    MatrixXd R;
    std::vector<AtomConfig> constraints;
    Index p_y = 0;
    MatrixXd T;
    ScenarioConfig scenario;
    ValidationConfig validation;
    std::optional<LqConfig> lq;
    std::optional<MpcConfig> mpc;
};

namespace detail {

inline bool same(const MatrixXd& a, const MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

inline bool same(const VectorXd& a, const VectorXd& b) {
    return a.size() == b.size() && a == b;
}

}  // namespace detail

inline bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.continuous == b.continuous && detail::same(a.A, b.A) && detail::same(a.B, b.B) &&
           detail::same(a.Bw, b.Bw) && a.Ts == b.Ts;
}

inline bool operator==(const DisturbanceConfig& a, const DisturbanceConfig& b) {
    return a.iid == b.iid && detail::same(a.mean, b.mean) && detail::same(a.cov, b.cov);
}

inline bool operator==(const SelectorConfig& a, const SelectorConfig& b) {
    return a.kind == b.kind && a.t == b.t && detail::same(a.C, b.C);
}

inline bool operator==(const AtomConfig& a, const AtomConfig& b) {
    return a.hard == b.hard && a.kind == b.kind && a.selector == b.selector &&
           detail::same(a.a, b.a) && detail::same(a.offset, b.offset) && a.bound == b.bound &&
           a.slot == b.slot && a.label == b.label;
}

inline bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    return a.epsilon == b.epsilon && a.beta == b.beta && a.d == b.d && a.seed == b.seed;
}

inline bool operator==(const ValidationConfig& a, const ValidationConfig& b) {
    return a.trials == b.trials && a.seed == b.seed && a.confidence == b.confidence &&
           detail::same(a.cdf_output, b.cdf_output);
}

inline bool operator==(const LqConfig& a, const LqConfig& b) {
    return detail::same(a.R, b.R) && a.blocks == b.blocks && a.cases == b.cases;
}

inline bool operator==(const MpcConfig& a, const MpcConfig& b) {
    return a.steps == b.steps && a.d == b.d && a.seed == b.seed;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.name == b.name && a.model == b.model && a.horizon == b.horizon &&
           detail::same(a.x0, b.x0) && a.disturbance == b.disturbance &&
           detail::same(a.Q, b.Q) && detail::same(a.R, b.R) && a.constraints == b.constraints &&
           a.p_y == b.p_y && detail::same(a.T, b.T) && a.scenario == b.scenario &&
           a.validation == b.validation && a.lq == b.lq && a.mpc == b.mpc;
}

namespace detail {

inline std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline std::string index_path(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

/// Collects every schema issue instead of stopping at the first.
class SchemaReader {
public:
    void fail(const std::string& field, const std::string& msg) { issues_.push_back({field, msg}); }
    bool ok() const noexcept { return issues_.empty(); }
    std::size_t count() const noexcept { return issues_.size(); }
    void raise() const {
        if (!issues_.empty()) {
            throw SchemaError(issues_);
        }
    }

    const json* object(const json& parent, const std::string& key, const std::string& path,
                       bool required) {
        const std::string f = join_path(path, key);
        if (!parent.contains(key)) {
            if (required) {
                fail(f, "is required");
            }
            return nullptr;
        }
        const json& j = parent.at(key);
        if (!j.is_object()) {
            fail(f, "must be an object");
            return nullptr;
        }
        return &j;
    }

    void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!allowed.count(it.key())) {
                fail(join_path(path, it.key()), "unknown key");
            }
        }
    }

    std::optional<double> number(const json& parent, const std::string& key,
                                 const std::string& path, bool required) {
        const std::string f = join_path(path, key);
        if (!parent.contains(key)) {
            if (required) {
                fail(f, "is required");
            }
            return std::nullopt;
        }
        const json& j = parent.at(key);
        if (!j.is_number() || !std::isfinite(j.get<double>())) {
            fail(f, "must be a finite number");
            return std::nullopt;
        }
        return j.get<double>();
    }

    std::optional<std::int64_t> integer(const json& parent, const std::string& key,
                                        const std::string& path, bool required) {
        const std::string f = join_path(path, key);
        if (!parent.contains(key)) {
            if (required) {
                fail(f, "is required");
            }
            return std::nullopt;
        }
        const json& j = parent.at(key);
        if (!j.is_number_integer()) {
            fail(f, "must be an integer");
            return std::nullopt;
        }
        return j.get<std::int64_t>();
    }

    std::optional<std::uint64_t> seed(const json& parent, const std::string& key,
                                      const std::string& path, bool required) {
        const std::string f = join_path(path, key);
        if (!parent.contains(key)) {
            if (required) {
                fail(f, "is required");
            }
            return std::nullopt;
        }
        const json& j = parent.at(key);
        if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
            fail(f, "must be a non-negative integer");
            return std::nullopt;
        }
        return j.get<std::uint64_t>();
    }

    std::optional<std::string> string(const json& parent, const std::string& key,
                                      const std::string& path, bool required) {
        const std::string f = join_path(path, key);
        if (!parent.contains(key)) {
            if (required) {
                fail(f, "is required");
            }
            return std::nullopt;
        }
        const json& j = parent.at(key);
        if (!j.is_string()) {
            fail(f, "must be a string");
            return std::nullopt;
        }
        return j.get<std::string>();
    }

    std::optional<VectorXd> vector(const json& j, const std::string& f) {
        if (j.is_object() && j.size() == 1 && j.contains("zeros")) {
            const json& z = j.at("zeros");
            if (!z.is_number_integer() || z.get<std::int64_t>() < 1) {
                fail(join_path(f, "zeros"), "must be a positive integer");
                return std::nullopt;
            }
            return VectorXd::Zero(z.get<Index>());
        }
        if (!j.is_array() || j.empty()) {
            fail(f, "must be a non-empty array of numbers");
            return std::nullopt;
        }
        VectorXd v(static_cast<Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number() || !std::isfinite(j[i].get<double>())) {
                fail(index_path(f, i), "must be a finite number");
                return std::nullopt;
            }
            v(static_cast<Index>(i)) = j[i].get<double>();
        }
        return v;
    }

    std::optional<VectorXd> vector(const json& parent, const std::string& key,
                                   const std::string& path, bool required) {
        if (!parent.contains(key)) {
            if (required) {
                fail(join_path(path, key), "is required");
            }
            return std::nullopt;
        }
        return vector(parent.at(key), join_path(path, key));
    }

    std::optional<MatrixXd> matrix(const json& j, const std::string& f) {
        if (j.is_array()) {
            return rows(j, f);
        }
        if (!j.is_object()) {
            fail(f, "must be a matrix (row arrays or a constructor object)");
            return std::nullopt;
        }
        if (j.contains("identity")) {
            only_keys(j, {"identity", "scale"}, f);
            const auto k = integer(j, "identity", f, true);
            const double s = number(j, "scale", f, false).value_or(1.0);
            if (!k || *k < 1) {
                fail(join_path(f, "identity"), "must be a positive integer");
                return std::nullopt;
            }
            return MatrixXd(s * MatrixXd::Identity(*k, *k));
        }
        if (j.contains("diag")) {
            only_keys(j, {"diag"}, f);
            const auto d = vector(j.at("diag"), join_path(f, "diag"));
            if (!d) {
                return std::nullopt;
            }
            return MatrixXd(d->asDiagonal());
        }
        if (j.contains("zeros")) {
            only_keys(j, {"zeros"}, f);
            const json& z = j.at("zeros");
            if (!z.is_array() || z.size() != 2 || !z[0].is_number_integer() ||
                !z[1].is_number_integer() || z[0].get<std::int64_t>() < 1 ||
                z[1].get<std::int64_t>() < 1) {
                fail(join_path(f, "zeros"), "must be [rows, cols] with positive integers");
                return std::nullopt;
            }
            return MatrixXd::Zero(z[0].get<Index>(), z[1].get<Index>());
        }
        if (j.contains("blocks")) {
            only_keys(j, {"blocks"}, f);
            return blocks(j.at("blocks"), join_path(f, "blocks"));
        }
        fail(f, "unrecognized matrix constructor");
        return std::nullopt;
    }

    std::optional<MatrixXd> matrix(const json& parent, const std::string& key,
                                   const std::string& path, bool required) {
        if (!parent.contains(key)) {
            if (required) {
                fail(join_path(path, key), "is required");
            }
            return std::nullopt;
        }
        return matrix(parent.at(key), join_path(path, key));
    }

private:
    std::optional<MatrixXd> rows(const json& j, const std::string& f) {
        if (j.empty() || !j[0].is_array() || j[0].empty()) {
            fail(f, "must be a non-empty array of non-empty rows");
            return std::nullopt;
        }
        const std::size_t cols = j[0].size();
        MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(cols));
        for (std::size_t r = 0; r < j.size(); ++r) {
            if (!j[r].is_array() || j[r].size() != cols) {
                fail(index_path(f, r), "row length differs from row 0 (" + std::to_string(cols) + ")");
                return std::nullopt;
            }
            for (std::size_t c = 0; c < cols; ++c) {
                const json& x = j[r][c];
                if (!x.is_number() || !std::isfinite(x.get<double>())) {
                    fail(index_path(index_path(f, r), c), "must be a finite number");
                    return std::nullopt;
                }
                m(static_cast<Index>(r), static_cast<Index>(c)) = x.get<double>();
            }
        }
        return m;
    }

    std::optional<MatrixXd> blocks(const json& j, const std::string& f) {
        if (!j.is_array() || j.empty()) {
            fail(f, "must be a non-empty array of block rows");
            return std::nullopt;
        }
        std::vector<MatrixXd> band_rows;
        for (std::size_t r = 0; r < j.size(); ++r) {
            const std::string fr = index_path(f, r);
            if (!j[r].is_array() || j[r].empty()) {
                fail(fr, "must be a non-empty array of blocks");
                return std::nullopt;
            }
            std::vector<MatrixXd> row;
            for (std::size_t c = 0; c < j[r].size(); ++c) {
                auto b = matrix(j[r][c], index_path(fr, c));
                if (!b) {
                    return std::nullopt;
                }
                if (!row.empty() && b->rows() != row.front().rows()) {
                    fail(index_path(fr, c), "block height differs within the block row");
                    return std::nullopt;
                }
                row.push_back(std::move(*b));
            }
            Index width = 0;
            for (const auto& b : row) {
                width += b.cols();
            }
            MatrixXd band(row.front().rows(), width);
            Index col = 0;
            for (const auto& b : row) {
                band.middleCols(col, b.cols()) = b;
                col += b.cols();
            }
            if (!band_rows.empty() && band.cols() != band_rows.front().cols()) {
                fail(fr, "block row width differs from block row 0");
                return std::nullopt;
            }
            band_rows.push_back(std::move(band));
        }
        Index height = 0;
        for (const auto& b : band_rows) {
            height += b.rows();
        }
        MatrixXd m(height, band_rows.front().cols());
        Index row0 = 0;
        for (const auto& b : band_rows) {
            m.middleRows(row0, b.rows()) = b;
            row0 += b.rows();
        }
        return m;
    }

    std::vector<SchemaError::Issue> issues_;
};

inline std::string shape_text(Index r, Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

/// Integer or array of integers; arrays expand one atom per entry.
inline std::vector<std::int64_t> int_list(SchemaReader& rd, const json& j, const std::string& f) {
    std::vector<std::int64_t> out;
    if (j.is_number_integer()) {
        out.push_back(j.get<std::int64_t>());
        return out;
    }
    if (!j.is_array() || j.empty()) {
        rd.fail(f, "must be an integer or a non-empty array of integers");
        return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_integer()) {
            rd.fail(index_path(f, i), "must be an integer");
            return {};
        }
        out.push_back(j[i].get<std::int64_t>());
    }
    return out;
}

inline void parse_model(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    const json* m = rd.object(root, "model", "", true);
    if (!m) {
        return;
    }
    rd.only_keys(*m, {"time", "A", "B", "Bw", "Ts"}, "model");
    const std::string time = rd.string(*m, "time", "model", false).value_or("discrete");
    if (time != "discrete" && time != "continuous") {
        rd.fail("model.time", "must be \"discrete\" or \"continuous\"");
    }
    cfg.model.continuous = time == "continuous";
    cfg.model.A = rd.matrix(*m, "A", "model", true).value_or(MatrixXd());
    cfg.model.B = rd.matrix(*m, "B", "model", true).value_or(MatrixXd());
    cfg.model.Bw = rd.matrix(*m, "Bw", "model", true).value_or(MatrixXd());
    if (cfg.model.continuous) {
        const auto ts = rd.number(*m, "Ts", "model", true);
        if (ts && !(*ts > 0.0)) {
            rd.fail("model.Ts", "must be positive");
        }
        cfg.model.Ts = ts.value_or(0.0);
    } else if (m->contains("Ts")) {
        rd.fail("model.Ts", "only meaningful for a continuous-time model");
    }
    const Index n = cfg.model.A.rows();
    if (cfg.model.A.size() > 0 && cfg.model.A.cols() != n) {
        rd.fail("model.A", "must be square, got " + shape_text(n, cfg.model.A.cols()));
    }
    if (cfg.model.B.size() > 0 && n > 0 && cfg.model.B.rows() != n) {
        rd.fail("model.B", "must have " + std::to_string(n) + " rows, got " +
                               std::to_string(cfg.model.B.rows()));
    }
    if (cfg.model.Bw.size() > 0 && n > 0 && cfg.model.Bw.rows() != n) {
        rd.fail("model.Bw", "must have " + std::to_string(n) + " rows, got " +
                                std::to_string(cfg.model.Bw.rows()));
    }
}

inline void parse_disturbance(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    const json* d = rd.object(root, "disturbance", "", true);
    if (!d) {
        return;
    }
    rd.only_keys(*d, {"kind", "mean", "cov"}, "disturbance");
    const std::string kind = rd.string(*d, "kind", "disturbance", false).value_or("iid");
    if (kind != "iid" && kind != "stacked") {
        rd.fail("disturbance.kind", "must be \"iid\" or \"stacked\"");
    }
    cfg.disturbance.iid = kind == "iid";
    cfg.disturbance.mean = rd.vector(*d, "mean", "disturbance", true).value_or(VectorXd());
    cfg.disturbance.cov = rd.matrix(*d, "cov", "disturbance", true).value_or(MatrixXd());
    const Index nw = cfg.model.Bw.cols();
    if (nw == 0 || cfg.horizon < 1 || cfg.disturbance.mean.size() == 0) {
        return;
    }
    const Index len = cfg.disturbance.iid ? nw : nw * cfg.horizon;
    if (cfg.disturbance.mean.size() != len) {
        rd.fail("disturbance.mean", "must have length " + std::to_string(len) + ", got " +
                                        std::to_string(cfg.disturbance.mean.size()));
    }
    if (cfg.disturbance.cov.size() > 0 &&
        (cfg.disturbance.cov.rows() != len || cfg.disturbance.cov.cols() != len)) {
        rd.fail("disturbance.cov", "must be " + shape_text(len, len) + ", got " +
                                       shape_text(cfg.disturbance.cov.rows(),
                                                  cfg.disturbance.cov.cols()));
    }
}

inline void parse_cost(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    const json* c = rd.object(root, "cost", "", true);
    if (!c) {
        return;
    }
    rd.only_keys(*c, {"Q", "R"}, "cost");
    cfg.Q = rd.matrix(*c, "Q", "cost", true).value_or(MatrixXd());
    cfg.R = rd.matrix(*c, "R", "cost", true).value_or(MatrixXd());
    const Index n = cfg.model.A.rows();
    const Index m = cfg.model.B.cols();
    if (cfg.Q.size() > 0 && n > 0 && (cfg.Q.rows() != n || cfg.Q.cols() != n)) {
        rd.fail("cost.Q", "must be " + shape_text(n, n) + ", got " +
                              shape_text(cfg.Q.rows(), cfg.Q.cols()));
    }
    if (cfg.R.size() > 0 && m > 0 && (cfg.R.rows() != m || cfg.R.cols() != m)) {
        rd.fail("cost.R", "must be " + shape_text(m, m) + ", got " +
                              shape_text(cfg.R.rows(), cfg.R.cols()));
    }
}

inline void parse_atom(SchemaReader& rd, const json& j, const std::string& f,
                       ExperimentConfig& cfg) {
    if (!j.is_object()) {
        rd.fail(f, "must be an object");
        return;
    }
    rd.only_keys(j, {"role", "kind", "selector", "a", "offset", "bound", "slot", "label"}, f);
    AtomConfig proto;
    const std::string role = rd.string(j, "role", f, false).value_or("g");
    if (role != "f" && role != "g") {
        rd.fail(join_path(f, "role"), "must be \"f\" or \"g\"");
    }
    proto.hard = role == "f";
    const auto kind = rd.string(j, "kind", f, true);
    if (kind && *kind != "affine" && *kind != "inf_norm") {
        rd.fail(join_path(f, "kind"), "must be \"affine\" or \"inf_norm\"");
    }
    proto.kind = kind.value_or("inf_norm") == "affine" ? ConstraintAtom::Kind::Affine
                                                       : ConstraintAtom::Kind::InfNorm;
    proto.bound = rd.number(j, "bound", f, true).value_or(0.0);
    proto.label = rd.string(j, "label", f, false).value_or("");

    const json* sel = rd.object(j, "selector", f, true);
    if (!sel) {
        return;
    }
    const std::string fs = join_path(f, "selector");
    rd.only_keys(*sel, {"state", "input", "output", "C"}, fs);
    std::vector<std::int64_t> times;
    int kinds = 0;
    for (const char* k : {"state", "input", "output"}) {
        if (sel->contains(k)) {
            ++kinds;
            times = int_list(rd, sel->at(k), join_path(fs, k));
            proto.selector.kind = std::string(k) == "state"   ? SelectorConfig::Kind::State
                                  : std::string(k) == "input" ? SelectorConfig::Kind::Input
                                                              : SelectorConfig::Kind::Output;
        }
    }
    if (kinds != 1) {
        rd.fail(fs, "needs exactly one of \"state\", \"input\", \"output\"");
        return;
    }
    const bool output = proto.selector.kind == SelectorConfig::Kind::Output;
    if (output) {
        proto.selector.C = rd.matrix(*sel, "C", fs, true).value_or(MatrixXd());
    } else if (sel->contains("C")) {
        rd.fail(join_path(fs, "C"), "only allowed with an \"output\" selector");
    }
    const Index n = cfg.model.A.rows();
    const Index m = cfg.model.B.cols();
    if (output && proto.selector.C.size() > 0 && n > 0 && proto.selector.C.cols() != n) {
        rd.fail(join_path(fs, "C"), "must have " + std::to_string(n) + " columns, got " +
                                        std::to_string(proto.selector.C.cols()));
    }
    const bool input = proto.selector.kind == SelectorConfig::Kind::Input;
    if (proto.hard && !input) {
        rd.fail(join_path(f, "role"), "f atoms may only select inputs");
    }
    const Index lo = input ? 0 : 1;
    const Index hi = input ? cfg.horizon - 1 : cfg.horizon;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (cfg.horizon >= 1 && (times[i] < lo || times[i] > hi)) {
            rd.fail(fs, "time " + std::to_string(times[i]) + " outside [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + "]");
        }
    }
    const Index sel_rows = output ? proto.selector.C.rows() : (input ? m : n);

    if (proto.kind == ConstraintAtom::Kind::Affine) {
        proto.a = rd.vector(j, "a", f, true).value_or(VectorXd());
        if (proto.a.size() > 0 && sel_rows > 0 && proto.a.size() != sel_rows) {
            rd.fail(join_path(f, "a"), "must have length " + std::to_string(sel_rows) + ", got " +
                                           std::to_string(proto.a.size()));
        }
        const auto off = rd.number(j, "offset", f, false);
        proto.offset = VectorXd::Constant(1, off.value_or(0.0));
    } else {
        if (j.contains("a")) {
            rd.fail(join_path(f, "a"), "only allowed for affine atoms");
        }
        if (j.contains("offset")) {
            proto.offset = rd.vector(j, "offset", f, true).value_or(VectorXd());
            if (proto.offset.size() > 0 && sel_rows > 0 && proto.offset.size() != sel_rows) {
                rd.fail(join_path(f, "offset"), "must have length " + std::to_string(sel_rows));
            }
        } else if (sel_rows > 0) {
            proto.offset = VectorXd::Zero(sel_rows);
        }
    }

    std::vector<std::int64_t> slots;
    if (j.contains("slot")) {
        if (proto.hard) {
            rd.fail(join_path(f, "slot"), "f atoms are never relaxed");
        }
        slots = int_list(rd, j.at("slot"), join_path(f, "slot"));
        if (slots.size() != 1 && slots.size() != times.size()) {
            rd.fail(join_path(f, "slot"), "must be one slot or one per selected time");
            slots.clear();
        }
        for (auto s : slots) {
            if (s < 0) {
                rd.fail(join_path(f, "slot"), "slots must be non-negative");
            }
        }
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        AtomConfig a = proto;
        a.selector.t = times[i];
        if (!slots.empty()) {
            a.slot = slots.size() == 1 ? slots[0] : slots[i];
        }
        cfg.constraints.push_back(std::move(a));
    }
}

inline void parse_constraints(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    if (!root.contains("constraints")) {
        return;
    }
    const json& cs = root.at("constraints");
    if (!cs.is_array()) {
        rd.fail("constraints", "must be an array of atoms");
        return;
    }
    for (std::size_t i = 0; i < cs.size(); ++i) {
        parse_atom(rd, cs[i], index_path("constraints", i), cfg);
    }
}

inline void parse_relaxation(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    Index max_slot = -1;
    for (const auto& a : cfg.constraints) {
        if (a.slot) {
            max_slot = std::max(max_slot, *a.slot);
        }
    }
    const json* r = rd.object(root, "relaxation", "", false);
    cfg.p_y = max_slot + 1;
    if (r) {
        rd.only_keys(*r, {"p_y", "T"}, "relaxation");
        if (const auto py = rd.integer(*r, "p_y", "relaxation", false)) {
            if (*py < max_slot + 1) {
                rd.fail("relaxation.p_y", "must cover every slot used (>= " +
                                              std::to_string(max_slot + 1) + ")");
            }
            cfg.p_y = *py;
        }
    }
    const auto T = r ? rd.matrix(*r, "T", "relaxation", false) : std::nullopt;
    cfg.T = T.value_or(MatrixXd::Identity(cfg.p_y, cfg.p_y));
    if (cfg.T.rows() != cfg.p_y || cfg.T.cols() != cfg.p_y) {
        rd.fail("relaxation.T", "must be " + shape_text(cfg.p_y, cfg.p_y) + ", got " +
                                    shape_text(cfg.T.rows(), cfg.T.cols()));
    }
}

inline void parse_scenario(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    const json* s = rd.object(root, "scenario", "", true);
    if (!s) {
        return;
    }
    rd.only_keys(*s, {"epsilon", "beta", "d", "seed"}, "scenario");
    const auto eps = rd.number(*s, "epsilon", "scenario", true);
    const auto beta = rd.number(*s, "beta", "scenario", true);
    if (eps && !(*eps > 0.0 && *eps < 1.0)) {
        rd.fail("scenario.epsilon", "must lie in (0, 1)");
    }
    if (beta && !(*beta > 0.0 && *beta < 1.0)) {
        rd.fail("scenario.beta", "must lie in (0, 1)");
    }
    cfg.scenario.epsilon = eps.value_or(0.0);
    cfg.scenario.beta = beta.value_or(0.0);
    cfg.scenario.d = rd.integer(*s, "d", "scenario", false);
    if (cfg.scenario.d && *cfg.scenario.d < 1) {
        rd.fail("scenario.d", "must be >= 1");
    }
    cfg.scenario.seed = rd.seed(*s, "seed", "scenario", true).value_or(0);
}

inline void parse_validation(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    const json* v = rd.object(root, "validation", "", true);
    if (!v) {
        return;
    }
    rd.only_keys(*v, {"trials", "seed", "confidence", "cdf_output"}, "validation");
    if (const auto t = rd.integer(*v, "trials", "validation", false)) {
        if (*t < 1) {
            rd.fail("validation.trials", "must be >= 1");
        }
        cfg.validation.trials = *t;
    }
    const auto seed = rd.seed(*v, "seed", "validation", true);
    if (seed && root.contains("scenario") && root.at("scenario").is_object() &&
        root.at("scenario").contains("seed") && *seed == cfg.scenario.seed) {
        rd.fail("validation.seed", "must differ from scenario.seed");
    }
    cfg.validation.seed = seed.value_or(0);
    if (const auto c = rd.number(*v, "confidence", "validation", false)) {
        if (!(*c > 0.0 && *c < 1.0)) {
            rd.fail("validation.confidence", "must lie in (0, 1)");
        }
        cfg.validation.confidence = *c;
    }
    cfg.validation.cdf_output =
        rd.matrix(*v, "cdf_output", "validation", false).value_or(MatrixXd());
    const Index n = cfg.model.A.rows();
    if (cfg.validation.cdf_output.size() > 0 && n > 0 && cfg.validation.cdf_output.cols() != n) {
        rd.fail("validation.cdf_output", "must have " + std::to_string(n) + " columns");
    }
}

inline void parse_lq(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    const json* l = rd.object(root, "lq", "", false);
    if (!l) {
        return;
    }
    rd.only_keys(*l, {"R", "blocks", "cases"}, "lq");
    LqConfig lq;
    lq.R = rd.matrix(*l, "R", "lq", true).value_or(MatrixXd());
    const Index m = cfg.model.B.cols();
    if (lq.R.size() > 0 && m > 0 && (lq.R.rows() != m || lq.R.cols() != m)) {
        rd.fail("lq.R", "must be " + shape_text(m, m));
    }
    if (l->contains("blocks")) {
        for (auto b : int_list(rd, l->at("blocks"), "lq.blocks")) {
            lq.blocks.push_back(b);
        }
    } else {
        lq.blocks.push_back(cfg.model.A.rows());
    }
    Index total = 0;
    for (auto b : lq.blocks) {
        if (b < 1) {
            rd.fail("lq.blocks", "block sizes must be positive");
        }
        total += b;
    }
    if (total != cfg.model.A.rows() && cfg.model.A.rows() > 0) {
        rd.fail("lq.blocks", "must sum to the state dimension " +
                                 std::to_string(cfg.model.A.rows()));
    }
    if (l->contains("cases")) {
        const json& cs = l->at("cases");
        if (!cs.is_array()) {
            rd.fail("lq.cases", "must be an array of weight lists");
        } else {
            for (std::size_t i = 0; i < cs.size(); ++i) {
                const auto v = rd.vector(cs[i], index_path("lq.cases", i));
                if (!v) {
                    continue;
                }
                if (v->size() != static_cast<Index>(lq.blocks.size())) {
                    rd.fail(index_path("lq.cases", i),
                            "needs one weight per block (" + std::to_string(lq.blocks.size()) + ")");
                }
                lq.cases.emplace_back(v->data(), v->data() + v->size());
            }
        }
    }
    cfg.lq = std::move(lq);
}

inline void parse_mpc(SchemaReader& rd, const json& root, ExperimentConfig& cfg) {
    const json* p = rd.object(root, "mpc", "", false);
    if (!p) {
        return;
    }
    rd.only_keys(*p, {"steps", "d", "seed"}, "mpc");
    MpcConfig mpc;
    if (const auto s = rd.integer(*p, "steps", "mpc", false)) {
        if (*s < 1) {
            rd.fail("mpc.steps", "must be >= 1");
        }
        mpc.steps = *s;
    }
    mpc.d = rd.integer(*p, "d", "mpc", false);
    if (mpc.d && *mpc.d < 1) {
        rd.fail("mpc.d", "must be >= 1");
    }
    mpc.seed = rd.seed(*p, "seed", "mpc", false).value_or(cfg.scenario.seed);
    if (!cfg.disturbance.iid) {
        rd.fail("mpc", "closed-loop simulation needs an iid disturbance");
    }
    cfg.mpc = mpc;
}

}  // namespace detail

/// Build the numerical objects of an experiment from a validated config.
class Experiment {
public:
    explicit Experiment(const ExperimentConfig& cfg)
        : config_(cfg), sys_(discrete(cfg)), sd_(build_stacked(sys_, cfg.horizon)) {
        x0_ = cfg.x0;
        if (cfg.disturbance.iid) {
            cs_ = CostSpec::iid(cfg.Q, cfg.R, cfg.disturbance.mean, cfg.disturbance.cov,
                                cfg.horizon);
            sampler_ = gaussian_iid(cfg.disturbance.mean, cfg.disturbance.cov, cfg.horizon);
            step_sampler_ = gaussian_iid(cfg.disturbance.mean, cfg.disturbance.cov, 1);
        } else {
            cs_.Q = cfg.Q;
            cs_.R = cfg.R;
            cs_.mu = cfg.disturbance.mean;
            cs_.S = cfg.disturbance.cov + cfg.disturbance.mean * cfg.disturbance.mean.transpose();
            sampler_ = gaussian_iid(cfg.disturbance.mean, cfg.disturbance.cov, 1);
            sampler_.tag = "gaussian";
        }
        validate(cs_, sd_);
        spec_.p_y = cfg.p_y;
        for (const auto& a : cfg.constraints) {
            MatrixXd S;
            switch (a.selector.kind) {
                case SelectorConfig::Kind::State:
                    S = select_state(sd_, a.selector.t);
                    break;
                case SelectorConfig::Kind::Input:
                    S = select_input(sd_, a.selector.t);
                    break;
                case SelectorConfig::Kind::Output:
                    S = select_state(sd_, a.selector.t, a.selector.C);
                    break;
            }
            ConstraintAtom atom =
                a.kind == ConstraintAtom::Kind::Affine
                    ? ConstraintAtom::affine(a.a.transpose() * S, a.offset(0), a.bound, a.slot)
                    : ConstraintAtom::inf_norm(S, a.offset, a.bound, a.slot);
            atom.label = a.label;
            (a.hard ? spec_.f_atoms : spec_.g_atoms).push_back(std::move(atom));
        }
        validate(spec_, sd_);
        rc_.T = cfg.T;
        rc_.validate(cfg.p_y);
        sp_.epsilon = cfg.scenario.epsilon;
        sp_.beta = cfg.scenario.beta;
        sp_.d = cfg.scenario.d.value_or(d_full());
        sp_.validate();
    }

    const ExperimentConfig& config() const noexcept { return config_; }
    const LtiSystem& system() const noexcept { return sys_; }
    const StackedDynamics& stacked() const noexcept { return sd_; }
    const VectorXd& x0() const noexcept { return x0_; }
    const CostSpec& cost() const noexcept { return cs_; }
    const ConstraintSpec& constraints() const noexcept { return spec_; }
    const RelaxationCost& relaxation() const noexcept { return rc_; }
    const ScenarioParams& scenario_params() const noexcept { return sp_; }
    /// Disturbance over the whole horizon.
    const Sampler& sampler() const noexcept { return sampler_; }
    /// One step of an iid disturbance; empty for a stacked disturbance.
    const std::optional<Sampler>& step_sampler() const noexcept { return step_sampler_; }

    Index lambda_dim() const noexcept { return layout_of(sd_).dim(); }
    Index p_y() const noexcept { return spec_.p_y; }
    Index d_full() const noexcept { return lambda_dim() + p_y(); }
    Index sample_size() const { return static_cast<Index>(solve_sample_size(sp_)); }

    ScenarioSet design_scenarios(std::uint64_t seed) const {
        return ScenarioSet::draw(sampler_, sample_size(), seed);
    }

private:
    static LtiSystem discrete(const ExperimentConfig& cfg) {
        if (cfg.model.continuous) {
            auto [A, B] = zoh_discretize(cfg.model.A, cfg.model.B, cfg.model.Ts);
            return LtiSystem(A, B, cfg.model.Bw);
        }
        return LtiSystem(cfg.model.A, cfg.model.B, cfg.model.Bw);
    }

    ExperimentConfig config_;
    LtiSystem sys_;
    StackedDynamics sd_;
    VectorXd x0_;
    CostSpec cs_;
    ConstraintSpec spec_;
    RelaxationCost rc_;
    ScenarioParams sp_;
    Sampler sampler_;
    std::optional<Sampler> step_sampler_;
};

/// Validate a config object; throws SchemaError listing every issue found.
inline ExperimentConfig config_from_json(const json& root) {
    detail::SchemaReader rd;
    if (!root.is_object()) {
        throw SchemaError("", "config must be a JSON object");
    }
    rd.only_keys(root,
                 {"name", "model", "horizon", "x0", "disturbance", "cost", "constraints",
                  "relaxation", "scenario", "validation", "lq", "mpc"},
                 "");
    ExperimentConfig cfg;
    cfg.name = rd.string(root, "name", "", false).value_or("");
    detail::parse_model(rd, root, cfg);
    if (const auto M = rd.integer(root, "horizon", "", true)) {
        if (*M < 1) {
            rd.fail("horizon", "must be >= 1");
        }
        cfg.horizon = *M;
    }
    cfg.x0 = rd.vector(root, "x0", "", true).value_or(VectorXd());
    if (cfg.x0.size() > 0 && cfg.model.A.rows() > 0 && cfg.x0.size() != cfg.model.A.rows()) {
        rd.fail("x0", "must have length " + std::to_string(cfg.model.A.rows()) + ", got " +
                          std::to_string(cfg.x0.size()));
    }
    detail::parse_disturbance(rd, root, cfg);
    detail::parse_cost(rd, root, cfg);
    detail::parse_constraints(rd, root, cfg);
    detail::parse_relaxation(rd, root, cfg);
    detail::parse_scenario(rd, root, cfg);
    detail::parse_validation(rd, root, cfg);
    detail::parse_lq(rd, root, cfg);
    detail::parse_mpc(rd, root, cfg);
    rd.raise();

    // Remaining semantic checks (ranks, definiteness, slot coverage) live in the builders.
    try {
        const Experiment probe(cfg);
        (void)probe;
    } catch (const InvalidModel& e) {
        throw SchemaError("model", e.what());
    } catch (const SpecError& e) {
        throw SchemaError("constraints", e.what());
    } catch (const Error& e) {
        throw SchemaError("", e.what());
    }
    return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    json root;
    try {
        root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(root);
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open config file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_string(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline json to_json(const VectorXd& v) {
    json j = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        j.push_back(v(i));
    }
    return j;
}

inline json to_json(const MatrixXd& m) {
    json j = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        j.push_back(std::move(row));
    }
    return j;
}

/// The resolved config: every default filled in, atoms expanded, matrices as row arrays.
inline json to_json(const ExperimentConfig& cfg) {
    json j;
    if (!cfg.name.empty()) {
        j["name"] = cfg.name;
    }
    j["model"] = {{"time", cfg.model.continuous ? "continuous" : "discrete"},
                  {"A", to_json(cfg.model.A)},
                  {"B", to_json(cfg.model.B)},
                  {"Bw", to_json(cfg.model.Bw)}};
    if (cfg.model.continuous) {
        j["model"]["Ts"] = cfg.model.Ts;
    }
    j["horizon"] = cfg.horizon;
    j["x0"] = to_json(cfg.x0);
    j["disturbance"] = {{"kind", cfg.disturbance.iid ? "iid" : "stacked"},
                        {"mean", to_json(cfg.disturbance.mean)},
                        {"cov", to_json(cfg.disturbance.cov)}};
    j["cost"] = {{"Q", to_json(cfg.Q)}, {"R", to_json(cfg.R)}};
    json atoms = json::array();
    for (const auto& a : cfg.constraints) {
        json ja;
        ja["role"] = a.hard ? "f" : "g";
        ja["kind"] = a.kind == ConstraintAtom::Kind::Affine ? "affine" : "inf_norm";
        switch (a.selector.kind) {
            case SelectorConfig::Kind::State:
                ja["selector"] = {{"state", a.selector.t}};
                break;
            case SelectorConfig::Kind::Input:
                ja["selector"] = {{"input", a.selector.t}};
                break;
            case SelectorConfig::Kind::Output:
                ja["selector"] = {{"output", a.selector.t}, {"C", to_json(a.selector.C)}};
                break;
        }
        if (a.kind == ConstraintAtom::Kind::Affine) {
            ja["a"] = to_json(a.a);
            ja["offset"] = a.offset(0);
        } else {
            ja["offset"] = to_json(a.offset);
        }
        ja["bound"] = a.bound;
        if (a.slot) {
            ja["slot"] = *a.slot;
        }
        if (!a.label.empty()) {
            ja["label"] = a.label;
        }
        atoms.push_back(std::move(ja));
    }
    j["constraints"] = std::move(atoms);
    j["relaxation"] = {{"p_y", cfg.p_y}};
    if (cfg.p_y > 0) {
        j["relaxation"]["T"] = to_json(cfg.T);
    }
    j["scenario"] = {{"epsilon", cfg.scenario.epsilon},
                     {"beta", cfg.scenario.beta},
                     {"seed", cfg.scenario.seed}};
    if (cfg.scenario.d) {
        j["scenario"]["d"] = *cfg.scenario.d;
    }
    j["validation"] = {{"trials", cfg.validation.trials},
                       {"seed", cfg.validation.seed},
                       {"confidence", cfg.validation.confidence}};
    if (cfg.validation.cdf_output.size() > 0) {
        j["validation"]["cdf_output"] = to_json(cfg.validation.cdf_output);
    }
    if (cfg.lq) {
        j["lq"] = {{"R", to_json(cfg.lq->R)}, {"blocks", cfg.lq->blocks}, {"cases", cfg.lq->cases}};
    }
    if (cfg.mpc) {
        j["mpc"] = {{"steps", cfg.mpc->steps}, {"seed", cfg.mpc->seed}};
        if (cfg.mpc->d) {
            j["mpc"]["d"] = *cfg.mpc->d;
        }
    }
    return j;
}

}  // namespace srx

#endif  // SRX_CONFIG_HPP
