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
#ifndef SRX_ERRORS_HPP
#define SRX_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace srx {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SpecError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Thrown by the QP layer and the cascade. Carries the residuals of the last
/// iterate so callers can report how far from convergence the solve was.
class SolverError : public Error {
public:
    enum class Kind { MaxIterations, NumericalBreakdown, Infeasible, Internal };

    SolverError(Kind kind, const std::string& what, double primal_residual = 0.0,
                double dual_residual = 0.0, double gap = 0.0)
        : Error(what),
          kind_(kind),
          primal_residual_(primal_residual),
          dual_residual_(dual_residual),
          gap_(gap) {}

    Kind kind() const noexcept { return kind_; }
    double primal_residual() const noexcept { return primal_residual_; }
    double dual_residual() const noexcept { return dual_residual_; }
    double gap() const noexcept { return gap_; }

private:
    Kind kind_;
    double primal_residual_;
    double dual_residual_;
    double gap_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// Config validation failure. Each issue names the dotted path of the offending
/// key; `field()` is the first of them.
class SchemaError : public Error {
public:
    struct Issue {
        std::string field;
        std::string message;
    };

    SchemaError(std::string field, const std::string& message)
        : SchemaError(std::vector<Issue>{{std::move(field), message}}) {}

    explicit SchemaError(std::vector<Issue> issues)
        : Error(join(issues)), issues_(std::move(issues)) {}

    const std::string& field() const noexcept { return issues_.front().field; }
    const std::vector<Issue>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<Issue>& issues) {
        if (issues.empty()) {
            throw std::logic_error("SchemaError needs at least one issue");
        }
        std::string out;
        for (const auto& i : issues) {
            if (!out.empty()) {
                out += "; ";
            }
            out += i.field + ": " + i.message;
        }
        return out;
    }

    std::vector<Issue> issues_;
};

}  // namespace srx

#endif  // SRX_ERRORS_HPP
