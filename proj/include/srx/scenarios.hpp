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
#ifndef SRX_SCENARIOS_HPP
#define SRX_SCENARIOS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <utility>

#include "srx/errors.hpp"
#include "srx/lin_sys.hpp"

namespace srx {

using Rng = std::mt19937_64;

/// A distribution over disturbance vectors of fixed length, known only by sampling.
struct Sampler {
    std::string tag;
    Index dim = 0;
    std::function<VectorXd(Rng&)> draw;
};

/// Independent Gaussian steps N(mean, cov), stacked over `steps` steps.
inline Sampler gaussian_iid(const VectorXd& mean, const MatrixXd& cov, Index steps) {
    const Index nw = mean.size();
    if (cov.rows() != nw || cov.cols() != nw) {
        throw DimensionError("gaussian_iid: covariance is " + detail::shape(cov));
    }
    if (steps < 1) {
        throw InvalidArgument("gaussian_iid: steps must be >= 1");
    }
    Eigen::LLT<MatrixXd> llt(cov);
    MatrixXd L;
    if (llt.info() == Eigen::Success) {
        L = llt.matrixL();
    } else {
        // Semidefinite covariance: fall back to a symmetric square root.
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
        L = es.eigenvectors() *
            es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    Sampler s;
    s.tag = "gaussian-iid";
    s.dim = nw * steps;
    s.draw = [mean, L, steps, nw](Rng& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        VectorXd w(nw * steps);
        VectorXd z(nw);
        for (Index t = 0; t < steps; ++t) {
            for (Index i = 0; i < nw; ++i) {
                z(i) = normal(rng);
            }
            w.segment(t * nw, nw) = mean + L * z;
        }
        return w;
    };
    return s;
}

/// Columns drawn in order from one generator seeded with `seed`.
inline MatrixXd draw_samples(const Sampler& sampler, Index count, std::uint64_t seed) {
    Rng rng(seed);
    MatrixXd out(sampler.dim, count);
    for (Index k = 0; k < count; ++k) {
        out.col(k) = sampler.draw(rng);
    }
    return out;
}

/// FNV-1a over the shape and raw bytes of a matrix.
inline std::uint64_t content_hash(const MatrixXd& m) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t dims[2] = {static_cast<std::int64_t>(m.rows()),
                                  static_cast<std::int64_t>(m.cols())};
    mix(dims, sizeof(dims));
    mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return h;
}

/// N disturbance realizations with their provenance. Immutable once built.
class ScenarioSet {
public:
    ScenarioSet(MatrixXd samples, std::uint64_t seed, std::string distribution)
        : samples_(std::move(samples)), seed_(seed), distribution_(std::move(distribution)) {
        if (!samples_.allFinite()) {
            throw InvalidArgument("scenario set contains non-finite samples");
        }
        hash_ = content_hash(samples_);
    }

    static ScenarioSet draw(const Sampler& sampler, Index count, std::uint64_t seed) {
        return ScenarioSet(draw_samples(sampler, count, seed), seed, sampler.tag);
    }

    const MatrixXd& samples() const noexcept { return samples_; }
    Index size() const noexcept { return samples_.cols(); }
    Index dim() const noexcept { return samples_.rows(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& distribution() const noexcept { return distribution_; }
    std::uint64_t hash() const noexcept { return hash_; }

private:
    MatrixXd samples_;
    std::uint64_t seed_;
    std::string distribution_;
    std::uint64_t hash_ = 0;
};

}  // namespace srx

#endif  // SRX_SCENARIOS_HPP
