// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "risfl/fed.hpp"
#include "risfl/mlp.hpp"
#include "risfl/rng.hpp"

namespace risfl {

/// Empirical stand-ins for the smoothness, gradient and variance constants.
struct TheoryEstimates {
    double sigma_hat = 0.0; // max stochastic gradient norm
    double nu_hat = 0.0;    // max stochastic deviation from the full-batch gradient
    double L_hat = 0.0;     // max finite gradient-difference ratio
    double F0 = 0.0;        // lambda^0-weighted full loss at theta^0
};

struct ConvergenceTrace {
    std::vector<std::int64_t> t;        // iteration index (round * tau)
    std::vector<double> grad_norm_sq;   // ||sum_n lambda_n grad l_n(theta)||^2, full batch
    std::vector<double> running_mean;   // mean of grad_norm_sq over checkpoints so far

    std::size_t size() const { return t.size(); }
};

/// Full-batch gradient of worker n's training loss.
inline LossAndGrad full_gradient(const ModelParams& theta, const Dataset& train) {
    return loss_and_grad(theta, train.features, train.labels);
}

/// Gradient of F(lambda, theta) = sum_n lambda_n l_n(theta) over the train splits.
inline Vector weighted_full_gradient(const ModelParams& theta, const std::vector<double>& lambda,
                                     const std::vector<WorkerData>& workers) {
    if (lambda.size() != workers.size()) throw std::invalid_argument("weighted gradient: one weight per worker");
    Vector g = Vector::Zero(ModelParams::total_size);
    for (std::size_t n = 0; n < workers.size(); ++n) {
        if (lambda[n] == 0.0) continue;
        g.noalias() += lambda[n] * full_gradient(theta, workers[n].train).grad.flat();
    }
    return g;
}

inline double weighted_full_loss(const ModelParams& theta, const std::vector<double>& lambda,
                                 const std::vector<WorkerData>& workers) {
    double f = 0.0;
    for (std::size_t n = 0; n < workers.size(); ++n)
        if (lambda[n] != 0.0) f += lambda[n] * loss(theta, workers[n].train.features, workers[n].train.labels);
    return f;
}

inline void accumulate_running_mean(ConvergenceTrace& trace) {
    trace.running_mean.resize(trace.grad_norm_sq.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < trace.grad_norm_sq.size(); ++i) {
        sum += trace.grad_norm_sq[i];
        trace.running_mean[i] = sum / static_cast<double>(i + 1);
    }
}

/// Samples the convergence quantity at round boundaries, where the averaged
/// iterate equals the global model exactly.
inline ConvergenceTrace grad_norm_trace(const std::vector<Checkpoint>& checkpoints,
                                        const std::vector<WorkerData>& workers, int tau) {
    if (checkpoints.empty()) throw std::invalid_argument("grad_norm_trace: no checkpoints recorded");
    ConvergenceTrace trace;
    for (const auto& c : checkpoints) {
        if (c.lambda.size() != workers.size())
            throw std::invalid_argument("grad_norm_trace: checkpoint without dual weights");
        trace.t.push_back(static_cast<std::int64_t>(c.round) * tau);
        trace.grad_norm_sq.push_back(weighted_full_gradient(c.theta, c.lambda, workers).squaredNorm());
    }
    accumulate_running_mean(trace);
    return trace;
}

/// Probe p draws a fresh He-initialized model and a minibatch on worker
/// p mod N from its own substream, so a larger probe count only adds probes.
inline TheoryEstimates estimate_constants(const std::vector<WorkerData>& workers, const ModelParams& theta0,
                                          const std::vector<double>& lambda0, int n_probes, int batch_size,
                                          std::uint64_t seed) {
    if (workers.empty()) throw std::invalid_argument("estimate_constants: no workers");
    TheoryEstimates est;
    est.F0 = weighted_full_loss(theta0, lambda0, workers);
    for (int p = 0; p < n_probes; ++p) {
        Rng rng = substream(seed, Stream::probe, {static_cast<std::uint64_t>(p)});
        const ModelParams theta = init_params(rng);
        const Dataset& train = workers[static_cast<std::size_t>(p) % workers.size()].train;
        const MiniBatch b = draw_batch(train, batch_size, rng);
        const Vector stochastic = grad(theta, b.inputs, b.labels).flat();
        const Vector full = full_gradient(theta, train).grad.flat();
        est.sigma_hat = std::max(est.sigma_hat, stochastic.norm());
        est.nu_hat = std::max(est.nu_hat, (stochastic - full).norm());

        // nearby point along a random direction, 1e-3 of the parameter norm away
        Vector dir(ModelParams::total_size);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = nd(rng);
        dir *= 1e-3 * theta.flat().norm() / dir.norm();
        const ModelParams near(theta.flat() + dir);
        const Vector full_near = full_gradient(near, train).grad.flat();
        est.L_hat = std::max(est.L_hat, (full_near - full).norm() / dir.norm());
    }
    return est;
}

/// (2 F0 + (17/2 + 8/m) sigma^2 + 17 nu^2) / sqrt(T).
inline double theorem_bound(const TheoryEstimates& est, int m, std::int64_t T) {
    if (m < 1 || T < 1) throw std::invalid_argument("theorem_bound: m and T must be >= 1");
    const double s2 = est.sigma_hat * est.sigma_hat;
    const double v2 = est.nu_hat * est.nu_hat;
    return (2.0 * est.F0 + (8.5 + 8.0 / m) * s2 + 17.0 * v2) / std::sqrt(static_cast<double>(T));
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0; // nonpositive t or value
};

/// Least-squares slope of log(y) against log(x), skipping nonpositive pairs.
inline SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_loglog_slope: length mismatch");
    std::vector<double> lx, ly;
    SlopeFit fit;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            ++fit.skipped;
            continue;
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    fit.used = lx.size();
    if (fit.used < 2) throw std::invalid_argument("fit_loglog_slope: need two positive points");
    const double n = static_cast<double>(fit.used);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: x values are all equal");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

/// Decay rate of the trace's running mean in log-log coordinates.
inline SlopeFit slope_fit(const ConvergenceTrace& trace) {
    if (trace.size() < 5) throw std::invalid_argument("slope_fit: need at least 5 checkpoints");
    std::vector<double> t(trace.t.begin(), trace.t.end());
    return fit_loglog_slope(t, trace.running_mean);
}

/// Local step count for the theorem's schedule: tau = T^{1/4} with T = K tau
/// gives tau = K^{1/3}, rounded to the nearest integer.
inline int theorem_local_steps(int rounds) {
    return std::max(1, static_cast<int>(std::lround(std::cbrt(static_cast<double>(rounds)))));
}

/// Step sizes alpha = 1/(L sqrt(T)), gamma = 1/(sqrt(N) T) for a given round count.
inline TrainConfig theorem_schedule(TrainConfig cfg, const TheoryEstimates& est) {
    cfg.local_steps = theorem_local_steps(cfg.rounds);
    const double T = static_cast<double>(cfg.rounds) * cfg.local_steps;
    cfg.primal_step = 1.0 / (est.L_hat * std::sqrt(T));
    cfg.dual_step = 1.0 / (std::sqrt(static_cast<double>(cfg.workers)) * T);
    return cfg;
}

} // namespace risfl
