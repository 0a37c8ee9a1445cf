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
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "risfl/labeling.hpp"
#include "risfl/metrics.hpp"
#include "risfl/mlp.hpp"
#include "risfl/rng.hpp"

namespace risfl {

enum class Algorithm { fgdra, drfa, fedavg };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::fgdra: return "fgdra";
    case Algorithm::drfa: return "drfa";
    case Algorithm::fedavg: return "fedavg";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "fgdra") return Algorithm::fgdra;
    if (s == "drfa") return Algorithm::drfa;
    if (s == "fedavg") return Algorithm::fedavg;
    throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

struct TrainConfig {
    Algorithm algorithm = Algorithm::fgdra;
    int workers = 4;          // N
    int sampled = 3;          // m
    int rounds = 800;         // K
    int local_steps = 10;     // tau
    double primal_step = 2e-3; // alpha
    double dual_step = 5e-3;   // gamma
    int batch_size = 50;      // B
    std::uint64_t seed = 1;
    int eval_every = 1;       // rounds between test evaluations (last round always evaluated)
    int checkpoint_every = 0; // 0 disables checkpoint capture

    void validate() const {
        if (workers < 1) throw std::invalid_argument("workers must be >= 1");
        if (sampled < 1 || sampled > workers) throw std::invalid_argument("sampled must satisfy 1 <= m <= N");
        if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
        if (local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
        if (!(primal_step > 0.0)) throw std::invalid_argument("primal_step must be positive");
        if (!(dual_step >= 0.0)) throw std::invalid_argument("dual_step must be nonnegative");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
        if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
    }
};

struct RoundLog {
    int round = 0; // algorithmic rounds completed
    std::vector<double> accuracy; // per-worker test accuracy, percent
    double average = 0.0;
    double worst = 0.0;
    double sd = 0.0;
    std::vector<double> lambda;
    int communication_rounds = 0;
};

/// Global model and dual weights at the start of round `round` (t = round * tau).
struct Checkpoint {
    int round = 0;
    ModelParams theta;
    std::vector<double> lambda;
};

struct RunResult {
    std::vector<RoundLog> logs;
    ModelParams theta;
    std::vector<double> lambda;
    std::vector<Checkpoint> checkpoints;
    int communication_rounds = 0;
};

struct MiniBatch {
    RowMatrix inputs;
    std::vector<int> labels;
};

/// B rows drawn uniformly with replacement; B at or above the split size
/// returns the whole split in order (a deterministic full batch).
inline MiniBatch draw_batch(const Dataset& ds, int batch_size, Rng& rng) {
    const auto n = ds.size();
    if (n == 0) throw std::invalid_argument("draw_batch: empty dataset");
    if (static_cast<std::size_t>(batch_size) >= n) return {ds.features, ds.labels};
    MiniBatch b;
    b.inputs.resize(batch_size, ds.features.cols());
    b.labels.resize(static_cast<std::size_t>(batch_size));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int i = 0; i < batch_size; ++i) {
        const std::size_t j = pick(rng);
        b.inputs.row(i) = ds.features.row(static_cast<Eigen::Index>(j));
        b.labels[static_cast<std::size_t>(i)] = ds.labels[j];
    }
    return b;
}

inline std::vector<double> uniform_weights(int n) {
    return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

/// Sequential proportional draws without replacement, renormalizing over
/// the unchosen workers after each pick. If the positive mass runs out the
/// remaining slots are filled uniformly from the unchosen workers.
/// Returns indices in ascending order.
inline std::vector<int> sample_workers(const std::vector<double>& lambda, int m, Rng& rng) {
    const int n = static_cast<int>(lambda.size());
    if (m < 1 || m > n) throw std::invalid_argument("sample_workers: need 1 <= m <= N");
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(m));
    for (int draw = 0; draw < m; ++draw) {
        double mass = 0.0;
        for (int i = 0; i < n; ++i)
            if (!taken[i]) mass += std::max(lambda[i], 0.0);
        int pick = -1;
        if (mass > 0.0) {
            const double u = uniform(rng, 0.0, mass);
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                if (taken[i] || !(lambda[i] > 0.0)) continue;
                acc += lambda[i];
                pick = i;
                if (u < acc) break;
            }
        } else {
            std::vector<int> free;
            for (int i = 0; i < n; ++i)
                if (!taken[i]) free.push_back(i);
            std::uniform_int_distribution<std::size_t> d(0, free.size() - 1);
            pick = free[d(rng)];
        }
        taken[pick] = true;
        chosen.push_back(pick);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

/// tau SGD steps with step alpha * lambda_n. `on_step(t, theta)` sees the
/// iterate before update t.
template <typename OnStep>
ModelParams local_sgd(const Dataset& train, ModelParams theta, double lambda_n, int tau, double alpha, int batch_size,
                      Rng& rng, OnStep&& on_step) {
    const double step = alpha * lambda_n;
    for (int t = 0; t < tau; ++t) {
        on_step(t, theta);
        const MiniBatch b = draw_batch(train, batch_size, rng);
        const ModelParams g = grad(theta, b.inputs, b.labels);
        theta.flat().noalias() -= step * g.flat();
    }
    return theta;
}

inline ModelParams local_sgd(const Dataset& train, ModelParams theta, double lambda_n, int tau, double alpha,
                             int batch_size, Rng& rng) {
    return local_sgd(train, std::move(theta), lambda_n, tau, alpha, batch_size, rng, [](int, const ModelParams&) {});
}

/// Exponentiated ascent on one dual weight: lambda_n exp(gamma * loss).
inline double dual_update(double lambda_n, double batch_loss, double gamma) {
    return lambda_n * std::exp(gamma * batch_loss);
}

inline double dual_update(double lambda_n, const ModelParams& theta, double gamma, const MiniBatch& batch) {
    return dual_update(lambda_n, loss(theta, batch.inputs, batch.labels), gamma);
}

/// Unweighted mean, summed in the order given.
inline ModelParams ps_aggregate(const std::vector<ModelParams>& thetas) {
    if (thetas.empty()) throw std::invalid_argument("ps_aggregate: nothing to average");
    Vector sum = thetas.front().flat();
    for (std::size_t i = 1; i < thetas.size(); ++i) sum += thetas[i].flat();
    sum /= static_cast<double>(thetas.size());
    return ModelParams(std::move(sum));
}

/// Projects a nonnegative vector onto the simplex by scaling. An all-zero
/// vector resets to uniform; `reset` reports when that happened.
inline std::vector<double> normalize(std::vector<double> lambda, bool* reset = nullptr) {
    if (lambda.empty()) throw std::invalid_argument("normalize: empty weight vector");
    double sum = 0.0;
    for (double v : lambda) {
        if (!(v >= 0.0)) throw std::invalid_argument("normalize: weights must be nonnegative");
        sum += v;
    }
    if (reset) *reset = !(sum > 0.0) || !std::isfinite(sum);
    if (!(sum > 0.0) || !std::isfinite(sum)) return uniform_weights(static_cast<int>(lambda.size()));
    for (double& v : lambda) v /= sum;
    return lambda;
}

/// Called once per round boundary with (round, theta^round, lambda^round).
using RoundObserver = std::function<void(int, const ModelParams&, const std::vector<double>&)>;

namespace detail {

inline Rng local_stream(std::uint64_t seed, int worker, int round) {
    return substream(seed, Stream::local, {static_cast<std::uint64_t>(worker), static_cast<std::uint64_t>(round)});
}
inline Rng dual_stream(std::uint64_t seed, int worker, int round) {
    return substream(seed, Stream::dual, {static_cast<std::uint64_t>(worker), static_cast<std::uint64_t>(round)});
}

class RunRecorder {
public:
    RunRecorder(const TrainConfig& cfg, const std::vector<WorkerData>& workers, RoundObserver observer)
        : cfg_(cfg), workers_(workers), observer_(std::move(observer)) {}

    void boundary(int round, const ModelParams& theta, const std::vector<double>& lambda) {
        if (observer_) observer_(round, theta, lambda);
        const bool last = round == cfg_.rounds;
        if (cfg_.checkpoint_every > 0 && (round % cfg_.checkpoint_every == 0 || last))
            result.checkpoints.push_back({round, theta, lambda});
        if (round > 0 && (round % cfg_.eval_every == 0 || last)) {
            Evaluation e = evaluate(theta, workers_);
            RoundLog log;
            log.round = round;
            log.average = e.average;
            log.worst = e.worst;
            log.sd = e.sd;
            log.accuracy = std::move(e.per_worker);
            log.lambda = lambda;
            log.communication_rounds = result.communication_rounds;
            result.logs.push_back(std::move(log));
        }
    }

    RunResult result;

private:
    const TrainConfig& cfg_;
    const std::vector<WorkerData>& workers_;
    RoundObserver observer_;
};

inline void check_inputs(const TrainConfig& cfg, const std::vector<WorkerData>& workers) {
    cfg.validate();
    if (static_cast<int>(workers.size()) != cfg.workers)
        throw std::invalid_argument("run: expected " + std::to_string(cfg.workers) + " worker datasets, got " +
                                    std::to_string(workers.size()));
}

inline ModelParams initial_params(std::uint64_t seed) {
    Rng rng = substream(seed, Stream::init);
    return init_params(rng);
}

} // namespace detail

/// Federated group distributionally robust averaging: lambda-proportional
/// sampling, lambda-scaled local SGD, local exponentiated dual ascent and a
/// single exchange per round.
inline RunResult run_fgdra(const TrainConfig& cfg, const std::vector<WorkerData>& workers,
                           const RoundObserver& observer = {}) {
    detail::check_inputs(cfg, workers);
    detail::RunRecorder rec(cfg, workers, observer);
    ModelParams theta = detail::initial_params(cfg.seed);
    std::vector<double> lambda = uniform_weights(cfg.workers);
    rec.boundary(0, theta, lambda);
    for (int k = 0; k < cfg.rounds; ++k) {
        Rng server = substream(cfg.seed, Stream::server, {static_cast<std::uint64_t>(k)});
        const std::vector<int> chosen = sample_workers(lambda, cfg.sampled, server);
        std::vector<ModelParams> locals;
        std::vector<double> next = lambda;
        locals.reserve(chosen.size());
        for (int n : chosen) {
            const Dataset& train = workers[static_cast<std::size_t>(n)].train;
            Rng local = detail::local_stream(cfg.seed, n, k);
            locals.push_back(local_sgd(train, theta, lambda[n], cfg.local_steps, cfg.primal_step, cfg.batch_size, local));
            Rng dual = detail::dual_stream(cfg.seed, n, k);
            const MiniBatch b = draw_batch(train, cfg.batch_size, dual);
            next[n] = dual_update(lambda[n], locals.back(), cfg.dual_step, b);
        }
        theta = ps_aggregate(locals);
        lambda = normalize(std::move(next));
        rec.result.communication_rounds += 1;
        rec.boundary(k + 1, theta, lambda);
    }
    rec.result.theta = std::move(theta);
    rec.result.lambda = std::move(lambda);
    return std::move(rec.result);
}

/// Federated averaging: uniform sampling, plain local SGD with step alpha.
inline RunResult run_fedavg(const TrainConfig& cfg, const std::vector<WorkerData>& workers,
                            const RoundObserver& observer = {}) {
    detail::check_inputs(cfg, workers);
    detail::RunRecorder rec(cfg, workers, observer);
    ModelParams theta = detail::initial_params(cfg.seed);
    const std::vector<double> lambda = uniform_weights(cfg.workers);
    rec.boundary(0, theta, lambda);
    for (int k = 0; k < cfg.rounds; ++k) {
        Rng server = substream(cfg.seed, Stream::server, {static_cast<std::uint64_t>(k)});
        const std::vector<int> chosen = sample_workers(lambda, cfg.sampled, server);
        std::vector<ModelParams> locals;
        locals.reserve(chosen.size());
        for (int n : chosen) {
            Rng local = detail::local_stream(cfg.seed, n, k);
            locals.push_back(local_sgd(workers[static_cast<std::size_t>(n)].train, theta, 1.0, cfg.local_steps,
                                       cfg.primal_step, cfg.batch_size, local));
        }
        theta = ps_aggregate(locals);
        rec.result.communication_rounds += 1;
        rec.boundary(k + 1, theta, lambda);
    }
    rec.result.theta = std::move(theta);
    rec.result.lambda = lambda;
    return std::move(rec.result);
}

/// Distributionally robust federated averaging baseline. The primal half
/// matches FGDRA; the dual half needs a second exchange: the server averages
/// the sampled workers' iterates at a random local step, sends that snapshot
/// to a uniformly drawn set of m workers, and applies exponentiated ascent to
/// the batch losses they return.
inline RunResult run_drfa(const TrainConfig& cfg, const std::vector<WorkerData>& workers,
                          const RoundObserver& observer = {}) {
    detail::check_inputs(cfg, workers);
    detail::RunRecorder rec(cfg, workers, observer);
    ModelParams theta = detail::initial_params(cfg.seed);
    std::vector<double> lambda = uniform_weights(cfg.workers);
    const std::vector<double> flat = uniform_weights(cfg.workers);
    rec.boundary(0, theta, lambda);
    for (int k = 0; k < cfg.rounds; ++k) {
        Rng server = substream(cfg.seed, Stream::server, {static_cast<std::uint64_t>(k)});
        const std::vector<int> chosen = sample_workers(lambda, cfg.sampled, server);
        Rng snap_rng = substream(cfg.seed, Stream::snapshot, {static_cast<std::uint64_t>(k)});
        const int snap_step = std::uniform_int_distribution<int>(0, cfg.local_steps - 1)(snap_rng);

        std::vector<ModelParams> locals, snapshots;
        locals.reserve(chosen.size());
        snapshots.reserve(chosen.size());
        for (int n : chosen) {
            Rng local = detail::local_stream(cfg.seed, n, k);
            locals.push_back(local_sgd(workers[static_cast<std::size_t>(n)].train, theta, lambda[n], cfg.local_steps,
                                       cfg.primal_step, cfg.batch_size, local, [&](int t, const ModelParams& it) {
                                           if (t == snap_step) snapshots.push_back(it);
                                       }));
        }
        theta = ps_aggregate(locals);
        rec.result.communication_rounds += 1;

        // second exchange: snapshot losses on a uniformly drawn worker set
        const ModelParams snapshot = ps_aggregate(snapshots);
        const std::vector<int> probed = sample_workers(flat, cfg.sampled, snap_rng);
        std::vector<double> next = lambda;
        for (int n : probed) {
            Rng dual = detail::dual_stream(cfg.seed, n, k);
            const MiniBatch b = draw_batch(workers[static_cast<std::size_t>(n)].train, cfg.batch_size, dual);
            next[n] = dual_update(lambda[n], snapshot, cfg.dual_step, b);
        }
        lambda = normalize(std::move(next));
        rec.result.communication_rounds += 1;
        rec.boundary(k + 1, theta, lambda);
    }
    rec.result.theta = std::move(theta);
    rec.result.lambda = std::move(lambda);
    return std::move(rec.result);
}

inline RunResult run(const TrainConfig& cfg, const std::vector<WorkerData>& workers,
                     const RoundObserver& observer = {}) {
    switch (cfg.algorithm) {
    case Algorithm::fgdra: return run_fgdra(cfg, workers, observer);
    case Algorithm::drfa: return run_drfa(cfg, workers, observer);
    case Algorithm::fedavg: return run_fedavg(cfg, workers, observer);
    }
    throw std::invalid_argument("run: unknown algorithm");
}

} // namespace risfl
