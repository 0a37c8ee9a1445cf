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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace risfl;
using risfl::testing::max_abs_diff;
using risfl::testing::small_workers;

namespace {

const std::vector<WorkerData>& workers() {
    static const auto w = small_workers(4, 80);
    return w;
}

TrainConfig small_config(Algorithm a) {
    TrainConfig c;
    c.algorithm = a;
    c.rounds = 15;
    c.local_steps = 3;
    c.batch_size = 10;
    c.primal_step = 0.05;
    c.dual_step = 0.5;
    c.seed = 42;
    return c;
}

// Records the global model at every round boundary.
struct Trajectory {
    std::vector<ModelParams> thetas;
    std::vector<std::vector<double>> lambdas;
    RoundObserver observer() {
        return [this](int, const ModelParams& t, const std::vector<double>& l) {
            thetas.push_back(t);
            lambdas.push_back(l);
        };
    }
};

} // namespace

TEST(SampleWorkers, DegenerateWeightsPickTheSupport) {
    Rng rng(1);
    EXPECT_EQ(sample_workers({1, 0, 0, 0}, 1, rng), std::vector<int>{0});
}

TEST(SampleWorkers, FullParticipationIgnoresWeights) {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_workers({0.97, 0.01, 0.01, 0.01}, 4, rng), (std::vector<int>{0, 1, 2, 3}));
}

TEST(SampleWorkers, ProportionalFrequency) {
    Rng rng(3);
    int hits = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) hits += sample_workers({0.7, 0.1, 0.1, 0.1}, 1, rng)[0] == 0;
    EXPECT_NEAR(static_cast<double>(hits) / draws, 0.7, 0.01);
}

TEST(SampleWorkers, WithoutReplacementSecondDrawRenormalizes) {
    // P(1 in set of 2) = P(1 first) + sum_j P(j first) P(1 | j removed)
    const std::vector<double> lam{0.5, 0.3, 0.2};
    const double expected = 0.3 + 0.5 * (0.3 / 0.5) + 0.2 * (0.3 / 0.8);
    Rng rng(4);
    int hits = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const auto s = sample_workers(lam, 2, rng);
        ASSERT_EQ(s.size(), 2u);
        ASSERT_LT(s[0], s[1]);
        hits += std::count(s.begin(), s.end(), 1) > 0;
    }
    EXPECT_NEAR(static_cast<double>(hits) / draws, expected, 0.01);
}

TEST(SampleWorkers, TooFewPositiveWeightsFillUniformly) {
    Rng rng(5);
    std::set<int> seen;
    for (int i = 0; i < 200; ++i) {
        const auto s = sample_workers({1, 0, 0, 0}, 2, rng);
        ASSERT_EQ(s.size(), 2u);
        EXPECT_EQ(s[0], 0);
        seen.insert(s[1]);
    }
    EXPECT_EQ(seen, (std::set<int>{1, 2, 3}));
}

TEST(SampleWorkers, RejectsBadSetSize) {
    Rng rng(6);
    EXPECT_THROW(sample_workers({0.5, 0.5}, 3, rng), std::invalid_argument);
    EXPECT_THROW(sample_workers({0.5, 0.5}, 0, rng), std::invalid_argument);
}

TEST(DrawBatch, FullBatchWhenLargerThanSplit) {
    const auto& w = workers()[0];
    Rng rng(7);
    const auto b = draw_batch(w.train, 1000, rng);
    EXPECT_EQ(b.inputs, w.train.features);
    EXPECT_EQ(b.labels, w.train.labels);
    const auto s = draw_batch(w.train, 5, rng);
    EXPECT_EQ(s.inputs.rows(), 5);
}

TEST(LocalSgd, ZeroWeightLeavesModelUnchanged) {
    const ModelParams theta = detail::initial_params(1);
    Rng rng(8);
    EXPECT_TRUE(local_sgd(workers()[0].train, theta, 0.0, 5, 0.1, 10, rng) == theta);
}

TEST(LocalSgd, SingleStepMatchesHandComputation) {
    const ModelParams theta = detail::initial_params(2);
    const auto& train = workers()[1].train;
    Rng a(9), b(9);
    const ModelParams out = local_sgd(train, theta, 0.3, 1, 0.02, 10, a);
    const MiniBatch batch = draw_batch(train, 10, b);
    const Vector expected = theta.flat() - 0.02 * 0.3 * grad(theta, batch.inputs, batch.labels).flat();
    EXPECT_LE((out.flat() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LocalSgd, OnlyTheProductOfStepAndWeightMatters) {
    const ModelParams theta = detail::initial_params(3);
    Rng a(10), b(10);
    const ModelParams x = local_sgd(workers()[2].train, theta, 0.25, 4, 0.08, 10, a);
    const ModelParams y = local_sgd(workers()[2].train, theta, 0.5, 4, 0.04, 10, b);
    EXPECT_TRUE(x == y);
}

TEST(DualUpdate, Values) {
    EXPECT_EQ(dual_update(0.3, 1.7, 0.0), 0.3);
    EXPECT_EQ(dual_update(0.0, 1.7, 5.0), 0.0);
    EXPECT_NEAR(dual_update(0.25, std::log(4.0), 5e-3), 0.2517389, 1e-7);
    EXPECT_NEAR(dual_update(0.25, std::log(4.0), 5e-3), 0.25 * std::exp(0.005 * std::log(4.0)), 1e-16);
}

TEST(DualUpdate, LargestLossGetsLargestFactor) {
    const ModelParams theta = detail::initial_params(4);
    Rng rng(11);
    std::vector<double> losses, factors;
    for (const auto& w : workers()) {
        const MiniBatch b = draw_batch(w.train, 10, rng);
        losses.push_back(loss(theta, b.inputs, b.labels));
        factors.push_back(dual_update(1.0, losses.back(), 0.2));
    }
    EXPECT_EQ(std::max_element(losses.begin(), losses.end()) - losses.begin(),
              std::max_element(factors.begin(), factors.end()) - factors.begin());
}

TEST(Aggregate, Averages) {
    const ModelParams t = detail::initial_params(5);
    EXPECT_TRUE(ps_aggregate({t}) == t);
    EXPECT_LE(max_abs_diff(ps_aggregate({t, t, t}), t), 1e-16);
    EXPECT_TRUE(ps_aggregate({t, ModelParams(-t.flat())}).flat().isZero());
    EXPECT_THROW(ps_aggregate({}), std::invalid_argument);
}

TEST(Normalize, Cases) {
    EXPECT_EQ(normalize({2, 2, 2, 2}), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
    const auto n = normalize({1, 3});
    EXPECT_DOUBLE_EQ(n[0], 0.25);
    EXPECT_DOUBLE_EQ(n[1], 0.75);
    const std::vector<double> already{0.1, 0.2, 0.3, 0.4};
    const auto same = normalize(already);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(same[i], already[i], 1e-15);
    bool reset = false;
    EXPECT_EQ(normalize({0, 0, 0}, &reset), uniform_weights(3));
    EXPECT_TRUE(reset);
    normalize({1, 0, 0}, &reset);
    EXPECT_FALSE(reset);
    EXPECT_THROW(normalize({1, -0.5}), std::invalid_argument);
    EXPECT_THROW(normalize({}), std::invalid_argument);
}

TEST(TrainConfig, Validation) {
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    c.sampled = 5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.local_steps = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.primal_step = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_THROW(run_fgdra(TrainConfig{}, small_workers(2, 20)), std::invalid_argument);
}

TEST(Algorithm, NamesRoundTrip) {
    for (Algorithm a : {Algorithm::fgdra, Algorithm::drfa, Algorithm::fedavg}) EXPECT_EQ(parse_algorithm(to_string(a)), a);
    EXPECT_THROW(parse_algorithm("sgd"), std::invalid_argument);
}

TEST(Fgdra, ZeroDualStepFullParticipationIsFedAvgWithScaledStep) {
    TrainConfig f = small_config(Algorithm::fgdra);
    f.dual_step = 0.0;
    f.sampled = 4;
    f.rounds = 25;
    TrainConfig a = f;
    a.algorithm = Algorithm::fedavg;
    a.primal_step = f.primal_step / 4;
    Trajectory tf, ta;
    run_fgdra(f, workers(), tf.observer());
    run_fedavg(a, workers(), ta.observer());
    ASSERT_EQ(tf.thetas.size(), ta.thetas.size());
    double drift = 0.0;
    for (std::size_t k = 0; k < tf.thetas.size(); ++k) {
        drift += (tf.thetas[k].flat() - ta.thetas[k].flat()).norm();
        for (double l : tf.lambdas[k]) EXPECT_EQ(l, 0.25);
    }
    EXPECT_LE(drift, 1e-9);
}

TEST(Drfa, ZeroDualStepFullParticipationIsFedAvgWithScaledStep) {
    TrainConfig d = small_config(Algorithm::drfa);
    d.dual_step = 0.0;
    d.sampled = 4;
    TrainConfig a = d;
    a.algorithm = Algorithm::fedavg;
    a.primal_step = d.primal_step / 4;
    Trajectory td, ta;
    run_drfa(d, workers(), td.observer());
    run_fedavg(a, workers(), ta.observer());
    double drift = 0.0;
    for (std::size_t k = 0; k < td.thetas.size(); ++k) drift += (td.thetas[k].flat() - ta.thetas[k].flat()).norm();
    EXPECT_LE(drift, 1e-9);
}

TEST(Fgdra, SingleWorkerIsPlainLocalSgd) {
    const auto one = small_workers(1, 60);
    TrainConfig c = small_config(Algorithm::fgdra);
    c.workers = 1;
    c.sampled = 1;
    c.rounds = 4;
    const RunResult r = run_fgdra(c, one);
    ModelParams theta = detail::initial_params(c.seed);
    for (int k = 0; k < c.rounds; ++k) {
        Rng local = detail::local_stream(c.seed, 0, k);
        theta = local_sgd(one[0].train, theta, 1.0, c.local_steps, c.primal_step, c.batch_size, local);
    }
    EXPECT_LE(max_abs_diff(r.theta, theta), 1e-15);
    EXPECT_EQ(r.lambda, std::vector<double>{1.0});
}

TEST(Fgdra, DualWeightsStayOnSimplex) {
    Trajectory t;
    run_fgdra(small_config(Algorithm::fgdra), workers(), t.observer());
    bool moved = false;
    for (const auto& l : t.lambdas) {
        double sum = 0.0;
        for (double v : l) {
            EXPECT_GE(v, 0.0);
            sum += v;
            moved |= v != 0.25;
        }
        EXPECT_LE(std::abs(sum - 1.0), 1e-12);
    }
    EXPECT_TRUE(moved);
}

TEST(Fgdra, UnsampledWeightsOnlyChangeThroughNormalization) {
    TrainConfig c = small_config(Algorithm::fgdra);
    c.sampled = 2;
    c.rounds = 6;
    Trajectory t;
    run_fgdra(c, workers(), t.observer());
    for (int k = 0; k < c.rounds; ++k) {
        Rng server = substream(c.seed, Stream::server, {static_cast<std::uint64_t>(k)});
        const auto chosen = sample_workers(t.lambdas[k], c.sampled, server);
        std::vector<int> rest;
        for (int n = 0; n < 4; ++n)
            if (std::find(chosen.begin(), chosen.end(), n) == chosen.end()) rest.push_back(n);
        ASSERT_EQ(rest.size(), 2u);
        // unsampled entries keep their ratio
        EXPECT_NEAR(t.lambdas[k + 1][rest[0]] / t.lambdas[k + 1][rest[1]], t.lambdas[k][rest[0]] / t.lambdas[k][rest[1]], 1e-12);
    }
}

TEST(FedAvg, OneFullBatchRoundIsACentralizedStep) {
    TrainConfig c = small_config(Algorithm::fedavg);
    c.sampled = 4;
    c.local_steps = 1;
    c.batch_size = 1000;
    c.rounds = 1;
    const RunResult r = run_fedavg(c, workers());
    const ModelParams theta0 = detail::initial_params(c.seed);
    Vector g = Vector::Zero(ModelParams::total_size);
    for (const auto& w : workers()) g += grad(theta0, w.train.features, w.train.labels).flat() / 4.0;
    EXPECT_LE((r.theta.flat() - (theta0.flat() - c.primal_step * g)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FedAvg, LoggedWeightsStayUniform) {
    const RunResult r = run_fedavg(small_config(Algorithm::fedavg), workers());
    for (const auto& log : r.logs) EXPECT_EQ(log.lambda, uniform_weights(4));
}

TEST(Accounting, CommunicationRoundsPerAlgorithm) {
    for (Algorithm a : {Algorithm::fgdra, Algorithm::drfa, Algorithm::fedavg}) {
        const TrainConfig c = small_config(a);
        const RunResult r = run(c, workers());
        const int per_round = a == Algorithm::drfa ? 2 : 1;
        EXPECT_EQ(r.communication_rounds, per_round * c.rounds);
        ASSERT_EQ(r.logs.size(), static_cast<std::size_t>(c.rounds));
        for (const auto& log : r.logs) EXPECT_EQ(log.communication_rounds, per_round * log.round);
    }
}

TEST(Runs, DeterministicUnderFixedSeed) {
    for (Algorithm a : {Algorithm::fgdra, Algorithm::drfa, Algorithm::fedavg}) {
        const RunResult x = run(small_config(a), workers()), y = run(small_config(a), workers());
        EXPECT_TRUE(x.theta == y.theta);
        EXPECT_EQ(x.lambda, y.lambda);
        for (std::size_t k = 0; k < x.logs.size(); ++k) EXPECT_EQ(x.logs[k].accuracy, y.logs[k].accuracy);
    }
    TrainConfig other = small_config(Algorithm::fgdra);
    other.seed = 43;
    EXPECT_FALSE(run(other, workers()).theta == run(small_config(Algorithm::fgdra), workers()).theta);
}

TEST(Runs, EvaluationAndCheckpointCadence) {
    TrainConfig c = small_config(Algorithm::fgdra);
    c.rounds = 10;
    c.eval_every = 4;
    c.checkpoint_every = 3;
    const RunResult r = run_fgdra(c, workers());
    std::vector<int> eval_rounds, ckpt_rounds;
    for (const auto& l : r.logs) eval_rounds.push_back(l.round);
    for (const auto& k : r.checkpoints) ckpt_rounds.push_back(k.round);
    EXPECT_EQ(eval_rounds, (std::vector<int>{4, 8, 10}));
    EXPECT_EQ(ckpt_rounds, (std::vector<int>{0, 3, 6, 9, 10}));
    EXPECT_TRUE(r.checkpoints.back().theta == r.theta);
}

TEST(Drfa, DualWeightsStayOnSimplexAndDifferFromFgdra) {
    Trajectory t;
    const RunResult d = run_drfa(small_config(Algorithm::drfa), workers(), t.observer());
    for (const auto& l : t.lambdas) {
        EXPECT_LE(std::abs(std::accumulate(l.begin(), l.end(), 0.0) - 1.0), 1e-12);
        for (double v : l) EXPECT_GE(v, 0.0);
    }
    EXPECT_NE(d.lambda, run_fgdra(small_config(Algorithm::fgdra), workers()).lambda);
}
