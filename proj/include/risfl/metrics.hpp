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
#include <vector>

#include "risfl/labeling.hpp"
#include "risfl/mlp.hpp"

namespace risfl {

/// Global-model test metrics across workers, accuracies in percent.
struct Evaluation {
    double average = 0.0;
    double worst = 0.0;
    double sd = 0.0;
    std::vector<double> per_worker;
};

inline double accuracy_percent(const ModelParams& theta, const Dataset& ds) {
    const std::vector<int> pred = predict(theta, ds.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i];
    return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// Unweighted mean, minimum and population standard deviation of per-worker accuracies.
inline Evaluation summarize_accuracies(std::vector<double> per_worker) {
    Evaluation e;
    const double n = static_cast<double>(per_worker.size());
    double sum = 0.0;
    for (double a : per_worker) sum += a;
    e.average = sum / n;
    e.worst = *std::min_element(per_worker.begin(), per_worker.end());
    double ss = 0.0;
    for (double a : per_worker) ss += (a - e.average) * (a - e.average);
    e.sd = std::sqrt(ss / n);
    // rounding can push the mean a hair below the minimum when all entries agree
    if (e.average < e.worst) e.average = e.worst;
    e.per_worker = std::move(per_worker);
    return e;
}

inline Evaluation evaluate(const ModelParams& theta, const std::vector<WorkerData>& workers) {
    std::vector<double> acc;
    acc.reserve(workers.size());
    for (const auto& w : workers) acc.push_back(accuracy_percent(theta, w.test));
    return summarize_accuracies(std::move(acc));
}

} // namespace risfl
