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

#include <cstddef>
#include <numbers>
#include <vector>

#include "risfl/risfl.hpp"

namespace risfl::testing {

inline constexpr double kDeg = std::numbers::pi / 180.0;

/// A compact heterogeneous scenario: worker n gets its own spacing,
/// TX/RX azimuths and scatterer draw.
inline WorkerProfile small_profile(int n) {
    WorkerProfile p;
    auto& g = p.geometry;
    const double spacings[] = {0.125, 0.25, 0.5, 1.0};
    g.element_spacing = spacings[n % 4] * g.wavelength;
    g.tx = {50.0, (-30.0 + 20.0 * n) * kDeg, 10.0 * kDeg};
    g.rx = {10.0, (25.0 - 15.0 * n) * kDeg, -5.0 * kDeg};
    Rng rng = substream(7, Stream::profile, {static_cast<std::uint64_t>(n)});
    g.scatterers = draw_scatterers(g.tx, ScattererCone{}, rng);
    return p;
}

inline std::vector<WorkerData> small_workers(int n_workers, std::size_t count, std::uint64_t seed = 11) {
    std::vector<WorkerData> out;
    for (int n = 0; n < n_workers; ++n) out.push_back(make_worker_data(small_profile(n), count, 0.8, seed, n));
    return out;
}

inline double max_abs_diff(const ModelParams& a, const ModelParams& b) {
    return (a.flat() - b.flat()).cwiseAbs().maxCoeff();
}

} // namespace risfl::testing
