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

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace risfl {

using Rng = std::mt19937_64;

/// Tags separating the independent random streams a simulation draws from.
enum class Stream : std::uint32_t {
    profile = 1,
    data = 2,
    split = 3,
    init = 4,
    server = 5,
    local = 6,
    dual = 7,
    probe = 8,
    snapshot = 9,
};

/// Derives a generator from a master seed and a list of coordinates
/// (stream tag, worker id, round, ...). Two calls with the same arguments
/// yield identical streams; any differing coordinate yields an unrelated one.
inline Rng substream(std::uint64_t master, Stream tag, std::initializer_list<std::uint64_t> coords = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(4 + 2 * coords.size());
    words.push_back(static_cast<std::uint32_t>(master));
    words.push_back(static_cast<std::uint32_t>(master >> 32));
    words.push_back(static_cast<std::uint32_t>(tag));
    words.push_back(static_cast<std::uint32_t>(coords.size()));
    for (auto c : coords) {
        words.push_back(static_cast<std::uint32_t>(c));
        words.push_back(static_cast<std::uint32_t>(c >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace risfl
