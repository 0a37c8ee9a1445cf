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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "risfl/channel.hpp"
#include "risfl/fed.hpp"
#include "risfl/labeling.hpp"

namespace risfl::harness {

enum class SweepAxis { none, tau, batch, sampled };

inline std::string to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::tau: return "tau";
    case SweepAxis::batch: return "B";
    case SweepAxis::sampled: return "m";
    }
    return "none";
}

/// How the simulated workers and their datasets are built.
struct ScenarioConfig {
    int samples_per_worker = 2500;
    double train_ratio = 0.8;
    std::uint64_t data_seed = 2024;
    std::uint64_t profile_seed = 7;
    double carrier_frequency = 28e9; // Hz
    std::vector<double> element_spacings{0.125, 0.25, 0.5, 1.0}; // in wavelengths, cycled over workers
    int scatterers = 4;
    double tx_distance = 50.0;
    double rx_distance = 10.0;
    double bandwidth = 100e6;
    double tx_power = 1.0;
    double noise_psd = 3.98e-21;
    std::vector<int> reversed_codebook_workers; // workers whose codeword order is mirrored
};

struct ExperimentConfig {
    TrainConfig train;
    std::vector<Algorithm> algorithms{Algorithm::fgdra, Algorithm::drfa, Algorithm::fedavg};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    ScenarioConfig scenario;
    SweepAxis sweep_axis = SweepAxis::none;
    std::vector<double> sweep_values;
    int diag_probes = 100;
    int diag_checkpoints = 50; // checkpoints per diagnostic run, evenly spaced
    bool theorem_schedule = false;

    void validate() const {
        train.validate();
        if (algorithms.empty()) throw std::invalid_argument("algorithms: at least one algorithm required");
        if (seeds.empty()) throw std::invalid_argument("seeds: at least one seed required");
        const auto& s = scenario;
        if (s.samples_per_worker < 2) throw std::invalid_argument("samples_per_worker: need at least 2 samples");
        if (!(s.train_ratio > 0.0 && s.train_ratio < 1.0)) throw std::invalid_argument("train_ratio: must lie in (0, 1)");
        if (!(s.carrier_frequency > 0.0)) throw std::invalid_argument("carrier_frequency: must be positive");
        if (s.element_spacings.empty()) throw std::invalid_argument("element_spacings: at least one spacing required");
        for (double v : s.element_spacings)
            if (!(v > 0.0)) throw std::invalid_argument("element_spacings: values must be positive");
        if (s.scatterers < 1) throw std::invalid_argument("scatterers: need at least one scatterer");
        if (!(s.tx_distance > 0.0)) throw std::invalid_argument("tx_distance: must be positive");
        if (!(s.rx_distance > 0.0)) throw std::invalid_argument("rx_distance: must be positive");
        if (!(s.bandwidth > 0.0) || !(s.tx_power > 0.0) || !(s.noise_psd > 0.0))
            throw std::invalid_argument("bandwidth/tx_power/noise_psd: must be positive");
        for (int w : s.reversed_codebook_workers)
            if (w < 0 || w >= train.workers)
                throw std::invalid_argument("reversed_codebook_workers: worker index out of range");
        for (double v : sweep_values)
            if (!(v > 0.0) || v != std::floor(v)) throw std::invalid_argument("sweep_values: values must be positive integers");
        if (sweep_axis == SweepAxis::sampled)
            for (double v : sweep_values)
                if (v > train.workers) throw std::invalid_argument("sweep_values: m cannot exceed workers");
        if (diag_probes < 1) throw std::invalid_argument("diag_probes: must be >= 1");
        if (diag_checkpoints < 1) throw std::invalid_argument("diag_checkpoints: must be >= 1");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument("");
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
    }
}

inline long long to_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return i;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
    }
}

inline int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_integer(key, v)); }

inline std::uint64_t to_seed(const std::string& key, const std::string& v) {
    const long long i = to_integer(key, v);
    if (i < 0) throw std::invalid_argument(key + ": seeds must be nonnegative");
    return static_cast<std::uint64_t>(i);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument(key + ": expected true/false, got '" + v + "'");
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += f(xs[i]);
    }
    return out;
}

} // namespace detail

/// Applies one `key = value` assignment. Unknown keys and malformed values
/// throw std::invalid_argument naming the key.
inline void set_field(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
    using namespace detail;
    const std::string key = trim(raw_key);
    const std::string v = trim(raw_value);
    auto& t = cfg.train;
    auto& s = cfg.scenario;
    if (key == "algorithms") {
        cfg.algorithms.clear();
        for (const auto& a : split_list(v)) {
            try {
                cfg.algorithms.push_back(parse_algorithm(a));
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument("algorithms: unknown algorithm '" + a + "'");
            }
        }
    } else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& x : split_list(v)) cfg.seeds.push_back(to_seed(key, x));
    } else if (key == "workers") t.workers = to_int(key, v);
    else if (key == "sampled") t.sampled = to_int(key, v);
    else if (key == "rounds") t.rounds = to_int(key, v);
    else if (key == "local_steps") t.local_steps = to_int(key, v);
    else if (key == "primal_step") t.primal_step = to_double(key, v);
    else if (key == "dual_step") t.dual_step = to_double(key, v);
    else if (key == "batch_size") t.batch_size = to_int(key, v);
    else if (key == "eval_every") t.eval_every = to_int(key, v);
    else if (key == "samples_per_worker") s.samples_per_worker = to_int(key, v);
    else if (key == "train_ratio") s.train_ratio = to_double(key, v);
    else if (key == "data_seed") s.data_seed = to_seed(key, v);
    else if (key == "profile_seed") s.profile_seed = to_seed(key, v);
    else if (key == "carrier_frequency") s.carrier_frequency = to_double(key, v);
    else if (key == "element_spacings") {
        s.element_spacings.clear();
        for (const auto& x : split_list(v)) s.element_spacings.push_back(to_double(key, x));
    } else if (key == "scatterers") s.scatterers = to_int(key, v);
    else if (key == "tx_distance") s.tx_distance = to_double(key, v);
    else if (key == "rx_distance") s.rx_distance = to_double(key, v);
    else if (key == "bandwidth") s.bandwidth = to_double(key, v);
    else if (key == "tx_power") s.tx_power = to_double(key, v);
    else if (key == "noise_psd") s.noise_psd = to_double(key, v);
    else if (key == "reversed_codebook_workers") {
        s.reversed_codebook_workers.clear();
        for (const auto& x : split_list(v)) s.reversed_codebook_workers.push_back(to_int(key, x));
    } else if (key == "sweep_axis") {
        if (v == "none") cfg.sweep_axis = SweepAxis::none;
        else if (v == "tau") cfg.sweep_axis = SweepAxis::tau;
        else if (v == "B") cfg.sweep_axis = SweepAxis::batch;
        else if (v == "m") cfg.sweep_axis = SweepAxis::sampled;
        else throw std::invalid_argument("sweep_axis: expected one of none, tau, B, m; got '" + v + "'");
    } else if (key == "sweep_values") {
        cfg.sweep_values.clear();
        for (const auto& x : split_list(v)) cfg.sweep_values.push_back(to_double(key, x));
    } else if (key == "diag_probes") cfg.diag_probes = to_int(key, v);
    else if (key == "diag_checkpoints") cfg.diag_checkpoints = to_int(key, v);
    else if (key == "theorem_schedule") cfg.theorem_schedule = to_bool(key, v);
    else throw std::invalid_argument("unknown configuration key '" + key + "'");
}

/// Flat `key = value` text; `#` starts a comment; omitted keys keep the
/// Table I defaults.
inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 'key = value'");
        set_field(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Canonical text: every key, fixed order, shortest exact number formatting.
inline std::string serialize(const ExperimentConfig& cfg) {
    using detail::fmt_double;
    using detail::join;
    const auto& t = cfg.train;
    const auto& s = cfg.scenario;
    std::ostringstream o;
    auto num = [](auto v) { return std::to_string(v); };
    o << "algorithms = " << join(cfg.algorithms, [](Algorithm a) { return std::string(risfl::to_string(a)); }) << '\n';
    o << "seeds = " << join(cfg.seeds, [&](std::uint64_t v) { return num(v); }) << '\n';
    o << "workers = " << t.workers << '\n';
    o << "sampled = " << t.sampled << '\n';
    o << "rounds = " << t.rounds << '\n';
    o << "local_steps = " << t.local_steps << '\n';
    o << "primal_step = " << fmt_double(t.primal_step) << '\n';
    o << "dual_step = " << fmt_double(t.dual_step) << '\n';
    o << "batch_size = " << t.batch_size << '\n';
    o << "eval_every = " << t.eval_every << '\n';
    o << "samples_per_worker = " << s.samples_per_worker << '\n';
    o << "train_ratio = " << fmt_double(s.train_ratio) << '\n';
    o << "data_seed = " << s.data_seed << '\n';
    o << "profile_seed = " << s.profile_seed << '\n';
    o << "carrier_frequency = " << fmt_double(s.carrier_frequency) << '\n';
    o << "element_spacings = " << join(s.element_spacings, fmt_double) << '\n';
    o << "scatterers = " << s.scatterers << '\n';
    o << "tx_distance = " << fmt_double(s.tx_distance) << '\n';
    o << "rx_distance = " << fmt_double(s.rx_distance) << '\n';
    o << "bandwidth = " << fmt_double(s.bandwidth) << '\n';
    o << "tx_power = " << fmt_double(s.tx_power) << '\n';
    o << "noise_psd = " << fmt_double(s.noise_psd) << '\n';
    o << "reversed_codebook_workers = " << join(s.reversed_codebook_workers, [&](int v) { return num(v); }) << '\n';
    o << "sweep_axis = " << to_string(cfg.sweep_axis) << '\n';
    o << "sweep_values = " << join(cfg.sweep_values, fmt_double) << '\n';
    o << "diag_probes = " << cfg.diag_probes << '\n';
    o << "diag_checkpoints = " << cfg.diag_checkpoints << '\n';
    o << "theorem_schedule = " << (cfg.theorem_schedule ? "true" : "false") << '\n';
    return o.str();
}

/// Worker n gets spacing element_spacings[n mod size], TX/RX azimuths spread
/// across [-30, 30] and [25, -20] degrees, and its own scatterer cone draw.
inline std::vector<WorkerProfile> build_profiles(const ExperimentConfig& cfg) {
    const auto& s = cfg.scenario;
    constexpr double deg = std::numbers::pi / 180.0;
    const double wavelength = 299792458.0 / s.carrier_frequency;
    const int n_workers = cfg.train.workers;
    std::vector<WorkerProfile> out;
    for (int n = 0; n < n_workers; ++n) {
        const double frac = n_workers > 1 ? static_cast<double>(n) / (n_workers - 1) : 0.5;
        WorkerProfile p;
        auto& g = p.geometry;
        g.wavelength = wavelength;
        g.element_spacing = s.element_spacings[static_cast<std::size_t>(n) % s.element_spacings.size()] * wavelength;
        g.tx = {s.tx_distance, (-30.0 + 60.0 * frac) * deg, 10.0 * deg};
        g.rx = {s.rx_distance, (25.0 - 45.0 * frac) * deg, -5.0 * deg};
        ScattererCone cone;
        cone.count = s.scatterers;
        Rng rng = substream(s.profile_seed, Stream::profile, {static_cast<std::uint64_t>(n)});
        g.scatterers = draw_scatterers(g.tx, cone, rng);
        p.rate = {s.bandwidth, s.tx_power, s.noise_psd};
        if (std::find(s.reversed_codebook_workers.begin(), s.reversed_codebook_workers.end(), n) !=
            s.reversed_codebook_workers.end())
            std::reverse(p.codeword_offsets.begin(), p.codeword_offsets.end());
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<WorkerData> build_workers(const ExperimentConfig& cfg) {
    const auto profiles = build_profiles(cfg);
    std::vector<WorkerData> workers;
    workers.reserve(profiles.size());
    for (std::size_t n = 0; n < profiles.size(); ++n)
        workers.push_back(make_worker_data(profiles[n], static_cast<std::size_t>(cfg.scenario.samples_per_worker),
                                           cfg.scenario.train_ratio, cfg.scenario.data_seed, static_cast<int>(n)));
    return workers;
}

} // namespace risfl::harness
