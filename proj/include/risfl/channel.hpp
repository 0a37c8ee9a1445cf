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
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "risfl/rng.hpp"

namespace risfl {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

/// Position of an object relative to the RIS (spherical coordinates).
struct Placement {
    double distance = 1.0;  // meters
    double azimuth = 0.0;   // radians
    double elevation = 0.0; // radians, in (-pi/2, pi/2)
};

struct ScenarioGeometry {
    int ris_rows = 10;
    int ris_cols = 10;
    double element_spacing = 0.0107 / 2; // meters
    double wavelength = 0.0107;          // meters (28 GHz)
    Placement tx{50.0, 0.0, 0.0};
    Placement rx{10.0, 0.0, 0.0};
    std::vector<Placement> scatterers; // travel distance, azimuth, elevation

    int elements() const { return ris_rows * ris_cols; }

    void validate() const {
        auto check_placement = [](const Placement& p, const char* what) {
            if (!(p.distance > 0.0))
                throw std::invalid_argument(std::string(what) + ": distance must be positive");
            if (!(std::abs(p.elevation) < std::numbers::pi / 2))
                throw std::invalid_argument(std::string(what) + ": elevation must lie in (-pi/2, pi/2)");
        };
        if (ris_rows <= 0 || ris_cols <= 0)
            throw std::invalid_argument("geometry: RIS grid must be nonempty");
        if (!(element_spacing > 0.0) || !(wavelength > 0.0))
            throw std::invalid_argument("geometry: spacing and wavelength must be positive");
        check_placement(tx, "tx");
        check_placement(rx, "rx");
        if (scatterers.empty())
            throw std::invalid_argument("geometry: at least one scatterer required");
        for (const auto& s : scatterers) check_placement(s, "scatterer");
    }
};

/// One CSI draw together with the random quantities that produced it.
struct ChannelSample {
    CVector h; // TX-RIS, LoS + NLoS
    CVector g; // RIS-RX
    double eta_g = 0.0;
    double eta_h = 0.0;
    CVector gammas;
};

inline constexpr double kPatternExponent = 0.285;

/// Element radiation pattern 2(2q0+1) cos^{2 q0}(b); zero outside the front hemisphere.
inline double radiation_gain(double elevation) {
    const double c = std::cos(elevation);
    if (std::abs(elevation) >= std::numbers::pi / 2 || c <= 0.0) return 0.0;
    return 2.0 * (2.0 * kPatternExponent + 1.0) * std::pow(c, 2.0 * kPatternExponent);
}

/// Free-space loss (lambda / (4 pi d))^2.
inline double path_loss(double distance, double wavelength) {
    if (!(distance > 0.0)) throw std::invalid_argument("path_loss: distance must be positive");
    const double r = wavelength / (4.0 * std::numbers::pi * distance);
    return r * r;
}

/// Uniform planar array steering vector, row-major over the element grid.
inline CVector array_response(double azimuth, double elevation, const ScenarioGeometry& geom) {
    const double k = 2.0 * std::numbers::pi / geom.wavelength * geom.element_spacing;
    const double row_step = std::sin(elevation);
    const double col_step = std::sin(azimuth) * std::cos(elevation);
    CVector out(static_cast<std::size_t>(geom.elements()));
    for (int r = 0; r < geom.ris_rows; ++r)
        for (int c = 0; c < geom.ris_cols; ++c)
            out[static_cast<std::size_t>(r * geom.ris_cols + c)] =
                std::polar(1.0, k * (r * row_step + c * col_step));
    return out;
}

inline double los_amplitude(const Placement& p, double wavelength) {
    return std::sqrt(radiation_gain(p.elevation) * path_loss(p.distance, wavelength));
}

/// sqrt(G L) e^{i eta} Omega(a, b) for a given phase draw.
inline CVector los_channel(const Placement& p, double eta, const ScenarioGeometry& geom) {
    CVector out = array_response(p.azimuth, p.elevation, geom);
    const cplx scale = std::polar(los_amplitude(p, geom.wavelength), eta);
    for (auto& v : out) v *= scale;
    return out;
}

/// (1/S) sum_s gamma_s sqrt(G(b_s) L(d_s)) Omega(a_s, b_s) for given gains.
inline CVector nlos_channel(const ScenarioGeometry& geom, const CVector& gammas) {
    if (gammas.size() != geom.scatterers.size())
        throw std::invalid_argument("nlos_channel: one gain per scatterer required");
    CVector out(static_cast<std::size_t>(geom.elements()), cplx{0.0, 0.0});
    const double inv_s = 1.0 / static_cast<double>(geom.scatterers.size());
    for (std::size_t s = 0; s < gammas.size(); ++s) {
        const auto& sc = geom.scatterers[s];
        const cplx w = gammas[s] * (los_amplitude(sc, geom.wavelength) * inv_s);
        if (w == cplx{0.0, 0.0}) continue;
        const CVector steer = array_response(sc.azimuth, sc.elevation, geom);
        for (std::size_t q = 0; q < out.size(); ++q) out[q] += w * steer[q];
    }
    return out;
}

inline double draw_phase(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
}

/// Standard circularly-symmetric complex normal CN(0, 1).
inline cplx draw_cn01(Rng& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

struct PhasedChannel {
    CVector channel;
    double eta = 0.0;
};

inline PhasedChannel gen_ris_rx_channel(const ScenarioGeometry& geom, Rng& rng) {
    const double eta = draw_phase(rng);
    return {los_channel(geom.rx, eta, geom), eta};
}

inline PhasedChannel gen_tx_ris_los(const ScenarioGeometry& geom, Rng& rng) {
    const double eta = draw_phase(rng);
    return {los_channel(geom.tx, eta, geom), eta};
}

struct ScatteredChannel {
    CVector channel;
    CVector gammas;
};

inline ScatteredChannel gen_tx_ris_nlos(const ScenarioGeometry& geom, Rng& rng) {
    CVector gammas(geom.scatterers.size());
    for (auto& gm : gammas) gm = draw_cn01(rng);
    return {nlos_channel(geom, gammas), std::move(gammas)};
}

/// Draw order is fixed (eta_g, eta_h, gammas) so a sample is a pure function
/// of the generator state.
inline ChannelSample gen_channel_pair(const ScenarioGeometry& geom, Rng& rng) {
    ChannelSample s;
    auto rx = gen_ris_rx_channel(geom, rng);
    auto los = gen_tx_ris_los(geom, rng);
    auto nlos = gen_tx_ris_nlos(geom, rng);
    s.g = std::move(rx.channel);
    s.eta_g = rx.eta;
    s.eta_h = los.eta;
    s.h = std::move(los.channel);
    for (std::size_t q = 0; q < s.h.size(); ++q) s.h[q] += nlos.channel[q];
    s.gammas = std::move(nlos.gammas);
    return s;
}

/// Scatterers placed once per worker inside a cone around the TX direction.
struct ScattererCone {
    int count = 4;
    double half_width = 15.0 * std::numbers::pi / 180.0;
    double min_excess = 0.05; // d_s = d_T (1 + U[min_excess, max_excess])
    double max_excess = 0.30;
};

inline std::vector<Placement> draw_scatterers(const Placement& tx, const ScattererCone& cone, Rng& rng) {
    std::vector<Placement> out;
    out.reserve(static_cast<std::size_t>(cone.count));
    const double max_elev = std::numbers::pi / 2 - 1e-3;
    for (int s = 0; s < cone.count; ++s) {
        Placement p;
        p.distance = tx.distance * (1.0 + uniform(rng, cone.min_excess, cone.max_excess));
        p.azimuth = tx.azimuth + uniform(rng, -cone.half_width, cone.half_width);
        p.elevation = std::clamp(tx.elevation + uniform(rng, -cone.half_width, cone.half_width), -max_elev, max_elev);
        out.push_back(p);
    }
    return out;
}

} // namespace risfl
