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
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace risfl;
using risfl::testing::kDeg;

namespace {

constexpr double kPi = std::numbers::pi;

// Asymptotic Kolmogorov distribution tail with the Stephens small-sample correction.
double ks_uniform_pvalue(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return std::clamp(p, 0.0, 1.0);
}

double wrap_phase(double a) { return a < 0.0 ? a + 2.0 * kPi : a; }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= n, mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

ScenarioGeometry geometry_with_scatterers() {
    ScenarioGeometry g;
    g.tx = {50.0, 12.0 * kDeg, 8.0 * kDeg};
    g.rx = {10.0, -20.0 * kDeg, -5.0 * kDeg};
    Rng rng = substream(3, Stream::profile);
    g.scatterers = draw_scatterers(g.tx, ScattererCone{}, rng);
    return g;
}

} // namespace

TEST(RadiationGain, BoresightGain) { EXPECT_NEAR(radiation_gain(0.0), 3.14, 1e-12); }

TEST(RadiationGain, GrazingIsZero) {
    EXPECT_EQ(radiation_gain(kPi / 2), 0.0);
    EXPECT_EQ(radiation_gain(-kPi / 2), 0.0);
    EXPECT_EQ(radiation_gain(2.0), 0.0);
}

TEST(RadiationGain, SixtyDegrees) {
    EXPECT_NEAR(radiation_gain(kPi / 3), 3.14 * std::pow(0.5, 0.57), 1e-12);
    EXPECT_DOUBLE_EQ(radiation_gain(kPi / 3), radiation_gain(-kPi / 3));
}

TEST(PathLoss, UnitLossDistance) {
    const double lw = 0.0107;
    EXPECT_NEAR(path_loss(lw / (4 * kPi), lw), 1.0, 1e-12);
}

TEST(PathLoss, InverseSquare) {
    for (double d : {0.3, 7.0, 120.0}) EXPECT_NEAR(path_loss(2 * d, 0.0107) / path_loss(d, 0.0107), 0.25, 1e-12);
}

TEST(PathLoss, FiftyMetersAt28GHz) {
    const double expected = std::pow(0.0107 / (4 * kPi * 50.0), 2);
    EXPECT_NEAR(path_loss(50.0, 0.0107), expected, 1e-24);
    EXPECT_NEAR(path_loss(50.0, 0.0107), 2.90e-10, 0.01e-10);
}

TEST(PathLoss, RejectsNonPositiveDistance) {
    EXPECT_THROW(path_loss(0.0, 0.0107), std::invalid_argument);
    EXPECT_THROW(path_loss(-1.0, 0.0107), std::invalid_argument);
}

TEST(ArrayResponse, OriginElementIsOne) {
    ScenarioGeometry g;
    const auto v = array_response(0.7, -0.3, g);
    EXPECT_EQ(v[0], cplx(1.0, 0.0));
}

TEST(ArrayResponse, BroadsideIsAllOnes) {
    ScenarioGeometry g;
    for (const auto& x : array_response(0.0, 0.0, g)) EXPECT_EQ(x, cplx(1.0, 0.0));
}

TEST(ArrayResponse, UnitModulusAndRowMajorPhase) {
    ScenarioGeometry g;
    g.ris_rows = 7;
    g.ris_cols = 5;
    g.element_spacing = 0.3 * g.wavelength;
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = uniform(rng, -kPi, kPi), b = uniform(rng, -1.5, 1.5);
        const auto v = array_response(a, b, g);
        ASSERT_EQ(v.size(), 35u);
        for (int r = 0; r < 7; ++r)
            for (int c = 0; c < 5; ++c) {
                const cplx x = v[static_cast<std::size_t>(r * 5 + c)];
                const double phase = 2 * kPi / g.wavelength * g.element_spacing * (r * std::sin(b) + c * std::sin(a) * std::cos(b));
                EXPECT_NEAR(std::abs(x), 1.0, 1e-12);
                EXPECT_NEAR(std::abs(x - std::polar(1.0, phase)), 0.0, 1e-12);
            }
    }
}

TEST(RisRxChannel, FlatMagnitude) {
    const auto geom = geometry_with_scatterers();
    Rng rng(1);
    const auto g = gen_ris_rx_channel(geom, rng).channel;
    const auto [lo, hi] = std::minmax_element(g.begin(), g.end(), [](cplx x, cplx y) { return std::abs(x) < std::abs(y); });
    EXPECT_NEAR(std::abs(*hi) - std::abs(*lo), 0.0, 1e-12 * std::abs(*hi));
    EXPECT_NEAR(std::abs(g[0]), std::sqrt(radiation_gain(geom.rx.elevation) * path_loss(10.0, geom.wavelength)), 1e-15);
}

TEST(RisRxChannel, GrazingReceiverGivesZero) {
    auto geom = geometry_with_scatterers();
    geom.rx.elevation = kPi / 2;
    Rng rng(1);
    for (const auto& x : gen_ris_rx_channel(geom, rng).channel) EXPECT_EQ(x, cplx(0.0, 0.0));
}

TEST(RisRxChannel, PhaseOfFirstElementIsUniform) {
    const auto geom = geometry_with_scatterers();
    std::vector<double> phases;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        Rng rng = substream(s, Stream::data);
        phases.push_back(wrap_phase(std::arg(gen_ris_rx_channel(geom, rng).channel[0])));
    }
    EXPECT_GT(ks_uniform_pvalue(phases, 0.0, 2 * kPi), 0.01);
}

TEST(TxRisLos, FlatMagnitudeAndDistanceScaling) {
    auto geom = geometry_with_scatterers();
    Rng a(4), b(4);
    const auto h1 = gen_tx_ris_los(geom, a).channel;
    geom.tx.distance *= 2;
    const auto h2 = gen_tx_ris_los(geom, b).channel;
    const double m = std::abs(h1[0]);
    for (std::size_t q = 0; q < h1.size(); ++q) {
        EXPECT_NEAR(std::abs(h1[q]), m, 1e-12 * m);
        EXPECT_NEAR(std::abs(h2[q]), m / 2, 1e-12 * m);
    }
}

TEST(TxRisLos, PowerScalesWithInverseSquareOfDistance) {
    auto geom = geometry_with_scatterers();
    const double base = std::norm(los_channel(geom.tx, 0.3, geom)[17]);
    for (double kappa : {0.5, 3.0, 11.0}) {
        Placement p = geom.tx;
        p.distance *= kappa;
        EXPECT_NEAR(std::norm(los_channel(p, 0.3, geom)[17]) * kappa * kappa / base, 1.0, 1e-9);
    }
}

TEST(TxRisLos, PhasesIndependentOfReceiverPhase) {
    const auto geom = geometry_with_scatterers();
    std::vector<double> eg, eh;
    Rng rng = substream(9, Stream::data);
    for (int i = 0; i < 10000; ++i) {
        const auto s = gen_channel_pair(geom, rng);
        eg.push_back(s.eta_g);
        eh.push_back(s.eta_h);
    }
    EXPECT_LT(std::abs(correlation(eg, eh)), 0.05);
}

TEST(TxRisNlos, ZeroGainGivesZeroVector) {
    auto geom = geometry_with_scatterers();
    geom.scatterers.resize(1);
    for (const auto& x : nlos_channel(geom, {cplx(0.0, 0.0)})) EXPECT_EQ(x, cplx(0.0, 0.0));
    EXPECT_THROW(nlos_channel(geom, {}), std::invalid_argument);
}

TEST(TxRisNlos, ZeroMeanAndClosedFormPower) {
    const auto geom = geometry_with_scatterers();
    const std::size_t Q = static_cast<std::size_t>(geom.elements());
    const int draws = 10000;
    std::vector<cplx> sum(Q);
    std::vector<double> power(Q);
    Rng rng = substream(21, Stream::data);
    for (int i = 0; i < draws; ++i) {
        const auto h = gen_tx_ris_nlos(geom, rng).channel;
        for (std::size_t q = 0; q < Q; ++q) {
            sum[q] += h[q];
            power[q] += std::norm(h[q]);
        }
    }
    const double S = static_cast<double>(geom.scatterers.size());
    double expected = 0.0;
    for (const auto& s : geom.scatterers) expected += radiation_gain(s.elevation) * path_loss(s.distance, geom.wavelength);
    expected /= S * S;
    for (std::size_t q = 0; q < Q; ++q) {
        const cplx mean = sum[q] / static_cast<double>(draws);
        const double var = power[q] / draws - std::norm(mean);
        const double sd = std::sqrt(var / 2); // per real component
        EXPECT_LT(std::abs(mean.real()), 3 * sd / 100) << "q=" << q;
        EXPECT_LT(std::abs(mean.imag()), 3 * sd / 100) << "q=" << q;
        EXPECT_NEAR(power[q] / draws / expected, 1.0, 0.05) << "q=" << q;
    }
}

TEST(ChannelPair, SameSeedIsBitIdentical) {
    const auto geom = geometry_with_scatterers();
    Rng a(77), b(77);
    const auto x = gen_channel_pair(geom, a), y = gen_channel_pair(geom, b);
    EXPECT_EQ(x.h, y.h);
    EXPECT_EQ(x.g, y.g);
    EXPECT_EQ(x.gammas, y.gammas);
    EXPECT_EQ(x.eta_g, y.eta_g);
}

TEST(ChannelPair, FreshSeedChangesDrawButNotMagnitudeProfile) {
    const auto geom = geometry_with_scatterers();
    Rng a(1), b(2);
    const auto x = gen_channel_pair(geom, a), y = gen_channel_pair(geom, b);
    EXPECT_NE(x.h, y.h);
    for (std::size_t q = 0; q < x.g.size(); ++q) EXPECT_NEAR(std::abs(x.g[q]), std::abs(y.g[q]), 1e-15);
}

TEST(ChannelPair, ComposesLosAndNlos) {
    const auto geom = geometry_with_scatterers();
    Rng a(8), b(8);
    const auto s = gen_channel_pair(geom, a);
    const auto g = gen_ris_rx_channel(geom, b);
    const auto los = gen_tx_ris_los(geom, b);
    const auto nlos = gen_tx_ris_nlos(geom, b);
    EXPECT_EQ(s.g, g.channel);
    for (std::size_t q = 0; q < s.h.size(); ++q) EXPECT_EQ(s.h[q], los.channel[q] + nlos.channel[q]);
}

TEST(ChannelPair, ScatterersOnLineOfSightAddCoherently) {
    auto geom = geometry_with_scatterers();
    const double distances[] = {55.0, 60.0, 62.5};
    geom.scatterers.clear();
    for (double d : distances) geom.scatterers.push_back({d, geom.tx.azimuth, geom.tx.elevation});
    const double eta = 1.1;
    const CVector gammas(3, cplx(1.0, 0.0));
    const auto los = los_channel(geom.tx, eta, geom);
    const auto nlos = nlos_channel(geom, gammas);
    double ratio = 0.0;
    for (double d : distances) ratio += std::sqrt(path_loss(d, geom.wavelength) / path_loss(geom.tx.distance, geom.wavelength));
    ratio /= 3.0;
    const cplx factor = 1.0 + ratio * std::polar(1.0, -eta);
    for (std::size_t q = 0; q < los.size(); ++q) EXPECT_NEAR(std::abs(los[q] + nlos[q] - los[q] * factor), 0.0, 1e-18);
}

TEST(Scatterers, DrawnInsideTheCone) {
    const Placement tx{50.0, 0.2, 0.1};
    ScattererCone cone;
    cone.count = 200;
    Rng rng(3);
    for (const auto& s : draw_scatterers(tx, cone, rng)) {
        EXPECT_GE(s.distance, 50.0 * 1.05);
        EXPECT_LE(s.distance, 50.0 * 1.30);
        EXPECT_LE(std::abs(s.azimuth - 0.2), cone.half_width);
        EXPECT_LE(std::abs(s.elevation - 0.1), cone.half_width);
    }
}

TEST(Geometry, ValidateRejectsBadInput) {
    auto g = geometry_with_scatterers();
    EXPECT_NO_THROW(g.validate());
    auto bad = g;
    bad.tx.distance = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = g;
    bad.rx.elevation = kPi / 2;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = g;
    bad.scatterers.clear();
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = g;
    bad.element_spacing = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}
