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
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "risfl/channel.hpp"
#include "risfl/rng.hpp"
#include "risfl/types.hpp"

namespace risfl {

inline constexpr int kClasses = 4;
inline constexpr int kElements = 100;
inline constexpr int kFeatures = 4 * kElements;

struct RateParams {
    double bandwidth = 100e6; // Hz
    double tx_power = 1.0;    // W
    double noise_psd = 3.98e-21; // W/Hz (-174 dBm/Hz)

    void validate() const {
        if (!(bandwidth > 0.0) || !(tx_power > 0.0) || !(noise_psd > 0.0))
            throw std::invalid_argument("rate parameters must be strictly positive");
    }
};

/// Everything that distinguishes one worker's scenario.
struct WorkerProfile {
    ScenarioGeometry geometry;
    RateParams rate;
    std::array<double, kClasses> codeword_offsets{-20.0, -7.0, 7.0, 20.0}; // degrees around rx azimuth
};

/// Achievable rate w log2(1 + |g^H diag(phi) h|^2 p / (w N0)).
inline double rate(const CVector& phi, const CVector& h, const CVector& g, const RateParams& params) {
    if (phi.size() != h.size() || h.size() != g.size())
        throw std::invalid_argument("rate: channel and configuration lengths differ");
    cplx acc{0.0, 0.0};
    for (std::size_t q = 0; q < phi.size(); ++q) acc += std::conj(g[q]) * phi[q] * h[q];
    const double snr = std::norm(acc) * params.tx_power / (params.bandwidth * params.noise_psd);
    return params.bandwidth * std::log2(1.0 + snr);
}

struct Codebook {
    std::array<CVector, kClasses> codewords;
};

/// Codeword c cancels the TX steering phase and re-steers toward
/// rx azimuth + offset_c, so a pure LoS link at that azimuth adds coherently.
inline Codebook build_codebook(const WorkerProfile& profile) {
    const auto& geom = profile.geometry;
    const CVector tx = array_response(geom.tx.azimuth, geom.tx.elevation, geom);
    Codebook book;
    for (int c = 0; c < kClasses; ++c) {
        const double az = geom.rx.azimuth + profile.codeword_offsets[static_cast<std::size_t>(c)] * std::numbers::pi / 180.0;
        const CVector beam = array_response(az, geom.rx.elevation, geom);
        CVector& w = book.codewords[static_cast<std::size_t>(c)];
        w.resize(tx.size());
        for (std::size_t q = 0; q < tx.size(); ++q) {
            const cplx v = std::conj(tx[q]) * beam[q];
            w[q] = v / std::abs(v);
        }
    }
    return book;
}

/// Index of the rate-maximizing codeword; ties go to the lowest index.
inline int label(const ChannelSample& sample, const Codebook& book, const RateParams& params, double* best_rate = nullptr) {
    int best = 0;
    double best_r = -1.0;
    for (int c = 0; c < kClasses; ++c) {
        const double r = rate(book.codewords[static_cast<std::size_t>(c)], sample.h, sample.g, params);
        if (r > best_r) {
            best_r = r;
            best = c;
        }
    }
    if (best_rate) *best_rate = best_r;
    return best;
}

/// Raw layout [Re h, Im h, Re g, Im g].
inline Vector encode_features(const ChannelSample& sample) {
    if (sample.h.size() != kElements || sample.g.size() != kElements)
        throw std::invalid_argument("encode_features: expected 100 RIS elements");
    Vector x(kFeatures);
    for (int q = 0; q < kElements; ++q) {
        x[q] = sample.h[q].real();
        x[kElements + q] = sample.h[q].imag();
        x[2 * kElements + q] = sample.g[q].real();
        x[3 * kElements + q] = sample.g[q].imag();
    }
    return x;
}

inline std::pair<CVector, CVector> decode_features(const Vector& x) {
    if (x.size() != kFeatures) throw std::invalid_argument("decode_features: expected 400 features");
    CVector h(kElements), g(kElements);
    for (int q = 0; q < kElements; ++q) {
        h[q] = {x[q], x[kElements + q]};
        g[q] = {x[2 * kElements + q], x[3 * kElements + q]};
    }
    return {std::move(h), std::move(g)};
}

/// Per-column affine standardization fitted on a training split.
struct Standardizer {
    Vector mean;
    Vector sd;

    static Standardizer fit(const RowMatrix& x) {
        Standardizer st;
        const double n = static_cast<double>(x.rows());
        st.mean = x.colwise().mean().transpose();
        st.sd = ((x.rowwise() - st.mean.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
        // constant columns pass through centred
        for (Eigen::Index j = 0; j < st.sd.size(); ++j)
            if (!(st.sd[j] > 1e-300)) st.sd[j] = 1.0;
        return st;
    }

    void apply(RowMatrix& x) const {
        x = ((x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array()).matrix();
    }

    Vector invert(const Vector& z) const { return (z.array() * sd.array() + mean.array()).matrix(); }
};

struct LabeledSample {
    Vector features;
    int label = 0;
    double rate_achieved = 0.0;
};

struct Dataset {
    int worker_id = 0;
    RowMatrix features; // one row per sample
    std::vector<int> labels;
    std::vector<double> rates;

    std::size_t size() const { return labels.size(); }

    LabeledSample sample(std::size_t i) const {
        return {features.row(static_cast<Eigen::Index>(i)).transpose(), labels[i], rates[i]};
    }

    std::array<std::size_t, kClasses> class_histogram() const {
        std::array<std::size_t, kClasses> hist{};
        for (int l : labels) ++hist[static_cast<std::size_t>(l)];
        return hist;
    }

    Dataset subset(const std::vector<std::size_t>& rows) const {
        Dataset out;
        out.worker_id = worker_id;
        out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
        out.labels.reserve(rows.size());
        out.rates.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
            out.labels.push_back(labels[rows[i]]);
            out.rates.push_back(rates[rows[i]]);
        }
        return out;
    }
};

/// J labeled samples with raw (unstandardized) features.
inline Dataset gen_dataset(const WorkerProfile& profile, std::size_t count, Rng& rng, int worker_id = 0) {
    if (count == 0) throw std::invalid_argument("gen_dataset: need at least one sample");
    if (profile.geometry.elements() != kElements)
        throw std::invalid_argument("gen_dataset: the classifier input fixes the RIS at 100 elements");
    profile.geometry.validate();
    const Codebook book = build_codebook(profile);
    Dataset ds;
    ds.worker_id = worker_id;
    ds.features.resize(static_cast<Eigen::Index>(count), kFeatures);
    ds.labels.resize(count);
    ds.rates.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        const ChannelSample s = gen_channel_pair(profile.geometry, rng);
        ds.labels[j] = label(s, book, profile.rate, &ds.rates[j]);
        ds.features.row(static_cast<Eigen::Index>(j)) = encode_features(s).transpose();
    }
    return ds;
}

/// Seeded shuffle then partition; the first `ratio` fraction becomes the train split.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double ratio, Rng& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split: ratio must lie in (0, 1)");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ds.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, ds.size() > 1 ? ds.size() - 1 : 1);
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return {ds.subset(train), ds.subset(test)};
}

/// A worker's standardized train/test splits plus the statistics used.
struct WorkerData {
    WorkerProfile profile;
    Dataset train;
    Dataset test;
    Standardizer standardizer;
};

inline WorkerData make_worker_data(const WorkerProfile& profile, std::size_t count, double train_ratio,
                                   std::uint64_t seed, int worker_id) {
    Rng data_rng = substream(seed, Stream::data, {static_cast<std::uint64_t>(worker_id)});
    Rng split_rng = substream(seed, Stream::split, {static_cast<std::uint64_t>(worker_id)});
    Dataset all = gen_dataset(profile, count, data_rng, worker_id);
    auto [train, test] = split(all, train_ratio, split_rng);
    WorkerData wd{profile, std::move(train), std::move(test), {}};
    wd.standardizer = Standardizer::fit(wd.train.features);
    wd.standardizer.apply(wd.train.features);
    wd.standardizer.apply(wd.test.features);
    return wd;
}

} // namespace risfl
