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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "risfl/rng.hpp"
#include "risfl/types.hpp"

namespace risfl {

/// Layer widths of the 400-64-32-4 classifier.
inline constexpr std::array<int, 4> kLayerWidths{400, 64, 32, 4};

/// Probability floor applied inside the log of the cross-entropy.
inline constexpr double kProbabilityFloor = 1e-15;

/// Start of layer `layer`'s block in the packed parameter vector.
constexpr Eigen::Index param_offset(int layer) {
    Eigen::Index off = 0;
    for (int l = 0; l < layer; ++l) off += kLayerWidths[l + 1] * (kLayerWidths[l] + 1);
    return off;
}

/// All weights and biases packed into one contiguous vector:
/// W1 (64x400, row-major), b1, W2 (32x64), b2, W3 (4x32), b3.
/// Packing makes averaging, axpy and norms single vector operations.
class ModelParams {
public:
    using MatrixMap = Eigen::Map<RowMatrix>;
    using ConstMatrixMap = Eigen::Map<const RowMatrix>;
    using VectorMap = Eigen::Map<Vector>;
    using ConstVectorMap = Eigen::Map<const Vector>;

    static constexpr Eigen::Index layer_count = 3;

    static constexpr Eigen::Index weight_offset(int layer) { return param_offset(layer); }
    static constexpr Eigen::Index bias_offset(int layer) {
        return param_offset(layer) + kLayerWidths[layer + 1] * kLayerWidths[layer];
    }
    static constexpr Eigen::Index total_size = param_offset(3);

    ModelParams() : flat_(Vector::Zero(total_size)) {}
    explicit ModelParams(Vector flat) : flat_(std::move(flat)) {
        if (flat_.size() != total_size) throw std::invalid_argument("ModelParams: wrong parameter count");
    }

    static ModelParams zeros() { return ModelParams(); }

    MatrixMap weight(int layer) {
        return {flat_.data() + weight_offset(layer), kLayerWidths[layer + 1], kLayerWidths[layer]};
    }
    ConstMatrixMap weight(int layer) const {
        return {flat_.data() + weight_offset(layer), kLayerWidths[layer + 1], kLayerWidths[layer]};
    }
    VectorMap bias(int layer) { return {flat_.data() + bias_offset(layer), kLayerWidths[layer + 1]}; }
    ConstVectorMap bias(int layer) const { return {flat_.data() + bias_offset(layer), kLayerWidths[layer + 1]}; }

    Vector& flat() { return flat_; }
    const Vector& flat() const { return flat_; }

    bool all_finite() const { return flat_.allFinite(); }

    friend bool operator==(const ModelParams& a, const ModelParams& b) { return a.flat_ == b.flat_; }

private:
    Vector flat_;
};

/// He-normal weights (sd = sqrt(2 / fan_in)), zero biases.
inline ModelParams init_params(Rng& rng) {
    ModelParams p;
    for (int l = 0; l < ModelParams::layer_count; ++l) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / kLayerWidths[l]));
        auto w = p.weight(l);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    }
    return p;
}

/// Row-wise softmax of a logits block, computed with a max shift.
inline RowMatrix softmax_rows(const RowMatrix& logits) {
    RowMatrix out = logits.colwise() - logits.rowwise().maxCoeff();
    out = out.array().exp().matrix();
    out.array().colwise() /= out.rowwise().sum().array();
    return out;
}

namespace detail {

struct ForwardCache {
    RowMatrix z1, a1, z2, a2, logits;
};

inline ForwardCache forward_pass(const ModelParams& params, const Eigen::Ref<const RowMatrix>& x) {
    ForwardCache c;
    c.z1 = (x * params.weight(0).transpose()).rowwise() + params.bias(0).transpose();
    c.a1 = c.z1.cwiseMax(0.0);
    c.z2 = (c.a1 * params.weight(1).transpose()).rowwise() + params.bias(1).transpose();
    c.a2 = c.z2.cwiseMax(0.0);
    c.logits = (c.a2 * params.weight(2).transpose()).rowwise() + params.bias(2).transpose();
    return c;
}

inline Eigen::VectorXd log_softmax_row(const RowMatrix& logits, Eigen::Index i) {
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    return (logits.row(i).array() - lse).transpose().matrix();
}

inline void check_batch(const Eigen::Ref<const RowMatrix>& x, std::span<const int> labels) {
    if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != labels.size())
        throw std::invalid_argument("batch: need one label per input row and at least one row");
    if (x.cols() != kLayerWidths[0]) throw std::invalid_argument("batch: expected 400 input features");
}

} // namespace detail

/// Class probabilities for every row of `x`.
inline RowMatrix forward(const ModelParams& params, const Eigen::Ref<const RowMatrix>& x) {
    return softmax_rows(detail::forward_pass(params, x).logits);
}

inline Vector forward_one(const ModelParams& params, const Vector& x) {
    RowMatrix row = x.transpose();
    return forward(params, RowMatrix(row)).row(0).transpose();
}

/// Predicted class (argmax, lowest index on ties) per row.
inline std::vector<int> predict(const ModelParams& params, const Eigen::Ref<const RowMatrix>& x) {
    const RowMatrix logits = detail::forward_pass(params, x).logits;
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index arg = 0;
        logits.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return out;
}

/// Mean natural-log cross-entropy, each term clamped at -ln(1e-15).
inline double loss(const ModelParams& params, const Eigen::Ref<const RowMatrix>& x, std::span<const int> labels) {
    detail::check_batch(x, labels);
    const RowMatrix logits = detail::forward_pass(params, x).logits;
    const double floor = std::log(kProbabilityFloor);
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double lp = detail::log_softmax_row(logits, i)[labels[static_cast<std::size_t>(i)]];
        total += -std::max(lp, floor);
    }
    return total / static_cast<double>(logits.rows());
}

struct LossAndGrad {
    double loss = 0.0;
    ModelParams grad;
};

/// Loss and its exact gradient by backpropagation. ReLU'(0) = 0; a sample
/// whose label probability sits below the floor contributes zero gradient
/// since its clamped loss is locally constant.
inline LossAndGrad loss_and_grad(const ModelParams& params, const Eigen::Ref<const RowMatrix>& x,
                                 std::span<const int> labels) {
    detail::check_batch(x, labels);
    const auto c = detail::forward_pass(params, x);
    const Eigen::Index n = x.rows();
    const double floor = std::log(kProbabilityFloor);
    const double inv_n = 1.0 / static_cast<double>(n);

    LossAndGrad out;
    RowMatrix dz3(n, kLayerWidths[3]);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector lp = detail::log_softmax_row(c.logits, i);
        const int y = labels[static_cast<std::size_t>(i)];
        if (lp[y] < floor) {
            total += -floor;
            dz3.row(i).setZero();
            continue;
        }
        total += -lp[y];
        dz3.row(i) = lp.array().exp().transpose();
        dz3(i, y) -= 1.0;
    }
    out.loss = total * inv_n;
    dz3 *= inv_n;

    ModelParams& g = out.grad;
    g.weight(2).noalias() = dz3.transpose() * c.a2;
    g.bias(2) = dz3.colwise().sum().transpose();
    RowMatrix dz2 = (dz3 * params.weight(2)).cwiseProduct((c.z2.array() > 0.0).cast<double>().matrix());
    g.weight(1).noalias() = dz2.transpose() * c.a1;
    g.bias(1) = dz2.colwise().sum().transpose();
    RowMatrix dz1 = (dz2 * params.weight(1)).cwiseProduct((c.z1.array() > 0.0).cast<double>().matrix());
    g.weight(0).noalias() = dz1.transpose() * x;
    g.bias(0) = dz1.colwise().sum().transpose();
    return out;
}

inline ModelParams grad(const ModelParams& params, const Eigen::Ref<const RowMatrix>& x, std::span<const int> labels) {
    return loss_and_grad(params, x, labels).grad;
}

// Checkpoint layout (all little-endian):
//   8 bytes  magic "RISFLMLP"
//   u32      format version (1)
//   u32      number of layer widths (4), followed by that many u32 widths
//   u64      parameter count
//   f64[]    packed parameters in ModelParams order
namespace checkpoint {

inline constexpr char kMagic[8] = {'R', 'I', 'S', 'F', 'L', 'M', 'L', 'P'};
inline constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return value;
}

inline void save(const ModelParams& params, std::ostream& os) {
    os.write(kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(os, kVersion);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(kLayerWidths.size()));
    for (int w : kLayerWidths) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(w));
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(ModelParams::total_size));
    for (Eigen::Index i = 0; i < params.flat().size(); ++i) write_le<double>(os, params.flat()[i]);
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

inline ModelParams load(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw std::runtime_error("checkpoint: bad magic");
    if (read_le<std::uint32_t>(is) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    const auto layers = read_le<std::uint32_t>(is);
    if (layers != kLayerWidths.size()) throw std::runtime_error("checkpoint: architecture mismatch");
    for (int w : kLayerWidths)
        if (read_le<std::uint32_t>(is) != static_cast<std::uint32_t>(w))
            throw std::runtime_error("checkpoint: architecture mismatch");
    if (read_le<std::uint64_t>(is) != static_cast<std::uint64_t>(ModelParams::total_size))
        throw std::runtime_error("checkpoint: parameter count mismatch");
    Vector flat(ModelParams::total_size);
    for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = read_le<double>(is);
    return ModelParams(std::move(flat));
}

inline void save(const ModelParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
    save(params, os);
}

inline ModelParams load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    return load(is);
}

} // namespace checkpoint

} // namespace risfl
