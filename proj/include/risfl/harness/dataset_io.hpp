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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "risfl/labeling.hpp"

namespace risfl::harness {

// Dataset files, format version 1.
//
//   worker_<n>_train.csv, worker_<n>_test.csv
//     header "f0,...,f399,label"; one row per sample: 400 standardized
//     features (%.17g) then the integer class label.
//   worker_<n>.meta
//     text, one `key = value` per line: format, worker, data_seed, the
//     worker profile (spacing, wavelength, tx/rx placements, scatterers,
//     codeword offsets), split sizes, class histogram, and the
//     standardization vectors `mean` and `sd` (400 comma-separated values).
//     Raw features are recovered as standardized * sd + mean.
inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string join_vector(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += g17(v[i]);
    }
    return out;
}

inline std::string placement_text(const Placement& p) {
    return g17(p.distance) + "," + g17(p.azimuth) + "," + g17(p.elevation);
}

} // namespace detail

inline void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) os << 'f' << j << ',';
    os << "label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
            os << detail::g17(ds.features(static_cast<Eigen::Index>(i), j)) << ',';
        os << ds.labels[i] << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline Dataset read_dataset_csv(const std::filesystem::path& path, int worker_id = 0) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": missing header");
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != static_cast<std::size_t>(kFeatures) + 1)
            throw std::runtime_error(path.string() + ": expected 401 columns per row");
        labels.push_back(static_cast<int>(row.back()));
        row.pop_back();
        rows.push_back(std::move(row));
    }
    Dataset ds;
    ds.worker_id = worker_id;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), kFeatures);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < kFeatures; ++j) ds.features(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    ds.labels = std::move(labels);
    ds.rates.assign(ds.labels.size(), 0.0);
    return ds;
}

inline void write_meta(const WorkerData& w, std::uint64_t data_seed, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    const auto& g = w.profile.geometry;
    os << "format = " << kDatasetFormatVersion << '\n';
    os << "worker = " << w.train.worker_id << '\n';
    os << "data_seed = " << data_seed << '\n';
    os << "ris_rows = " << g.ris_rows << '\n';
    os << "ris_cols = " << g.ris_cols << '\n';
    os << "element_spacing = " << detail::g17(g.element_spacing) << '\n';
    os << "wavelength = " << detail::g17(g.wavelength) << '\n';
    os << "tx = " << detail::placement_text(g.tx) << '\n';
    os << "rx = " << detail::placement_text(g.rx) << '\n';
    for (std::size_t s = 0; s < g.scatterers.size(); ++s)
        os << "scatterer." << s << " = " << detail::placement_text(g.scatterers[s]) << '\n';
    os << "codeword_offsets_deg = ";
    for (std::size_t c = 0; c < w.profile.codeword_offsets.size(); ++c)
        os << (c ? "," : "") << detail::g17(w.profile.codeword_offsets[c]);
    os << '\n';
    os << "train_size = " << w.train.size() << '\n';
    os << "test_size = " << w.test.size() << '\n';
    const auto hist = w.train.class_histogram();
    os << "train_class_histogram = " << hist[0] << ',' << hist[1] << ',' << hist[2] << ',' << hist[3] << '\n';
    os << "mean = " << detail::join_vector(w.standardizer.mean) << '\n';
    os << "sd = " << detail::join_vector(w.standardizer.sd) << '\n';
}

/// Reads the standardization vectors back from a meta file.
inline Standardizer read_standardizer(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    Standardizer st;
    std::string line;
    auto parse_vec = [](const std::string& s) {
        std::vector<double> xs;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) xs.push_back(std::stod(cell));
        return Vector(Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())));
    };
    while (std::getline(is, line)) {
        if (line.rfind("mean = ", 0) == 0) st.mean = parse_vec(line.substr(7));
        else if (line.rfind("sd = ", 0) == 0) st.sd = parse_vec(line.substr(5));
    }
    if (st.mean.size() != kFeatures || st.sd.size() != kFeatures)
        throw std::runtime_error(path.string() + ": missing standardization vectors");
    return st;
}

inline void write_worker_files(const WorkerData& w, std::uint64_t data_seed, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string stem = "worker_" + std::to_string(w.train.worker_id);
    write_dataset_csv(w.train, dir / (stem + "_train.csv"));
    write_dataset_csv(w.test, dir / (stem + "_test.csv"));
    write_meta(w, data_seed, dir / (stem + ".meta"));
}

} // namespace risfl::harness
