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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "risfl/diagnostics.hpp"
#include "risfl/fed.hpp"
#include "risfl/harness/config.hpp"

namespace risfl::harness {

/// Mean and standard error (sample sd / sqrt(n)) over independent runs.
struct Stat {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline Stat mean_se(const std::vector<double>& xs) {
    Stat s;
    s.n = xs.size();
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
    }
    return s;
}

struct SeedRun {
    Algorithm algorithm = Algorithm::fgdra;
    std::uint64_t seed = 0;
    RunResult result;
};

struct AlgorithmSummary {
    Algorithm algorithm = Algorithm::fgdra;
    Stat average; // final-round average test accuracy
    Stat worst;   // final-round worst-worker test accuracy
    Stat sd;      // final-round across-worker standard deviation
};

struct RunSummary {
    std::vector<AlgorithmSummary> algorithms;

    const AlgorithmSummary& at(Algorithm a) const {
        for (const auto& s : algorithms)
            if (s.algorithm == a) return s;
        throw std::out_of_range("summary: algorithm not run");
    }
};

struct ExperimentResult {
    std::vector<SeedRun> runs;
    RunSummary summary;
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

inline std::string f4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::string f10(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10f", v);
    return buf;
}

} // namespace detail

inline void write_rounds_header(std::ostream& os, int workers) {
    os << "algorithm,seed,round,comm_rounds,avg_acc,worst_acc,sd_acc";
    for (int n = 0; n < workers; ++n) os << ",acc_" << n;
    for (int n = 0; n < workers; ++n) os << ",lambda_" << n;
    os << '\n';
}

inline void write_rounds_rows(std::ostream& os, const SeedRun& run) {
    for (const auto& log : run.result.logs) {
        os << risfl::to_string(run.algorithm) << ',' << run.seed << ',' << log.round << ',' << log.communication_rounds
           << ',' << detail::f4(log.average) << ',' << detail::f4(log.worst) << ',' << detail::f4(log.sd);
        for (double a : log.accuracy) os << ',' << detail::f4(a);
        for (double l : log.lambda) os << ',' << detail::f10(l);
        os << '\n';
    }
}

inline RunSummary summarize(const std::vector<SeedRun>& runs, const std::vector<Algorithm>& order) {
    RunSummary summary;
    for (Algorithm a : order) {
        std::vector<double> avg, worst, sd;
        for (const auto& r : runs) {
            if (r.algorithm != a || r.result.logs.empty()) continue;
            avg.push_back(r.result.logs.back().average);
            worst.push_back(r.result.logs.back().worst);
            sd.push_back(r.result.logs.back().sd);
        }
        summary.algorithms.push_back({a, mean_se(avg), mean_se(worst), mean_se(sd)});
    }
    return summary;
}

/// Every algorithm for every seed, in (algorithm, seed) order. When
/// `rounds_csv` is given the header is written first and each run's rows are
/// flushed as soon as the run finishes.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::vector<WorkerData>& workers,
                                       std::ostream* rounds_csv = nullptr, const ProgressFn& progress = {}) {
    cfg.validate();
    ExperimentResult out;
    if (rounds_csv) write_rounds_header(*rounds_csv, cfg.train.workers);
    for (Algorithm a : cfg.algorithms) {
        for (std::uint64_t seed : cfg.seeds) {
            TrainConfig tc = cfg.train;
            tc.algorithm = a;
            tc.seed = seed;
            SeedRun sr{a, seed, run(tc, workers)};
            if (rounds_csv) {
                write_rounds_rows(*rounds_csv, sr);
                rounds_csv->flush();
                if (!*rounds_csv) throw std::runtime_error("run_experiment: failed writing round log");
            }
            if (progress) progress(std::string(risfl::to_string(a)) + " seed " + std::to_string(seed) + " done");
            out.runs.push_back(std::move(sr));
        }
    }
    out.summary = summarize(out.runs, cfg.algorithms);
    return out;
}

inline void write_summary_csv(std::ostream& os, const RunSummary& s) {
    os << "algorithm,runs,avg_mean,avg_se,worst_mean,worst_se,sd_mean,sd_se\n";
    for (const auto& a : s.algorithms)
        os << risfl::to_string(a.algorithm) << ',' << a.average.n << ',' << detail::f4(a.average.mean) << ','
           << detail::f4(a.average.se) << ',' << detail::f4(a.worst.mean) << ',' << detail::f4(a.worst.se) << ','
           << detail::f4(a.sd.mean) << ',' << detail::f4(a.sd.se) << '\n';
}

struct SweepCell {
    SweepAxis axis = SweepAxis::none;
    int value = 0;
    Algorithm algorithm = Algorithm::fgdra;
    Stat average;
    Stat worst;

    /// "avg/worst" with two decimals, the layout of the hyperparameter tables.
    std::string cell() const {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f/%.2f", average.mean, worst.mean);
        return buf;
    }
};

inline ExperimentConfig with_axis_value(ExperimentConfig cfg, SweepAxis axis, int value) {
    switch (axis) {
    case SweepAxis::tau: cfg.train.local_steps = value; break;
    case SweepAxis::batch: cfg.train.batch_size = value; break;
    case SweepAxis::sampled: cfg.train.sampled = value; break;
    case SweepAxis::none: break;
    }
    return cfg;
}

/// One cell per (sweep value, algorithm): final-round accuracies averaged
/// over the seed list. Only the final round is evaluated.
inline std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::vector<WorkerData>& workers,
                                        const ProgressFn& progress = {}) {
    if (cfg.sweep_axis == SweepAxis::none || cfg.sweep_values.empty())
        throw std::invalid_argument("run_sweep: sweep_axis and sweep_values must be set");
    cfg.validate();
    std::vector<SweepCell> cells;
    for (double v : cfg.sweep_values) {
        ExperimentConfig c = with_axis_value(cfg, cfg.sweep_axis, static_cast<int>(v));
        c.train.eval_every = c.train.rounds;
        const ExperimentResult r = run_experiment(c, workers, nullptr, progress);
        for (const auto& s : r.summary.algorithms)
            cells.push_back({cfg.sweep_axis, static_cast<int>(v), s.algorithm, s.average, s.worst});
    }
    return cells;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
    os << "axis,value,algorithm,runs,avg_mean,avg_se,worst_mean,worst_se,cell\n";
    for (const auto& c : cells)
        os << to_string(c.axis) << ',' << c.value << ',' << risfl::to_string(c.algorithm) << ',' << c.average.n << ','
           << detail::f4(c.average.mean) << ',' << detail::f4(c.average.se) << ',' << detail::f4(c.worst.mean) << ','
           << detail::f4(c.worst.se) << ',' << c.cell() << '\n';
}

/// Rows = algorithms, columns = sweep values, cells "avg/worst".
inline std::string format_sweep_table(const std::vector<SweepCell>& cells) {
    std::vector<int> values;
    std::vector<Algorithm> algs;
    for (const auto& c : cells) {
        if (std::find(values.begin(), values.end(), c.value) == values.end()) values.push_back(c.value);
        if (std::find(algs.begin(), algs.end(), c.algorithm) == algs.end()) algs.push_back(c.algorithm);
    }
    std::ostringstream o;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-8s", "");
    o << buf;
    for (int v : values) {
        std::snprintf(buf, sizeof(buf), "%16s", (to_string(cells.front().axis) + "=" + std::to_string(v)).c_str());
        o << buf;
    }
    o << '\n';
    for (Algorithm a : algs) {
        std::snprintf(buf, sizeof(buf), "%-8s", std::string(risfl::to_string(a)).c_str());
        o << buf;
        for (int v : values)
            for (const auto& c : cells)
                if (c.algorithm == a && c.value == v) {
                    std::snprintf(buf, sizeof(buf), "%16s", c.cell().c_str());
                    o << buf;
                }
        o << '\n';
    }
    return o.str();
}

// ---------------------------------------------------------------------------
// plot data

struct RoundRow {
    std::string algorithm;
    std::uint64_t seed = 0;
    int round = 0;
    int comm_rounds = 0;
    double average = 0.0;
    double worst = 0.0;
    double sd = 0.0;
};

inline std::vector<RoundRow> read_rounds_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("algorithm,seed,round,comm_rounds,avg_acc,worst_acc,sd_acc", 0) != 0)
        throw std::runtime_error("rounds csv: unexpected header");
    std::vector<RoundRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[7];
        for (auto& x : f)
            if (!std::getline(ss, x, ',')) throw std::runtime_error("rounds csv: short row");
        rows.push_back({f[0], std::stoull(f[1]), std::stoi(f[2]), std::stoi(f[3]), std::stod(f[4]), std::stod(f[5]),
                        std::stod(f[6])});
    }
    return rows;
}

struct BandPoint {
    int comm_round = 0;
    Stat value;
};

struct PlotSeries {
    std::string metric; // avg, worst, sd
    std::string algorithm;
    std::vector<BandPoint> points; // ascending comm_round
};

/// Mean and one-standard-error band over seeds, per metric and algorithm,
/// indexed by communication rounds consumed.
inline std::vector<PlotSeries> plot_series(const std::vector<RoundRow>& rows) {
    std::vector<std::string> algs;
    for (const auto& r : rows)
        if (std::find(algs.begin(), algs.end(), r.algorithm) == algs.end()) algs.push_back(r.algorithm);
    std::vector<PlotSeries> out;
    for (const char* metric : {"avg", "worst", "sd"}) {
        for (const auto& a : algs) {
            std::map<int, std::vector<double>> by_round;
            for (const auto& r : rows) {
                if (r.algorithm != a) continue;
                const std::string m = metric;
                by_round[r.comm_rounds].push_back(m == "avg" ? r.average : m == "worst" ? r.worst : r.sd);
            }
            PlotSeries s{metric, a, {}};
            for (const auto& [round, vals] : by_round) s.points.push_back({round, mean_se(vals)});
            out.push_back(std::move(s));
        }
    }
    return out;
}

/// Writes plot_<metric>_<algorithm>.csv files; returns the paths written.
inline std::vector<std::filesystem::path> emit_plot_data(const std::vector<RoundRow>& rows,
                                                         const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& s : plot_series(rows)) {
        const auto path = dir / ("plot_" + s.metric + "_" + s.algorithm + ".csv");
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        os << "comm_round,mean,se,lower,upper,runs\n";
        for (const auto& p : s.points)
            os << p.comm_round << ',' << detail::f4(p.value.mean) << ',' << detail::f4(p.value.se) << ','
               << detail::f4(p.value.mean - p.value.se) << ',' << detail::f4(p.value.mean + p.value.se) << ','
               << p.value.n << '\n';
        written.push_back(path);
    }
    return written;
}

// ---------------------------------------------------------------------------
// convergence diagnostics

struct DiagnosticsResult {
    TheoryEstimates estimates;
    TrainConfig train; // configuration actually run (after any schedule)
    ConvergenceTrace trace;
    std::vector<double> bound; // theorem bound at each checkpoint's t (t = 0 evaluated at T = 1)
    RunResult run;
};

/// Estimates the constants, runs FGDRA with checkpoints, and traces the
/// full-batch weighted gradient norm at round boundaries.
inline DiagnosticsResult run_diagnostics(const ExperimentConfig& cfg, const std::vector<WorkerData>& workers,
                                         std::uint64_t seed) {
    cfg.validate();
    DiagnosticsResult d;
    TrainConfig tc = cfg.train;
    tc.algorithm = Algorithm::fgdra;
    tc.seed = seed;
    const ModelParams theta0 = risfl::detail::initial_params(seed);
    d.estimates = estimate_constants(workers, theta0, uniform_weights(tc.workers), cfg.diag_probes, tc.batch_size,
                                     cfg.scenario.data_seed);
    if (cfg.theorem_schedule) tc = theorem_schedule(tc, d.estimates);
    tc.checkpoint_every = std::max(1, tc.rounds / cfg.diag_checkpoints);
    tc.eval_every = tc.rounds;
    d.train = tc;
    d.run = run_fgdra(tc, workers);
    d.trace = grad_norm_trace(d.run.checkpoints, workers, tc.local_steps);
    for (auto t : d.trace.t) d.bound.push_back(theorem_bound(d.estimates, tc.sampled, std::max<std::int64_t>(t, 1)));
    return d;
}

inline void write_diagnostics_csv(std::ostream& os, const DiagnosticsResult& d) {
    os << "t,grad_norm_sq,running_mean,bound\n";
    char buf[128];
    for (std::size_t i = 0; i < d.trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g\n", static_cast<long long>(d.trace.t[i]),
                      d.trace.grad_norm_sq[i], d.trace.running_mean[i], d.bound[i]);
        os << buf;
    }
}

} // namespace risfl::harness
