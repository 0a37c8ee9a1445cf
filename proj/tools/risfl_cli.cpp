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

// risfl: command-line front end for dataset generation, federated training
// runs, hyperparameter sweeps, convergence diagnostics and plot data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risfl/risfl.hpp"

namespace fs = std::filesystem;
using namespace risfl;
using namespace risfl::harness;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed_list;
    std::string out_dir = "out";
    std::string algorithms;
    int rounds = 0;
    int local_steps = 0;
    int batch_size = 0;
    int sampled = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config_path, "Key-value configuration file (omitted keys use defaults)");
    cmd->add_option("--set", o.overrides, "Override a configuration field, key=value (repeatable)");
    cmd->add_option("--seed-list", o.seed_list, "Comma-separated run seeds");
    cmd->add_option("-o,--out-dir", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--algorithms", o.algorithms, "Comma-separated subset of fgdra,drfa,fedavg");
    cmd->add_option("--rounds", o.rounds, "Communication rounds K");
    cmd->add_option("--local-steps", o.local_steps, "Local SGD steps tau");
    cmd->add_option("--batch-size", o.batch_size, "Minibatch size B");
    cmd->add_option("--sampled", o.sampled, "Workers sampled per round m");
}

ExperimentConfig load_config(const CommonOptions& o) {
    ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : parse_config(o.config_path);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        set_field(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.seed_list.empty()) set_field(cfg, "seeds", o.seed_list);
    if (!o.algorithms.empty()) set_field(cfg, "algorithms", o.algorithms);
    if (o.rounds > 0) cfg.train.rounds = o.rounds;
    if (o.local_steps > 0) cfg.train.local_steps = o.local_steps;
    if (o.batch_size > 0) cfg.train.batch_size = o.batch_size;
    if (o.sampled > 0) cfg.train.sampled = o.sampled;
    cfg.validate();
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

void save_config(const ExperimentConfig& cfg, const fs::path& dir) {
    auto os = open_out(dir / "config.cfg");
    os << serialize(cfg);
}

void print_summary(const RunSummary& s) {
    std::printf("%-8s %18s %18s %18s\n", "", "average", "worst", "sd");
    for (const auto& a : s.algorithms)
        std::printf("%-8s %10.2f +- %4.2f %10.2f +- %4.2f %10.2f +- %4.2f\n", std::string(to_string(a.algorithm)).c_str(),
                    a.average.mean, a.average.se, a.worst.mean, a.worst.se, a.sd.mean, a.sd.se);
}

int cmd_gen_data(const CommonOptions& o) {
    const ExperimentConfig cfg = load_config(o);
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);
    for (const auto& w : build_workers(cfg)) {
        write_worker_files(w, cfg.scenario.data_seed, dir);
        const auto h = w.train.class_histogram();
        std::printf("worker %d: %zu train / %zu test, train classes %zu %zu %zu %zu\n", w.train.worker_id,
                    w.train.size(), w.test.size(), h[0], h[1], h[2], h[3]);
    }
    save_config(cfg, dir);
    return 0;
}

int cmd_train(const CommonOptions& o, bool save_models) {
    const ExperimentConfig cfg = load_config(o);
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);
    save_config(cfg, dir);
    const auto workers = build_workers(cfg);
    auto rounds = open_out(dir / "rounds.csv");
    const auto result = run_experiment(cfg, workers, &rounds, [](const std::string& m) { std::cerr << m << '\n'; });
    auto summary = open_out(dir / "summary.csv");
    write_summary_csv(summary, result.summary);
    if (save_models)
        for (const auto& r : result.runs)
            checkpoint::save(r.result.theta,
                             (dir / ("model_" + std::string(to_string(r.algorithm)) + "_" + std::to_string(r.seed) + ".bin")).string());
    print_summary(result.summary);
    return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& axis, const std::string& values) {
    CommonOptions copy = o;
    if (!axis.empty()) copy.overrides.push_back("sweep_axis=" + axis);
    if (!values.empty()) copy.overrides.push_back("sweep_values=" + values);
    const ExperimentConfig cfg = load_config(copy);
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);
    save_config(cfg, dir);
    const auto workers = build_workers(cfg);
    const auto cells = run_sweep(cfg, workers, [](const std::string& m) { std::cerr << m << '\n'; });
    auto os = open_out(dir / "sweep.csv");
    write_sweep_csv(os, cells);
    std::cout << format_sweep_table(cells);
    return 0;
}

int cmd_diagnose(const CommonOptions& o, std::uint64_t seed, bool schedule) {
    ExperimentConfig cfg = load_config(o);
    if (schedule) cfg.theorem_schedule = true;
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);
    save_config(cfg, dir);
    const auto workers = build_workers(cfg);
    const auto d = run_diagnostics(cfg, workers, seed);
    auto os = open_out(dir / "diagnostics.csv");
    write_diagnostics_csv(os, d);
    const auto fit = slope_fit(d.trace);
    std::printf("sigma_hat %.6g  nu_hat %.6g  L_hat %.6g  F0 %.6g\n", d.estimates.sigma_hat, d.estimates.nu_hat,
                d.estimates.L_hat, d.estimates.F0);
    std::printf("tau %d  alpha %.6g  gamma %.6g  T %lld\n", d.train.local_steps, d.train.primal_step,
                d.train.dual_step, static_cast<long long>(d.trace.t.back()));
    std::printf("final running mean %.6g  bound %.6g  log-log slope %.4f\n", d.trace.running_mean.back(),
                d.bound.back(), fit.slope);
    return 0;
}

int cmd_plot_data(const std::string& csv, const std::string& out_dir) {
    std::ifstream is(csv);
    if (!is) throw std::runtime_error("cannot read " + csv);
    const auto rows = read_rounds_csv(is);
    for (const auto& p : emit_plot_data(rows, out_dir)) std::cout << p.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated distributionally robust RIS configuration learning simulator"};
    app.require_subcommand(1);

    CommonOptions gen_o, train_o, sweep_o, diag_o;
    auto* gen = app.add_subcommand("gen-data", "Generate and write per-worker datasets");
    add_common(gen, gen_o);

    auto* train = app.add_subcommand("train", "Run every algorithm for every seed and log each round");
    add_common(train, train_o);
    bool save_models = false;
    train->add_flag("--save-models", save_models, "Write final model checkpoints");

    auto* sweep = app.add_subcommand("sweep", "Final-round accuracies over a hyperparameter sweep");
    add_common(sweep, sweep_o);
    std::string axis, values;
    sweep->add_option("--axis", axis, "Sweep axis: tau, B or m");
    sweep->add_option("--values", values, "Comma-separated sweep values");

    auto* diag = app.add_subcommand("diagnose", "Convergence trace and theoretical bound for one FGDRA run");
    add_common(diag, diag_o);
    std::uint64_t diag_seed = 1;
    bool schedule = false;
    diag->add_option("--seed", diag_seed, "Run seed")->capture_default_str();
    diag->add_flag("--theorem-schedule", schedule, "Use alpha = 1/(L sqrt T), gamma = 1/(sqrt N T), tau = T^(1/4)");

    auto* plot = app.add_subcommand("plot-data", "Mean and standard-error bands from a rounds.csv");
    std::string rounds_csv, plot_out = "plots";
    plot->add_option("rounds_csv", rounds_csv, "rounds.csv written by train")->required();
    plot->add_option("-o,--out-dir", plot_out, "Output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_gen_data(gen_o);
        if (*train) return cmd_train(train_o, save_models);
        if (*sweep) return cmd_sweep(sweep_o, axis, values);
        if (*diag) return cmd_diagnose(diag_o, diag_seed, schedule);
        if (*plot) return cmd_plot_data(rounds_csv, plot_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
