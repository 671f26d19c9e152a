// Command-line harness: run / dump / sweep over the face-recognition protocols.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lrrid/config.hpp"
#include "lrrid/errors.hpp"
#include "lrrid/experiment.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out;
    std::optional<std::string> method;
    std::optional<std::string> data;
    std::optional<int> jobs;
    bool traces = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("-c,--config", f.config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Base seed (trial i uses seed + i)");
    cmd->add_option("--trials", f.trials, "Number of trials");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--method", f.method, "lrrid or lrrs");
    cmd->add_option("--data", f.data, "Dataset root directory");
    cmd->add_option("--jobs", f.jobs, "Trials run concurrently");
    cmd->add_flag("--traces", f.traces, "Write per-iteration solver traces");
}

lrrid::ExperimentConfig resolve(const CommonFlags& f) {
    lrrid::ExperimentConfig c = lrrid::load_config(f.config_path);
    if (f.seed) c.seed = *f.seed;
    if (f.trials) c.trials = *f.trials;
    if (f.out) c.output_dir = *f.out;
    if (f.method) c.method = lrrid::parse_method(*f.method);
    if (f.data) c.dataset.path = *f.data;
    if (f.jobs) c.jobs = *f.jobs;
    if (f.traces) c.write_traces = true;
    c.validate();
    return c;
}

void print_summary(const lrrid::ExperimentConfig& c, const lrrid::ExperimentResult& r) {
    for (const auto& t : r.trials) {
        std::cout << "trial " << t.trial << " seed " << t.seed << ": ";
        if (t.failed) {
            std::cout << "FAILED (" << t.error << ")\n";
        } else {
            std::cout << "accuracy " << lrrid::format_percent(t.accuracy) << "%, "
                      << t.iterations << " iterations" << (t.converged ? "" : " (not converged)")
                      << ", " << t.wall_seconds << " s\n";
        }
    }
    std::cout << lrrid::to_string(c.method) << " " << lrrid::protocol_kind(c.protocol) << " "
              << lrrid::protocol_level_label(c.protocol) << ": mean "
              << lrrid::format_percent(r.summary.mean_accuracy) << "% +/- "
              << lrrid::format_percent(r.summary.stddev_accuracy) << "% over "
              << r.summary.completed << " trial(s)";
    if (r.summary.failed > 0) std::cout << ", " << r.summary.failed << " failed";
    std::cout << "\nresults written to " << c.output_dir << '\n';
}

int cmd_run(const CommonFlags& f) {
    const auto config = resolve(f);
    const auto result = lrrid::run_experiment(config);
    lrrid::write_experiment_outputs(config, result);
    {
        std::ofstream out(config.output_dir / "config.json");
        out << lrrid::dump_config(config);
    }
    print_summary(config, result);
    return result.summary.completed > 0 ? 0 : 1;
}

int cmd_dump(const CommonFlags& f, int trial, std::size_t k) {
    const auto config = resolve(f);
    const auto images = lrrid::load_images(config);
    fs::create_directories(config.output_dir);

    std::ofstream trace;
    if (config.write_traces) trace.open(config.output_dir / ("trace_trial" + std::to_string(trial) + ".csv"));
    const auto art = lrrid::run_trial(config, images, trial, config.write_traces ? &trace : nullptr);

    const auto files = lrrid::dump_decomposition(art.solve, art.Y, art.n_train, art.height,
                                                 art.width, art.v_max, k,
                                                 config.output_dir / "decomposition");
    {
        std::ofstream model(config.output_dir / ("model_trial" + std::to_string(trial) + ".txt"));
        lrrid::write_model(model, art.model);
    }
    std::cout << "trial " << trial << ": accuracy "
              << lrrid::format_percent(lrrid::accuracy(art.predicted, art.test_labels)) << "%, "
              << art.solve.iters_used << " iterations; wrote " << files.size()
              << " image(s) to " << (config.output_dir / "decomposition") << '\n';
    return 0;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_sweep(const CommonFlags& f, const std::string& levels_arg, const std::string& methods_arg) {
    const auto base = resolve(f);
    const auto levels = split_list(levels_arg);
    if (levels.empty()) throw std::invalid_argument("sweep: --levels is empty");
    std::vector<std::string> methods = split_list(methods_arg);
    if (methods.empty()) methods.push_back(lrrid::to_string(base.method));

    const auto images = lrrid::load_images(base);
    std::vector<lrrid::TableCell> cells;
    bool numeric_axis = true;
    std::vector<std::pair<std::string, std::vector<lrrid::CurvePoint>>> curves;

    for (const auto& m : methods) {
        std::vector<lrrid::CurvePoint> curve;
        for (const auto& level : levels) {
            lrrid::ExperimentConfig c = base;
            c.method = lrrid::parse_method(m);
            c.protocol = lrrid::protocol_at(base.protocol, level);
            if (std::holds_alternative<lrrid::EyalebDim>(c.protocol)) {
                // The feature count picks the downsampling factor.
                c.dataset.preprocess = lrrid::preset(c.protocol).dataset.preprocess;
            }
            c.output_dir = base.output_dir / (m + "_" + lrrid::protocol_level_label(c.protocol));
            c.validate();
            const auto r = lrrid::run_experiment(c, images);
            lrrid::write_experiment_outputs(c, r);
            print_summary(c, r);
            cells.push_back({m, lrrid::protocol_level_label(c.protocol), r.summary.mean_accuracy});
            if (const auto v = lrrid::protocol_level_value(c.protocol)) {
                curve.push_back({*v / 100.0, r.summary.mean_accuracy});
            } else {
                numeric_axis = false;
            }
        }
        curves.emplace_back(m, std::move(curve));
    }

    fs::create_directories(base.output_dir);
    const std::string axis = lrrid::protocol_kind(base.protocol);
    lrrid::emit_table(base.output_dir / "table.csv", axis, cells, lrrid::TableFormat::csv);
    lrrid::emit_table(base.output_dir / "table.txt", axis, cells, lrrid::TableFormat::aligned_text);
    lrrid::emit_table(std::cout, axis, cells, lrrid::TableFormat::aligned_text);

    const bool fractional = !std::holds_alternative<lrrid::EyalebDim>(base.protocol);
    if (numeric_axis && fractional && levels.size() >= 2) {
        for (const auto& [m, curve] : curves) {
            lrrid::plot_noise_curve(base.output_dir / ("curve_" + m + ".csv"), curve);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank representations with an incoherent dictionary: robust face recognition experiments"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "Run all trials of one experiment config");
    add_common(run, run_flags);

    CommonFlags dump_flags;
    int dump_trial = 0;
    std::size_t dump_k = 5;
    auto* dump = app.add_subcommand("dump", "Solve one trial and write decomposition images");
    add_common(dump, dump_flags);
    dump->add_option("--trial", dump_trial, "Trial index");
    dump->add_option("-k,--count", dump_k, "Number of test columns to dump");

    CommonFlags sweep_flags;
    std::string sweep_levels;
    std::string sweep_methods;
    auto* sweep = app.add_subcommand("sweep", "Grid over occlusion/noise levels, dimensions or scenarios");
    add_common(sweep, sweep_flags);
    sweep->add_option("--levels", sweep_levels,
                      "Comma-separated levels: fractions for occlusion/noise, 30/56/120 for "
                      "Extended Yale B, scenario names for AR")
        ->required();
    sweep->add_option("--methods", sweep_methods, "Comma-separated methods (default: config method)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (dump->parsed()) return cmd_dump(dump_flags, dump_trial, dump_k);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_levels, sweep_methods);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
