#include "lrrid/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lrrid/errors.hpp"
#include "lrrid/rng.hpp"

namespace fs = std::filesystem;

namespace lrrid {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// splitmix64 finalizer; derives independent sub-seeds from a trial seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kTrainCorruption = 1, kTestCorruption = 2, kDictionary = 3 };

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

int eyaleb_factor(int dim) {
    switch (dim) {
        case 30: return 32;
        case 56: return 24;
        case 120: return 16;
        default:
            throw std::invalid_argument("eyaleb_dim: dimension must be 30, 56 or 120, got " +
                                        std::to_string(dim));
    }
}

ImageSet synthetic_images(const Synthetic& syn, std::uint64_t seed) {
    if (syn.classes < 1 || syn.height < 1 || syn.width < 1 || syn.images_per_class < 2) {
        throw std::invalid_argument("synthetic: classes, size and images_per_class too small");
    }
    Rng rng(seed);
    ImageSet set;
    set.num_classes = syn.classes;
    for (int c = 0; c < syn.classes; ++c) {
        Image prototype(syn.height, syn.width, 255.0);
        for (double& p : prototype.pixels) p = rng.uniform(0.0, 255.0);
        for (int k = 0; k < syn.images_per_class; ++k) {
            Image img = prototype;
            for (double& p : img.pixels) {
                p = std::clamp(p + syn.noise * 255.0 * rng.uniform(-1.0, 1.0), 0.0, 255.0);
            }
            set.images.push_back(std::move(img));
            set.labels.push_back(c);
            set.tags.emplace_back();
            set.sources.emplace_back();
        }
    }
    return set;
}

Image load_occluder(const ExperimentConfig& config) {
    return config.occluder.empty() ? default_occluder() : read_pgm(config.occluder);
}

std::optional<CorruptionKind> corruption_for(const ExperimentConfig& config) {
    return std::visit(
        overloaded{
            [&](const OrlOcclusion& p) -> std::optional<CorruptionKind> {
                return BlockOcclusion{p.level, load_occluder(config)};
            },
            [&](const ArUniformNoise& p) -> std::optional<CorruptionKind> {
                return UniformNoise{p.level, 0.0};
            },
            [&](const Synthetic& p) -> std::optional<CorruptionKind> {
                if (p.occlusion <= 0.0) return std::nullopt;
                return BlockOcclusion{p.occlusion, load_occluder(config)};
            },
            [](const auto&) -> std::optional<CorruptionKind> { return std::nullopt; },
        },
        config.protocol);
}

ImageSet degrade(const ImageSet& set, const ExperimentConfig& config,
                 const std::optional<CorruptionKind>& kind, std::uint64_t seed) {
    auto apply_corruption = [&](const ImageSet& s) {
        return kind ? corrupt(s, CorruptionSpec{*kind, seed}) : s;
    };
    if (config.corrupt_before_preprocess) {
        return preprocess(apply_corruption(set), config.dataset.preprocess);
    }
    return apply_corruption(preprocess(set, config.dataset.preprocess));
}

}  // namespace

std::string to_string(Method method) { return method == Method::lrrs ? "lrrs" : "lrrid"; }

Method parse_method(const std::string& name) {
    if (name == "lrrid") return Method::lrrid;
    if (name == "lrrs") return Method::lrrs;
    throw std::invalid_argument("unknown method: " + name);
}

std::string protocol_kind(const Protocol& protocol) {
    return std::visit(overloaded{
                          [](const OrlOcclusion&) { return std::string("orl_occlusion"); },
                          [](const EyalebDim&) { return std::string("eyaleb_dim"); },
                          [](const ArDisguise&) { return std::string("ar_scenario"); },
                          [](const ArUniformNoise&) { return std::string("ar_uniform_noise"); },
                          [](const Synthetic&) { return std::string("synthetic"); },
                      },
                      protocol);
}

std::string protocol_level_label(const Protocol& protocol) {
    return std::visit(overloaded{
                          [](const OrlOcclusion& p) { return format_number(100.0 * p.level); },
                          [](const EyalebDim& p) { return std::to_string(p.dim); },
                          [](const ArDisguise& p) { return to_string(p.scenario); },
                          [](const ArUniformNoise& p) { return format_number(100.0 * p.level); },
                          [](const Synthetic& p) { return format_number(100.0 * p.occlusion); },
                      },
                      protocol);
}

std::optional<double> protocol_level_value(const Protocol& protocol) {
    return std::visit(overloaded{
                          [](const OrlOcclusion& p) -> std::optional<double> { return 100.0 * p.level; },
                          [](const EyalebDim& p) -> std::optional<double> { return p.dim; },
                          [](const ArDisguise&) -> std::optional<double> { return std::nullopt; },
                          [](const ArUniformNoise& p) -> std::optional<double> { return 100.0 * p.level; },
                          [](const Synthetic& p) -> std::optional<double> { return 100.0 * p.occlusion; },
                      },
                      protocol);
}

Protocol protocol_at(const Protocol& base, const std::string& level) {
    auto fraction = [&] {
        std::size_t used = 0;
        const double v = std::stod(level, &used);
        if (used != level.size() || !(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("level must be a fraction in [0, 1], got " + level);
        }
        return v;
    };
    return std::visit(overloaded{
                          [&](OrlOcclusion p) -> Protocol { p.level = fraction(); return p; },
                          [&](EyalebDim p) -> Protocol { p.dim = std::stoi(level); return p; },
                          [&](ArDisguise p) -> Protocol { p.scenario = parse_ar_scenario(level); return p; },
                          [&](ArUniformNoise p) -> Protocol { p.level = fraction(); return p; },
                          [&](Synthetic p) -> Protocol { p.occlusion = fraction(); return p; },
                      },
                      base);
}

ExperimentConfig preset(const Protocol& protocol) {
    ExperimentConfig c;
    c.protocol = protocol;
    c.hyperparams.lambda = 0.1;
    c.hyperparams.beta = 0.1;
    c.hyperparams.gamma = 1e-4;
    std::visit(overloaded{
                   [&](const OrlOcclusion&) {
                       c.dataset.layout = Layout::orl;
                       c.dataset.preprocess = DownsampleTo{28, 23};
                       c.hyperparams.lambda = 0.05;
                       c.atoms_per_class = 5;
                       c.train_per_class = 5;
                       c.test_per_class = 5;
                   },
                   [&](const EyalebDim& p) {
                       c.dataset.layout = Layout::extended_yale_b;
                       c.dataset.preprocess = Downsample{eyaleb_factor(p.dim)};
                       c.atoms_per_class = 32;
                       c.train_per_class = 32;
                       c.test_per_class.reset();
                   },
                   [&](const ArDisguise&) {
                       c.dataset.layout = Layout::ar;
                       c.dataset.preprocess = Downsample{3};
                       c.atoms_per_class = 5;
                   },
                   [&](const ArUniformNoise&) {
                       c.dataset.layout = Layout::ar;
                       c.dataset.preprocess = Downsample{3};
                       c.atoms_per_class = 7;
                   },
                   [&](const Synthetic&) {
                       c.dataset.preprocess = Identity{};
                       c.atoms_per_class = 3;
                       c.train_per_class = 5;
                       c.test_per_class = 5;
                   },
               },
               protocol);
    return c;
}

void ExperimentConfig::validate() const {
    hyperparams.validate();
    if (trials < 1) throw std::invalid_argument("config: trials must be at least 1");
    if (jobs < 1) throw std::invalid_argument("config: jobs must be at least 1");
    if (atoms_per_class < 1) throw std::invalid_argument("config: atoms_per_class must be positive");
    if (!(eta_ridge > 0.0)) throw std::invalid_argument("config: eta_ridge must be positive");
    std::visit(overloaded{
                   [](const OrlOcclusion& p) {
                       if (!(p.level >= 0.0 && p.level <= 1.0))
                           throw std::invalid_argument("config: occlusion level outside [0, 1]");
                   },
                   [](const EyalebDim& p) { eyaleb_factor(p.dim); },
                   [](const ArDisguise&) {},
                   [](const ArUniformNoise& p) {
                       if (!(p.level >= 0.0 && p.level <= 1.0))
                           throw std::invalid_argument("config: noise level outside [0, 1]");
                   },
                   [](const Synthetic& p) {
                       if (!(p.occlusion >= 0.0 && p.occlusion <= 1.0))
                           throw std::invalid_argument("config: occlusion level outside [0, 1]");
                   },
               },
               protocol);
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    return base_seed + static_cast<std::uint64_t>(trial);
}

ImageSet load_images(const ExperimentConfig& config) {
    if (const auto* syn = std::get_if<Synthetic>(&config.protocol)) {
        return synthetic_images(*syn, config.seed);
    }
    return load_dataset(config.dataset.path, config.dataset.layout);
}

TrialArtifacts run_trial(const ExperimentConfig& config, const ImageSet& images, int trial,
                         std::ostream* trace) {
    const std::uint64_t seed = trial_seed(config.seed, trial);

    std::pair<ImageSet, ImageSet> parts;
    if (const auto* ar = std::get_if<ArDisguise>(&config.protocol)) {
        parts = ar_split(images, ar->scenario, seed);
    } else if (std::holds_alternative<ArUniformNoise>(config.protocol)) {
        parts = ar_split(images, ArScenario::uniform_noise, seed);
    } else {
        parts = split(images, SplitSpec{config.train_per_class, config.test_per_class, seed, trial});
    }

    const auto corruption = corruption_for(config);
    const ImageSet train = degrade(parts.first, config, corruption, mix_seed(seed, kTrainCorruption));
    const ImageSet test = degrade(parts.second, config, corruption, mix_seed(seed, kTestCorruption));

    const Vectorized vtrain = vectorize(train, config.normalize_columns);
    const Vectorized vtest = vectorize(test, config.normalize_columns);
    for (const auto* v : {&vtrain, &vtest}) {
        if (!v->zero_columns.empty()) {
            std::cerr << "warning: " << v->zero_columns.size()
                      << " all-zero image(s) left unnormalized\n";
        }
    }

    TrialArtifacts out;
    out.n_train = static_cast<std::size_t>(vtrain.Y.cols());
    out.Y.resize(vtrain.Y.rows(), vtrain.Y.cols() + vtest.Y.cols());
    out.Y << vtrain.Y, vtest.Y;
    out.test_labels = vtest.H.labels();
    out.height = train.images.front().height;
    out.width = train.images.front().width;
    out.v_max = train.images.front().v_max;

    std::optional<TraceSink> sink;
    if (trace != nullptr) sink.emplace(*trace);
    TraceSink* sink_ptr = sink ? &*sink : nullptr;

    if (config.method == Method::lrrid) {
        const Matrix D0 = init_dictionary(vtrain.Y, vtrain.H, config.atoms_per_class,
                                          mix_seed(seed, kDictionary));
        out.solve = solve_lrrid(out.Y, out.n_train, D0, config.hyperparams, sink_ptr);
    } else {
        out.solve = solve_lrrs(out.Y, out.n_train, project_columns_unit_ball(vtrain.Y),
                               config.hyperparams, sink_ptr);
    }

    out.model = fit(out.solve.X_train, vtrain.H, config.eta_ridge);
    out.predicted = predict(out.model, out.solve.X_test);
    return out;
}

Summary summarize(const std::vector<TrialReport>& trials) {
    Summary s;
    double sum = 0.0;
    for (const auto& t : trials) {
        if (t.failed) {
            ++s.failed;
        } else {
            ++s.completed;
            sum += t.accuracy;
        }
    }
    if (s.completed == 0) return s;
    s.mean_accuracy = sum / s.completed;
    if (s.completed > 1) {
        double sq = 0.0;
        for (const auto& t : trials) {
            if (!t.failed) sq += (t.accuracy - s.mean_accuracy) * (t.accuracy - s.mean_accuracy);
        }
        s.stddev_accuracy = std::sqrt(sq / (s.completed - 1));
    }
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    return run_experiment(config, load_images(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ImageSet& images) {
    config.validate();
    if (config.write_traces) fs::create_directories(config.output_dir);

    auto one_trial = [&](int trial) {
        TrialReport report;
        report.trial = trial;
        report.seed = trial_seed(config.seed, trial);
        ClassifierModel model;
        const auto start = std::chrono::steady_clock::now();
        try {
            std::ofstream trace_file;
            if (config.write_traces) {
                const auto path = config.output_dir / ("trace_trial" + std::to_string(trial) + ".csv");
                trace_file.open(path);
                if (!trace_file) throw IoError("cannot open " + path.string());
            }
            TrialArtifacts art =
                run_trial(config, images, trial, config.write_traces ? &trace_file : nullptr);
            report.accuracy = accuracy(art.predicted, art.test_labels);
            report.iterations = art.solve.iters_used;
            report.converged = art.solve.converged;
            model = std::move(art.model);
        } catch (const NumericalError& e) {
            report.failed = true;
            report.error = e.what();
        }
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return std::pair{report, model};
    };

    ExperimentResult result;
    result.trials.resize(static_cast<std::size_t>(config.trials));
    result.models.resize(static_cast<std::size_t>(config.trials));
    auto store = [&](int trial, std::pair<TrialReport, ClassifierModel> r) {
        result.trials[static_cast<std::size_t>(trial)] = std::move(r.first);
        result.models[static_cast<std::size_t>(trial)] = std::move(r.second);
    };

    if (config.jobs <= 1) {
        for (int t = 0; t < config.trials; ++t) store(t, one_trial(t));
    } else {
        for (int first = 0; first < config.trials; first += config.jobs) {
            std::vector<std::future<std::pair<TrialReport, ClassifierModel>>> batch;
            const int last = std::min(config.trials, first + config.jobs);
            for (int t = first; t < last; ++t) {
                batch.push_back(std::async(std::launch::async, one_trial, t));
            }
            for (int t = first; t < last; ++t) store(t, batch[static_cast<std::size_t>(t - first)].get());
        }
    }

    result.summary = summarize(result.trials);
    for (const auto& t : result.trials) {
        if (t.failed) {
            std::cerr << "WARNING: trial " << t.trial << " failed and is excluded from the mean: "
                      << t.error << '\n';
        }
    }
    return result;
}

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
    fs::create_directories(config.output_dir);
    auto open = [&](const std::string& name) {
        std::ofstream out(config.output_dir / name);
        if (!out) throw IoError("cannot open " + (config.output_dir / name).string());
        return out;
    };

    {
        auto out = open("trials.csv");
        out << "trial,seed,accuracy,iterations,converged,status\n";
        for (const auto& t : result.trials) {
            char acc[32];
            std::snprintf(acc, sizeof acc, "%.6f", t.accuracy);
            out << t.trial << ',' << t.seed << ',' << acc << ',' << t.iterations << ','
                << (t.converged ? "true" : "false") << ',' << (t.failed ? "failed" : "ok") << '\n';
        }
        if (!out) throw IoError("write failed for trials.csv");
    }

    const std::vector<TableCell> cells{{to_string(config.method),
                                        protocol_level_label(config.protocol),
                                        result.summary.mean_accuracy}};
    const std::string axis = protocol_kind(config.protocol);
    emit_table(config.output_dir / "summary.csv", axis, cells, TableFormat::csv);
    emit_table(config.output_dir / "summary.txt", axis, cells, TableFormat::aligned_text);

    {
        auto out = open("stats.txt");
        out << "mean_accuracy " << format_percent(result.summary.mean_accuracy) << "\n"
            << "stddev_accuracy " << format_percent(result.summary.stddev_accuracy) << "\n"
            << "completed " << result.summary.completed << "\n"
            << "failed " << result.summary.failed << "\n";
    }
    {
        auto out = open("timings.txt");
        for (const auto& t : result.trials) {
            out << "trial " << t.trial << " wall_seconds " << t.wall_seconds << '\n';
        }
    }
    for (std::size_t i = 0; i < result.models.size(); ++i) {
        if (result.trials[i].failed) continue;
        auto out = open("model_trial" + std::to_string(i) + ".txt");
        write_model(out, result.models[i]);
    }
}

// Tables -------------------------------------------------------------------

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

void emit_table(std::ostream& out, const std::string& axis_name,
                const std::vector<TableCell>& cells, TableFormat format) {
    if (cells.empty()) throw std::invalid_argument("emit_table: no results to tabulate");
    std::vector<std::string> levels;
    std::vector<std::string> methods;
    std::map<std::pair<std::string, std::string>, double> value;
    for (const auto& c : cells) {
        if (std::find(levels.begin(), levels.end(), c.level) == levels.end()) levels.push_back(c.level);
        if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
        value[{c.method, c.level}] = c.mean_accuracy;
    }

    std::vector<std::vector<std::string>> grid;
    grid.push_back({axis_name});
    for (const auto& l : levels) grid.back().push_back(l);
    for (const auto& m : methods) {
        std::vector<std::string> row{m};
        for (const auto& l : levels) {
            const auto it = value.find({m, l});
            row.push_back(it == value.end() ? "" : format_percent(it->second));
        }
        grid.push_back(std::move(row));
    }

    if (format == TableFormat::csv) {
        for (const auto& row : grid) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
            out << '\n';
        }
    } else {
        std::vector<std::size_t> width(grid.front().size(), 0);
        for (const auto& row : grid) {
            for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
        }
        for (const auto& row : grid) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i == 0) {
                    out << std::left << std::setw(static_cast<int>(width[i])) << row[i];
                } else {
                    out << "  " << std::right << std::setw(static_cast<int>(width[i])) << row[i];
                }
            }
            out << std::left << '\n';
        }
    }
    if (!out) throw IoError("emit_table: write failed");
}

void emit_table(const fs::path& path, const std::string& axis_name,
                const std::vector<TableCell>& cells, TableFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    emit_table(out, axis_name, cells, format);
}

std::vector<TableCell> parse_table_csv(std::istream& in) {
    auto split_line = [](const std::string& line) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        return fields;
    };
    std::string line;
    if (!std::getline(in, line)) throw IoError("parse_table_csv: missing header");
    const auto header = split_line(line);
    std::vector<TableCell> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto row = split_line(line);
        for (std::size_t i = 1; i < row.size() && i < header.size(); ++i) {
            if (row[i].empty()) continue;
            cells.push_back({row[0], header[i], std::stod(row[i]) / 100.0});
        }
    }
    return cells;
}

void plot_noise_curve(std::ostream& out, std::vector<CurvePoint> points) {
    if (points.size() < 2) throw std::invalid_argument("plot_noise_curve: need at least two levels");
    std::stable_sort(points.begin(), points.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.level < b.level; });
    out << "level,mean_accuracy\n";
    for (const auto& p : points) {
        out << format_number(100.0 * p.level) << ',' << format_percent(p.mean_accuracy) << '\n';
    }
    if (!out) throw IoError("plot_noise_curve: write failed");
}

void plot_noise_curve(const fs::path& path, std::vector<CurvePoint> points) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    plot_noise_curve(out, std::move(points));
}

// Decomposition dumps --------------------------------------------------------

DecompositionPanels decomposition_panels(const SolveResult& result, const Matrix& Y,
                                         std::size_t n_train, std::size_t test_index) {
    if (test_index >= static_cast<std::size_t>(result.X_test.cols())) {
        throw std::invalid_argument("decomposition_panels: test index out of range");
    }
    const auto j = static_cast<Eigen::Index>(test_index);
    const auto col = static_cast<Eigen::Index>(n_train) + j;
    DecompositionPanels p;
    p.original = Y.col(col);
    const Vector code = result.X_test.col(j);
    Eigen::Index best = 0;
    code.cwiseAbs().maxCoeff(&best);
    p.atom = result.D.col(best);
    p.reconstruction = result.D * code;
    p.error = result.E.col(col);
    return p;
}

Image to_display(const Vector& v, int height, int width, double v_max) {
    const double lo = v.minCoeff();
    const double hi = v.maxCoeff();
    Vector scaled = (hi > lo) ? Vector(((v.array() - lo) / (hi - lo) * v_max).matrix())
                              : Vector::Constant(v.size(), v_max / 2.0);
    return unvectorize(scaled, height, width, v_max);
}

Image error_to_display(const Vector& e, int height, int width, double v_max) {
    const double peak = e.cwiseAbs().maxCoeff();
    Vector scaled = (peak > 0.0)
                        ? Vector(((e.array() / peak + 1.0) * (v_max / 2.0)).matrix())
                        : Vector::Constant(e.size(), v_max / 2.0);
    return unvectorize(scaled, height, width, v_max);
}

std::vector<fs::path> dump_decomposition(const SolveResult& result, const Matrix& Y,
                                         std::size_t n_train, int height, int width,
                                         double v_max, std::size_t k, const fs::path& out_dir) {
    if (k > static_cast<std::size_t>(result.X_test.cols())) {
        throw std::invalid_argument("dump_decomposition: k exceeds the number of test columns");
    }
    std::vector<fs::path> written;
    if (k == 0) return written;
    fs::create_directories(out_dir);
    for (std::size_t j = 0; j < k; ++j) {
        const DecompositionPanels p = decomposition_panels(result, Y, n_train, j);
        const std::string stem = "test" + std::to_string(j) + "_";
        const std::pair<std::string, Image> panels[] = {
            {"original", to_display(p.original, height, width, v_max)},
            {"atom", to_display(p.atom, height, width, v_max)},
            {"reconstruction", to_display(p.reconstruction, height, width, v_max)},
            {"error", error_to_display(p.error, height, width, v_max)},
        };
        for (const auto& [name, img] : panels) {
            const fs::path path = out_dir / (stem + name + ".pgm");
            write_pgm(path, img);
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace lrrid
