#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lrrid/dataset.hpp"
#include "lrrid/solver.hpp"

namespace lrrid {

// Protocols. `level` values are fractions in [0, 1].
struct OrlOcclusion {
    double level = 0.0;
};
struct EyalebDim {
    int dim = 30;  // 30, 56 or 120
};
struct ArDisguise {
    ArScenario scenario = ArScenario::sunglasses;
};
struct ArUniformNoise {
    double level = 0.0;
};
/// Generated classes that need no dataset on disk.
struct Synthetic {
    int classes = 5;
    int height = 8;
    int width = 8;
    int images_per_class = 10;
    double noise = 0.05;  // uniform jitter amplitude relative to v_max
    double occlusion = 0.0;
};
using Protocol = std::variant<OrlOcclusion, EyalebDim, ArDisguise, ArUniformNoise, Synthetic>;

enum class Method { lrrid, lrrs };

std::string to_string(Method method);
Method parse_method(const std::string& name);

/// Protocol family name: "orl_occlusion", "eyaleb_dim", ...
std::string protocol_kind(const Protocol& protocol);

/// Column label of the protocol's sweep axis: "20" for 20% occlusion,
/// "56" for 56 features, "sunglasses", ...
std::string protocol_level_label(const Protocol& protocol);

/// Numeric sweep coordinate (percent for occlusion/noise, feature count for
/// Extended Yale B); nullopt for categorical protocols.
std::optional<double> protocol_level_value(const Protocol& protocol);

struct DatasetSpec {
    std::filesystem::path path;
    Layout layout = Layout::orl;
    PreprocessTarget preprocess = Identity{};
};

struct ExperimentConfig {
    DatasetSpec dataset;
    Protocol protocol = Synthetic{};
    Method method = Method::lrrid;
    Hyperparams hyperparams;
    std::size_t atoms_per_class = 5;
    std::size_t train_per_class = 5;
    std::optional<std::size_t> test_per_class;  // nullopt: remaining images
    double eta_ridge = 1.0;
    int trials = 10;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "lrrid_out";
    std::filesystem::path occluder;  // empty: built-in texture
    bool normalize_columns = true;
    bool corrupt_before_preprocess = true;
    bool write_traces = false;
    int jobs = 1;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// Settings used for a protocol when the config file does not override
/// them: hyperparameters, atoms, split sizes and preprocessing.
ExperimentConfig preset(const Protocol& protocol);

struct TrialReport {
    int trial = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    int iterations = 0;
    bool converged = false;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct Summary {
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;  // sample standard deviation, 0 for one trial
    int completed = 0;
    int failed = 0;
};

struct ExperimentResult {
    std::vector<TrialReport> trials;      // sorted by trial index
    std::vector<ClassifierModel> models;  // parallel to trials; empty W if failed
    Summary summary;
};

/// Everything produced by one trial, kept for decomposition dumps.
struct TrialArtifacts {
    Matrix Y;             // [train, test] columns
    std::size_t n_train = 0;
    std::vector<int> test_labels;
    SolveResult solve;
    ClassifierModel model;
    std::vector<int> predicted;
    int height = 0;
    int width = 0;
    double v_max = 255.0;
};

/// Same protocol family with its sweep coordinate replaced. `level` is a
/// fraction for occlusion/noise, a feature count for Extended Yale B and a
/// scenario name for AR disguise.
Protocol protocol_at(const Protocol& base, const std::string& level);

/// Seed of trial i: base seed + i.
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

/// Loads (or generates) the images for a configuration once.
ImageSet load_images(const ExperimentConfig& config);

/// split -> corrupt -> preprocess (order configurable) -> vectorize ->
/// dictionary -> solve -> fit -> predict for one trial.
TrialArtifacts run_trial(const ExperimentConfig& config, const ImageSet& images, int trial,
                         std::ostream* trace = nullptr);

/// Runs config.trials trials. A numerical failure in one trial is recorded
/// in its report and excluded from the summary. With write_traces set, the
/// per-iteration trace of trial i goes to output_dir/trace_trial<i>.csv.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const ImageSet& images);

Summary summarize(const std::vector<TrialReport>& trials);

/// Writes trials.csv, summary.csv, summary.txt and timings.txt into
/// config.output_dir (created if missing).
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result);

// Tables -------------------------------------------------------------------

struct TableCell {
    std::string method;
    std::string level;
    double mean_accuracy = 0.0;  // fraction in [0, 1]
};

enum class TableFormat { csv, aligned_text };

/// One row per method, one column per level (in first-seen order), mean
/// accuracy in percent with two decimals. Missing cells are left empty.
/// Throws std::invalid_argument for an empty cell list.
void emit_table(std::ostream& out, const std::string& axis_name,
                const std::vector<TableCell>& cells, TableFormat format);
void emit_table(const std::filesystem::path& path, const std::string& axis_name,
                const std::vector<TableCell>& cells, TableFormat format);

/// Reads back a CSV produced by emit_table; accuracies return as fractions.
std::vector<TableCell> parse_table_csv(std::istream& in);

struct CurvePoint {
    double level = 0.0;  // fraction in [0, 1]
    double mean_accuracy = 0.0;
};

/// "level,mean_accuracy" rows in percent, sorted by ascending level.
/// Throws std::invalid_argument with fewer than two points.
void plot_noise_curve(std::ostream& out, std::vector<CurvePoint> points);
void plot_noise_curve(const std::filesystem::path& path, std::vector<CurvePoint> points);

/// Percent with two decimals, as printed in tables.
std::string format_percent(double fraction);

// Decomposition dumps --------------------------------------------------------

/// Unscaled pixel vectors for one test column.
struct DecompositionPanels {
    Vector original;        // Y column
    Vector atom;            // dictionary atom with the largest |coefficient|
    Vector reconstruction;  // D x
    Vector error;           // E column
};

DecompositionPanels decomposition_panels(const SolveResult& result, const Matrix& Y,
                                         std::size_t n_train, std::size_t test_index);

/// Min-max rescale to [0, v_max]; a constant vector maps to v_max / 2.
Image to_display(const Vector& v, int height, int width, double v_max);

/// Symmetric rescale about zero: 0 -> v_max / 2, max |e| -> 0 or v_max.
Image error_to_display(const Vector& e, int height, int width, double v_max);

/// Writes test<j>_{original,atom,reconstruction,error}.pgm for the first k
/// test columns. Returns the paths written. Throws std::invalid_argument
/// if k exceeds the test count.
std::vector<std::filesystem::path> dump_decomposition(const SolveResult& result,
                                                      const Matrix& Y, std::size_t n_train,
                                                      int height, int width, double v_max,
                                                      std::size_t k,
                                                      const std::filesystem::path& out_dir);

}  // namespace lrrid
