#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lrrid/classifier.hpp"
#include "lrrid/image.hpp"
#include "lrrid/matrix_prox.hpp"

namespace lrrid {

enum class Layout { orl, extended_yale_b, ar };

enum class Condition { unknown, unobscured, sunglasses, scarf };

/// Acquisition tags. Only AR images carry session and condition.
struct ImageTag {
    int session = 0;  // 1 or 2 for AR, 0 otherwise
    Condition condition = Condition::unknown;
    int index = 0;  // AR image number 1..26, 0 otherwise

    bool operator==(const ImageTag&) const = default;
};

struct ImageSet {
    std::vector<Image> images;
    std::vector<int> labels;
    std::vector<ImageTag> tags;
    std::vector<std::string> sources;  // file names, empty for generated images
    int num_classes = 0;

    std::size_t size() const { return images.size(); }

    /// Appends image i of `other`.
    void push_from(const ImageSet& other, std::size_t i);

    /// Throws std::invalid_argument if images disagree in size, labels fall
    /// outside [0, num_classes) or the parallel vectors differ in length.
    void validate() const;
};

/// Reads one subdirectory per subject (sorted naturally, e.g. s2 before
/// s10) holding .pgm files.
///   orl             40 subjects x 10 images
///   extended_yale_b 38 subjects, 59..64 images each
///   ar              26 images per subject named <anything>-NN.pgm, NN in
///                   01..26: 01-13 session 1, 14-26 session 2; within a
///                   session 1-7 unobscured, 8-10 sunglasses, 11-13 scarf
/// Throws IngestionError listing offending subjects or naming the bad file.
ImageSet load_dataset(const std::filesystem::path& root, Layout layout);

Layout parse_layout(const std::string& name);
std::string to_string(Layout layout);

struct Identity {};
/// Centered crop.
struct Crop {
    int height = 0;
    int width = 0;
};
/// Mean pooling over factor x factor blocks; partial blocks at the bottom
/// and right edges are dropped.
struct Downsample {
    int factor = 1;
};
/// Mean pooling over the source rows/columns that map to each target pixel.
struct DownsampleTo {
    int height = 0;
    int width = 0;
};
using PreprocessTarget = std::variant<Identity, Crop, Downsample, DownsampleTo>;

/// Throws std::invalid_argument if the target exceeds the source size.
ImageSet preprocess(const ImageSet& set, const PreprocessTarget& target);
Image preprocess(const Image& image, const PreprocessTarget& target);

struct NoCorruption {};
/// Square patch covering `fraction` of the image area cut from `occluder`.
struct BlockOcclusion {
    double fraction = 0.0;
    Image occluder;
};
/// `fraction` of pixel positions replaced by draws from U[0, v_max]. A
/// non-positive v_max means "use each image's own v_max".
struct UniformNoise {
    double fraction = 0.0;
    double v_max = 0.0;
};
using CorruptionKind = std::variant<NoCorruption, BlockOcclusion, UniformNoise>;

struct CorruptionSpec {
    CorruptionKind kind = NoCorruption{};
    std::uint64_t seed = 0;
};

/// Side of the square occluding patch: round(sqrt(fraction * h * w)),
/// clamped to min(h, w).
int occlusion_side(double fraction, int height, int width);

/// Number of noisy pixels: round(fraction * h * w).
std::size_t noisy_pixel_count(double fraction, int height, int width);

/// Applies the corruption independently to every image; deterministic for a
/// given seed. Throws std::invalid_argument for fractions outside [0, 1].
ImageSet corrupt(const ImageSet& set, const CorruptionSpec& spec);

/// Deterministic 96x96 textured grayscale image used when no occluder file
/// is configured.
Image default_occluder();

struct SplitSpec {
    std::size_t train_per_class = 0;
    std::optional<std::size_t> test_per_class;  // nullopt: every remaining image
    std::uint64_t seed = 0;
    int trial = 0;
};

/// Per-class uniform selection without replacement. Throws
/// std::invalid_argument when a class has too few images or a test split
/// would be empty.
std::pair<ImageSet, ImageSet> split(const ImageSet& set, const SplitSpec& spec);

enum class ArScenario { sunglasses, scarf, mixed, uniform_noise };

ArScenario parse_ar_scenario(const std::string& name);
std::string to_string(ArScenario scenario);

/// AR session rules. sunglasses/scarf: session-1 unobscured plus one random
/// session-1 image of the disguise train; session-2 unobscured plus the
/// other disguise images of that kind test. mixed: one random session-1
/// sunglasses and scarf image join the training set, the other 17 test.
/// uniform_noise: session-1 unobscured train, session-2 unobscured test.
std::pair<ImageSet, ImageSet> ar_split(const ImageSet& set, ArScenario scenario,
                                       std::uint64_t seed);

struct Vectorized {
    Matrix Y;                              // d x n
    LabelMatrix H;                         // C x n
    std::vector<std::size_t> zero_columns; // columns left unnormalized
};

/// Flattens each image column-major (pixel (r, c) goes to row c * h + r) and
/// optionally scales each nonzero column to unit l2 norm.
Vectorized vectorize(const ImageSet& set, bool normalize = true);

/// Inverse of the flattening in vectorize.
Image unvectorize(const Vector& column, int height, int width, double v_max);

/// atoms_per_class random training columns per class, concatenated by class
/// and projected onto the unit ball. Throws std::invalid_argument if a class
/// has fewer columns than atoms_per_class.
Matrix init_dictionary(const Matrix& train, const LabelMatrix& labels,
                       std::size_t atoms_per_class, std::uint64_t seed);

}  // namespace lrrid
