#include "lrrid/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lrrid/errors.hpp"
#include "lrrid/rng.hpp"

namespace fs = std::filesystem;

namespace lrrid {

namespace {

// Orders embedded digit runs numerically: "s2" < "s10".
bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (std::isdigit(static_cast<unsigned char>(a[i])) &&
            std::isdigit(static_cast<unsigned char>(b[j]))) {
            std::size_t ie = i;
            std::size_t je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            const std::string da = a.substr(i, ie - i);
            const std::string db = b.substr(j, je - j);
            const auto na = da.find_first_not_of('0');
            const auto nb = db.find_first_not_of('0');
            const std::string ta = na == std::string::npos ? "" : da.substr(na);
            const std::string tb = nb == std::string::npos ? "" : db.substr(nb);
            if (ta.size() != tb.size()) return ta.size() < tb.size();
            if (ta != tb) return ta < tb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() - i < b.size() - j;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool want_dirs) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (want_dirs && entry.is_directory()) {
            out.push_back(entry.path());
        } else if (!want_dirs && entry.is_regular_file()) {
            auto ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (ext == ".pgm") out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return natural_less(a.filename().string(), b.filename().string());
    });
    return out;
}

// AR image number from "<anything>-NN.pgm"; 0 if the pattern does not match.
int ar_image_number(const fs::path& file) {
    const std::string stem = file.stem().string();
    const auto dash = stem.rfind('-');
    if (dash == std::string::npos || dash + 1 >= stem.size()) return 0;
    const std::string digits = stem.substr(dash + 1);
    if (!std::all_of(digits.begin(), digits.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
        return 0;
    }
    const int n = std::stoi(digits);
    return (n >= 1 && n <= 26) ? n : 0;
}

ImageTag ar_tag(int number) {
    ImageTag tag;
    tag.index = number;
    tag.session = number <= 13 ? 1 : 2;
    const int pos = (number - 1) % 13 + 1;
    tag.condition = pos <= 7   ? Condition::unobscured
                    : pos <= 10 ? Condition::sunglasses
                                : Condition::scarf;
    return tag;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

Image pool_blocks(const Image& src, int out_h, int out_w, auto&& row_range,
                  auto&& col_range) {
    Image out(out_h, out_w, src.v_max);
    for (int r = 0; r < out_h; ++r) {
        const auto [r0, r1] = row_range(r);
        for (int c = 0; c < out_w; ++c) {
            const auto [c0, c1] = col_range(c);
            double sum = 0.0;
            for (int y = r0; y < r1; ++y) {
                for (int x = c0; x < c1; ++x) sum += src.at(y, x);
            }
            out.at(r, c) = sum / static_cast<double>((r1 - r0) * (c1 - c0));
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> indices_by_class(const std::vector<int>& labels,
                                                       int num_classes) {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    return out;
}

}  // namespace

void ImageSet::push_from(const ImageSet& other, std::size_t i) {
    images.push_back(other.images[i]);
    labels.push_back(other.labels[i]);
    tags.push_back(other.tags[i]);
    sources.push_back(other.sources[i]);
}

void ImageSet::validate() const {
    if (labels.size() != images.size() || tags.size() != images.size() ||
        sources.size() != images.size()) {
        throw std::invalid_argument("ImageSet: parallel vectors differ in length");
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].height != images.front().height ||
            images[i].width != images.front().width) {
            throw std::invalid_argument("ImageSet: images differ in size");
        }
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw std::invalid_argument("ImageSet: label outside [0, num_classes)");
        }
    }
}

Layout parse_layout(const std::string& name) {
    if (name == "orl") return Layout::orl;
    if (name == "extended_yale_b") return Layout::extended_yale_b;
    if (name == "ar") return Layout::ar;
    throw std::invalid_argument("unknown dataset layout: " + name);
}

std::string to_string(Layout layout) {
    switch (layout) {
        case Layout::orl: return "orl";
        case Layout::extended_yale_b: return "extended_yale_b";
        case Layout::ar: return "ar";
    }
    return "unknown";
}

ImageSet load_dataset(const fs::path& root, Layout layout) {
    if (!fs::is_directory(root)) {
        throw IngestionError("dataset root " + root.string() + " is not a directory");
    }
    const auto subjects = sorted_entries(root, /*want_dirs=*/true);
    if (subjects.empty()) {
        throw IngestionError("dataset root " + root.string() + " has no subject directories");
    }

    ImageSet set;
    set.num_classes = static_cast<int>(subjects.size());
    std::vector<std::string> offenders;

    for (std::size_t s = 0; s < subjects.size(); ++s) {
        const auto files = sorted_entries(subjects[s], /*want_dirs=*/false);
        const std::string name = subjects[s].filename().string();
        const auto count = files.size();

        switch (layout) {
            case Layout::orl:
                if (count != 10) {
                    offenders.push_back(name + " (" + std::to_string(count) + " images)");
                    continue;
                }
                break;
            case Layout::extended_yale_b:
                if (count < 59 || count > 64) {
                    offenders.push_back(name + " (" + std::to_string(count) + " images)");
                    continue;
                }
                break;
            case Layout::ar: {
                std::vector<int> seen(27, 0);
                for (const auto& f : files) seen[static_cast<std::size_t>(ar_image_number(f))]++;
                std::vector<std::string> missing;
                for (int k = 1; k <= 26; ++k) {
                    if (seen[static_cast<std::size_t>(k)] != 1) missing.push_back(std::to_string(k));
                }
                if (count != 26 || !missing.empty()) {
                    offenders.push_back(name + " (missing or duplicated tags: " +
                                        (missing.empty() ? "extra files" : join(missing)) + ")");
                    continue;
                }
                break;
            }
        }

        for (const auto& f : files) {
            Image img;
            try {
                img = read_pgm(f);
            } catch (const IoError& e) {
                throw IngestionError(std::string("unreadable image: ") + e.what());
            }
            set.images.push_back(std::move(img));
            set.labels.push_back(static_cast<int>(s));
            set.tags.push_back(layout == Layout::ar ? ar_tag(ar_image_number(f)) : ImageTag{});
            set.sources.push_back(f.string());
        }
    }

    if (layout == Layout::orl && subjects.size() != 40) {
        offenders.push_back("expected 40 subjects, found " + std::to_string(subjects.size()));
    }
    if (layout == Layout::extended_yale_b && subjects.size() != 38) {
        offenders.push_back("expected 38 subjects, found " + std::to_string(subjects.size()));
    }
    if (!offenders.empty()) {
        throw IngestionError(to_string(layout) + " layout violated by: " + join(offenders));
    }
    for (std::size_t i = 1; i < set.images.size(); ++i) {
        if (set.images[i].height != set.images[0].height ||
            set.images[i].width != set.images[0].width) {
            throw IngestionError("image " + set.sources[i] + " differs in size from " +
                                 set.sources[0]);
        }
    }
    return set;
}

Image preprocess(const Image& image, const PreprocessTarget& target) {
    const int h = image.height;
    const int w = image.width;
    return std::visit(
        [&](const auto& t) -> Image {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return image;
            } else if constexpr (std::is_same_v<T, Crop>) {
                if (t.height < 1 || t.width < 1 || t.height > h || t.width > w) {
                    throw std::invalid_argument("preprocess: crop exceeds image size");
                }
                const int top = (h - t.height) / 2;
                const int left = (w - t.width) / 2;
                Image out(t.height, t.width, image.v_max);
                for (int r = 0; r < t.height; ++r) {
                    for (int c = 0; c < t.width; ++c) out.at(r, c) = image.at(top + r, left + c);
                }
                return out;
            } else if constexpr (std::is_same_v<T, Downsample>) {
                const int f = t.factor;
                if (f < 1 || f > h || f > w) {
                    throw std::invalid_argument("preprocess: downsample factor out of range");
                }
                auto range = [f](int i) { return std::pair{i * f, (i + 1) * f}; };
                return pool_blocks(image, h / f, w / f, range, range);
            } else {
                if (t.height < 1 || t.width < 1 || t.height > h || t.width > w) {
                    throw std::invalid_argument("preprocess: target exceeds image size");
                }
                auto rows = [&](int i) {
                    return std::pair{i * h / t.height, (i + 1) * h / t.height};
                };
                auto cols = [&](int j) {
                    return std::pair{j * w / t.width, (j + 1) * w / t.width};
                };
                return pool_blocks(image, t.height, t.width, rows, cols);
            }
        },
        target);
}

ImageSet preprocess(const ImageSet& set, const PreprocessTarget& target) {
    ImageSet out = set;
    for (auto& img : out.images) img = preprocess(img, target);
    return out;
}

int occlusion_side(double fraction, int height, int width) {
    const double area = fraction * static_cast<double>(height) * static_cast<double>(width);
    const int side = static_cast<int>(std::lround(std::sqrt(area)));
    return std::clamp(side, 0, std::min(height, width));
}

std::size_t noisy_pixel_count(double fraction, int height, int width) {
    return static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(height) * static_cast<double>(width)));
}

Image default_occluder() {
    constexpr int kSide = 96;
    Image img(kSide, kSide, 255.0);
    Rng rng(0x0CC1'0DE5ULL);
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            const double x = static_cast<double>(c);
            const double y = static_cast<double>(r);
            const double v = 128.0 + 55.0 * std::sin(x / 4.0) * std::cos(y / 6.0) +
                             35.0 * std::sin((x + 2.0 * y) / 9.0) + 25.0 * rng.uniform(-1.0, 1.0);
            img.at(r, c) = std::clamp(std::round(v), 0.0, 255.0);
        }
    }
    return img;
}

ImageSet corrupt(const ImageSet& set, const CorruptionSpec& spec) {
    ImageSet out = set;
    Rng rng(spec.seed);
    std::visit(
        [&](const auto& kind) {
            using T = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<T, BlockOcclusion>) {
                if (!(kind.fraction >= 0.0 && kind.fraction <= 1.0)) {
                    throw std::invalid_argument("corrupt: occlusion fraction outside [0, 1]");
                }
                if (kind.occluder.size() == 0) {
                    throw std::invalid_argument("corrupt: empty occluder image");
                }
                for (auto& img : out.images) {
                    const int side = occlusion_side(kind.fraction, img.height, img.width);
                    if (side == 0) continue;
                    const Image patch = resample_nearest(kind.occluder, side, side);
                    const double scale =
                        kind.occluder.v_max > 0.0 ? img.v_max / kind.occluder.v_max : 0.0;
                    const int top = static_cast<int>(rng.below(
                        static_cast<std::uint64_t>(img.height - side + 1)));
                    const int left = static_cast<int>(rng.below(
                        static_cast<std::uint64_t>(img.width - side + 1)));
                    for (int r = 0; r < side; ++r) {
                        for (int c = 0; c < side; ++c) {
                            img.at(top + r, left + c) = patch.at(r, c) * scale;
                        }
                    }
                }
            } else if constexpr (std::is_same_v<T, UniformNoise>) {
                if (!(kind.fraction >= 0.0 && kind.fraction <= 1.0)) {
                    throw std::invalid_argument("corrupt: noise fraction outside [0, 1]");
                }
                for (auto& img : out.images) {
                    const double vmax = kind.v_max > 0.0 ? kind.v_max : img.v_max;
                    const auto k = noisy_pixel_count(kind.fraction, img.height, img.width);
                    for (std::size_t pos : rng.sample_without_replacement(img.size(), k)) {
                        img.pixels[pos] = rng.uniform(0.0, vmax);
                    }
                }
            }
        },
        spec.kind);
    return out;
}

std::pair<ImageSet, ImageSet> split(const ImageSet& set, const SplitSpec& spec) {
    set.validate();
    ImageSet train;
    ImageSet test;
    train.num_classes = test.num_classes = set.num_classes;
    Rng rng(spec.seed);
    const auto by_class = indices_by_class(set.labels, set.num_classes);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        const auto& members = by_class[c];
        const std::size_t available = members.size();
        if (spec.train_per_class > available) {
            throw std::invalid_argument("split: class " + std::to_string(c) + " has only " +
                                        std::to_string(available) + " images");
        }
        const std::size_t n_test =
            spec.test_per_class.value_or(available - spec.train_per_class);
        if (n_test == 0) {
            throw std::invalid_argument("split: class " + std::to_string(c) +
                                        " would have an empty test set");
        }
        if (spec.train_per_class + n_test > available) {
            throw std::invalid_argument("split: class " + std::to_string(c) + " has only " +
                                        std::to_string(available) + " images");
        }
        const auto picked =
            rng.sample_without_replacement(available, spec.train_per_class + n_test);
        for (std::size_t k = 0; k < picked.size(); ++k) {
            (k < spec.train_per_class ? train : test).push_from(set, members[picked[k]]);
        }
    }
    return {std::move(train), std::move(test)};
}

ArScenario parse_ar_scenario(const std::string& name) {
    if (name == "sunglasses") return ArScenario::sunglasses;
    if (name == "scarf") return ArScenario::scarf;
    if (name == "mixed") return ArScenario::mixed;
    if (name == "uniform_noise") return ArScenario::uniform_noise;
    throw std::invalid_argument("unknown AR scenario: " + name);
}

std::string to_string(ArScenario scenario) {
    switch (scenario) {
        case ArScenario::sunglasses: return "sunglasses";
        case ArScenario::scarf: return "scarf";
        case ArScenario::mixed: return "mixed";
        case ArScenario::uniform_noise: return "uniform_noise";
    }
    return "unknown";
}

std::pair<ImageSet, ImageSet> ar_split(const ImageSet& set, ArScenario scenario,
                                       std::uint64_t seed) {
    set.validate();
    ImageSet train;
    ImageSet test;
    train.num_classes = test.num_classes = set.num_classes;
    Rng rng(seed);
    const auto by_class = indices_by_class(set.labels, set.num_classes);

    for (std::size_t c = 0; c < by_class.size(); ++c) {
        std::map<std::pair<int, Condition>, std::vector<std::size_t>> groups;
        for (std::size_t i : by_class[c]) {
            const ImageTag& t = set.tags[i];
            if (t.session == 0 || t.condition == Condition::unknown) {
                throw std::invalid_argument("ar_split: image " + set.sources[i] +
                                            " lacks AR session/condition tags");
            }
            groups[{t.session, t.condition}].push_back(i);
        }
        auto group = [&](int session, Condition cond) -> const std::vector<std::size_t>& {
            const auto& g = groups[{session, cond}];
            if (g.empty()) {
                throw std::invalid_argument("ar_split: class " + std::to_string(c) +
                                            " has no images for a required session/condition");
            }
            return g;
        };
        // Picks one session-1 image of `cond` for training; returns its index.
        auto pick_one = [&](Condition cond) {
            const auto& g = group(1, cond);
            return g[static_cast<std::size_t>(rng.below(g.size()))];
        };

        for (std::size_t i : group(1, Condition::unobscured)) train.push_from(set, i);

        std::vector<std::size_t> chosen;
        std::vector<Condition> disguises;
        switch (scenario) {
            case ArScenario::sunglasses: disguises = {Condition::sunglasses}; break;
            case ArScenario::scarf: disguises = {Condition::scarf}; break;
            case ArScenario::mixed: disguises = {Condition::sunglasses, Condition::scarf}; break;
            case ArScenario::uniform_noise: break;
        }
        for (Condition cond : disguises) {
            const std::size_t i = pick_one(cond);
            chosen.push_back(i);
            train.push_from(set, i);
        }

        for (std::size_t i : group(2, Condition::unobscured)) test.push_from(set, i);
        for (Condition cond : disguises) {
            for (int session : {1, 2}) {
                for (std::size_t i : group(session, cond)) {
                    if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
                        test.push_from(set, i);
                    }
                }
            }
        }
    }
    return {std::move(train), std::move(test)};
}

Vectorized vectorize(const ImageSet& set, bool normalize) {
    set.validate();
    Vectorized out;
    if (set.images.empty()) {
        out.Y = Matrix::Zero(0, 0);
        out.H = LabelMatrix(set.labels, std::max(1, set.num_classes));
        return out;
    }
    const int h = set.images.front().height;
    const int w = set.images.front().width;
    out.Y.resize(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(set.size()));
    for (std::size_t j = 0; j < set.size(); ++j) {
        const Image& img = set.images[j];
        const auto col = static_cast<Eigen::Index>(j);
        for (int c = 0; c < w; ++c) {
            for (int r = 0; r < h; ++r) {
                out.Y(static_cast<Eigen::Index>(c) * h + r, col) = img.at(r, c);
            }
        }
        if (normalize) {
            const double norm = out.Y.col(col).norm();
            if (norm > 0.0) {
                out.Y.col(col) /= norm;
            } else {
                out.zero_columns.push_back(j);
            }
        }
    }
    out.H = LabelMatrix(set.labels, set.num_classes);
    return out;
}

Image unvectorize(const Vector& column, int height, int width, double v_max) {
    if (column.size() != static_cast<Eigen::Index>(height) * width) {
        throw std::invalid_argument("unvectorize: column length does not match image size");
    }
    Image img(height, width, v_max);
    for (int c = 0; c < width; ++c) {
        for (int r = 0; r < height; ++r) {
            img.at(r, c) = column(static_cast<Eigen::Index>(c) * height + r);
        }
    }
    return img;
}

Matrix init_dictionary(const Matrix& train, const LabelMatrix& labels,
                       std::size_t atoms_per_class, std::uint64_t seed) {
    if (static_cast<std::size_t>(train.cols()) != labels.size()) {
        throw std::invalid_argument("init_dictionary: label count differs from column count");
    }
    if (atoms_per_class == 0) {
        throw std::invalid_argument("init_dictionary: atoms_per_class must be positive");
    }
    const auto by_class = indices_by_class(labels.labels(), labels.num_classes());
    Rng rng(seed);
    Matrix D(train.rows(),
             static_cast<Eigen::Index>(atoms_per_class * by_class.size()));
    Eigen::Index next = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        const auto& members = by_class[c];
        if (members.size() < atoms_per_class) {
            throw std::invalid_argument(
                "init_dictionary: class " + std::to_string(c) + " has " +
                std::to_string(members.size()) + " training columns, fewer than " +
                std::to_string(atoms_per_class) + " atoms");
        }
        for (std::size_t k : rng.sample_without_replacement(members.size(), atoms_per_class)) {
            D.col(next++) = train.col(static_cast<Eigen::Index>(members[k]));
        }
    }
    return project_columns_unit_ball(D);
}

}  // namespace lrrid
