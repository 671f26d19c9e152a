#pragma once

// Small on-disk datasets that follow the documented layouts.

#include <filesystem>
#include <random>
#include <string>

#include "lrrid/image.hpp"

namespace lrrid::testing {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("lrrid_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Subject s gets a distinct mean intensity so classes are separable.
inline Image subject_image(int subject, int k, int height, int width, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> jitter(-10.0, 10.0);
    Image img(height, width, 255.0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double base = 40.0 + 4.0 * subject + 30.0 * ((r * 7 + c * 3 + subject * 5 + k) % 4);
            img.at(r, c) = std::clamp(std::round(base + jitter(gen)), 0.0, 255.0);
        }
    }
    return img;
}

inline void write_subjects(const std::filesystem::path& root, int subjects, int per_subject,
                           int height, int width, std::uint64_t seed = 1) {
    std::mt19937_64 gen(seed);
    for (int s = 0; s < subjects; ++s) {
        const auto dir = root / ("s" + std::to_string(s + 1));
        std::filesystem::create_directories(dir);
        for (int k = 0; k < per_subject; ++k) {
            write_pgm(dir / (std::to_string(k + 1) + ".pgm"), subject_image(s, k, height, width, gen));
        }
    }
}

inline void write_ar(const std::filesystem::path& root, int subjects, int height, int width,
                     std::uint64_t seed = 1) {
    std::mt19937_64 gen(seed);
    for (int s = 0; s < subjects; ++s) {
        char name[16];
        std::snprintf(name, sizeof name, "m-%03d", s + 1);
        const auto dir = root / name;
        std::filesystem::create_directories(dir);
        for (int k = 1; k <= 26; ++k) {
            char file[32];
            std::snprintf(file, sizeof file, "m-%03d-%02d.pgm", s + 1, k);
            write_pgm(dir / file, subject_image(s, k, height, width, gen));
        }
    }
}

}  // namespace lrrid::testing
