#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace lrrid {

/// Grayscale raster, row-major storage, intensities in [0, v_max].
struct Image {
    int height = 0;
    int width = 0;
    double v_max = 255.0;
    std::vector<double> pixels;

    Image() = default;
    Image(int h, int w, double vmax = 255.0, double fill = 0.0)
        : height(h), width(w), v_max(vmax),
          pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    double& at(int row, int col) {
        return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(col)];
    }
    double at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(col)];
    }
    std::size_t size() const { return pixels.size(); }

    bool operator==(const Image&) const = default;
};

/// Reads binary (P5, 8 or 16 bit) or ASCII (P2) PGM. Throws IoError naming
/// the file on any failure.
Image read_pgm(const std::filesystem::path& path);

/// Writes 8-bit binary PGM; pixels are rescaled from [0, v_max] to [0, 255]
/// and clamped.
void write_pgm(const std::filesystem::path& path, const Image& image);

/// Nearest-neighbour resampling to an arbitrary size.
Image resample_nearest(const Image& src, int height, int width);

}  // namespace lrrid
