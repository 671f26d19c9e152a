#include "lrrid/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "lrrid/errors.hpp"

namespace lrrid {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
    throw IoError("pgm " + path.string() + ": " + why);
}

// Next header token, skipping whitespace and '#' comments.
long read_header_int(std::istream& in, const std::filesystem::path& path) {
    int ch = in.get();
    while (in) {
        if (ch == '#') {
            while (in && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    if (!in || !std::isdigit(ch)) fail(path, "malformed header");
    long value = 0;
    while (in && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        if (value > 1'000'000) fail(path, "header value out of range");
        ch = in.get();
    }
    return value;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) {
        fail(path, "not a P2/P5 PGM file");
    }
    const long width = read_header_int(in, path);
    const long height = read_header_int(in, path);
    const long maxval = read_header_int(in, path);
    if (width <= 0 || height <= 0) fail(path, "zero image dimension");
    if (maxval <= 0 || maxval > 65535) fail(path, "invalid maxval");

    Image img(static_cast<int>(height), static_cast<int>(width), static_cast<double>(maxval));
    if (magic[1] == '5') {
        const bool wide = maxval > 255;
        for (auto& p : img.pixels) {
            int hi = in.get();
            int value = hi;
            if (wide) value = (hi << 8) | in.get();
            if (!in) fail(path, "truncated pixel data");
            p = static_cast<double>(value);
        }
    } else {
        for (auto& p : img.pixels) {
            long value = 0;
            if (!(in >> value)) fail(path, "truncated pixel data");
            p = static_cast<double>(value);
        }
    }
    for (double p : img.pixels) {
        if (p > static_cast<double>(maxval)) fail(path, "pixel exceeds maxval");
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    const double scale = image.v_max > 0.0 ? 255.0 / image.v_max : 0.0;
    for (double p : image.pixels) {
        const double v = std::clamp(std::round(p * scale), 0.0, 255.0);
        out.put(static_cast<char>(static_cast<unsigned char>(v)));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Image resample_nearest(const Image& src, int height, int width) {
    Image out(height, width, src.v_max);
    for (int r = 0; r < height; ++r) {
        const int sr = std::min(src.height - 1, r * src.height / std::max(1, height));
        for (int c = 0; c < width; ++c) {
            const int sc = std::min(src.width - 1, c * src.width / std::max(1, width));
            out.at(r, c) = src.at(sr, sc);
        }
    }
    return out;
}

}  // namespace lrrid
