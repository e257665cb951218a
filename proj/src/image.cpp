#include "lungprep/image.hpp"

#include "lungprep/error.hpp"
#include "lungprep/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lungprep {

namespace {

void check_dims(int width, int height, std::size_t length, const char* what) {
    if (width < 1 || height < 1) {
        throw InputError(std::string(what) + ": dimensions must be positive");
    }
    if (length != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InputError(std::string(what) + ": sample count does not match width x height");
    }
}

// Maps output index i to a continuous source coordinate in [0, in - 1].
double source_coord(int i, int in, int out) {
    const double c = (i + 0.5) * in / out - 0.5;
    return std::clamp(c, 0.0, static_cast<double>(in - 1));
}

void check_output_dims(int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw InputError("resize: zero output dimension");
    }
}

void check_rect(int width, int height, const Rect& rect) {
    if (rect.height < 1 || rect.width < 1 || rect.top < 0 || rect.left < 0 ||
        rect.bottom() >= height || rect.right() >= width) {
        throw InputError("crop: rectangle outside image");
    }
}

}  // namespace

GrayImage::GrayImage(int width, int height, int bit_depth, std::vector<std::uint16_t> samples)
    : width_(width), height_(height), bit_depth_(bit_depth), samples_(std::move(samples)) {
    check_dims(width_, height_, samples_.size(), "GrayImage");
    if (bit_depth_ != 8 && bit_depth_ != 16) {
        throw InputError("GrayImage: bit depth must be 8 or 16");
    }
    const auto limit = max_representable();
    for (auto s : samples_) {
        if (s > limit) {
            throw InputError("GrayImage: sample exceeds bit depth");
        }
    }
}

FloatImage::FloatImage(int width, int height, double fill)
    : FloatImage(width, height,
                 std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                         static_cast<std::size_t>(std::max(height, 0)),
                                     fill)) {}

FloatImage::FloatImage(int width, int height, std::vector<double> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
    check_dims(width_, height_, samples_.size(), "FloatImage");
    for (double s : samples_) {
        if (!std::isfinite(s)) {
            throw InputError("FloatImage: non-finite sample");
        }
    }
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : BinaryMask(width, height,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                               static_cast<std::size_t>(std::max(height, 0)),
                                           fill ? 1 : 0)) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
    check_dims(width_, height_, bits_.size(), "BinaryMask");
    for (auto& b : bits_) {
        b = b != 0 ? 1 : 0;
    }
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Normalized normalize_max(const GrayImage& img) {
    const auto samples = img.samples();
    const auto peak = *std::max_element(samples.begin(), samples.end());
    std::vector<double> out(samples.size(), 0.0);
    if (peak == 0) {
        return {FloatImage(img.width(), img.height(), std::move(out)), true};
    }
    const double denom = peak;
    std::transform(samples.begin(), samples.end(), out.begin(),
                   [denom](std::uint16_t s) { return s / denom; });
    return {FloatImage(img.width(), img.height(), std::move(out)), false};
}

GrayImage to_u8(const FloatImage& img) {
    std::vector<std::uint16_t> out(img.size());
    std::transform(img.samples().begin(), img.samples().end(), out.begin(), [](double x) {
        return static_cast<std::uint16_t>(round_half_away(clamp01(x) * 255.0));
    });
    return GrayImage(img.width(), img.height(), 8, std::move(out));
}

FloatImage to_float(const GrayImage& img) {
    const double denom = img.max_representable();
    std::vector<double> out(img.samples().size());
    std::transform(img.samples().begin(), img.samples().end(), out.begin(),
                   [denom](std::uint16_t s) { return s / denom; });
    return FloatImage(img.width(), img.height(), std::move(out));
}

FloatImage resize_bilinear(const FloatImage& img, int out_w, int out_h) {
    check_output_dims(out_w, out_h);
    FloatImage out(out_w, out_h);
    std::vector<int> x0(out_w), x1(out_w);
    std::vector<double> fx(out_w);
    for (int c = 0; c < out_w; ++c) {
        const double sx = source_coord(c, img.width(), out_w);
        x0[c] = static_cast<int>(std::floor(sx));
        x1[c] = std::min(x0[c] + 1, img.width() - 1);
        fx[c] = sx - x0[c];
    }
    for (int r = 0; r < out_h; ++r) {
        const double sy = source_coord(r, img.height(), out_h);
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double fy = sy - y0;
        for (int c = 0; c < out_w; ++c) {
            const double top = img.at(y0, x0[c]) * (1.0 - fx[c]) + img.at(y0, x1[c]) * fx[c];
            const double bot = img.at(y1, x0[c]) * (1.0 - fx[c]) + img.at(y1, x1[c]) * fx[c];
            out.at(r, c) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

BinaryMask resize_nearest_mask(const BinaryMask& mask, int out_w, int out_h) {
    check_output_dims(out_w, out_h);
    BinaryMask out(out_w, out_h);
    for (int r = 0; r < out_h; ++r) {
        const int sr = static_cast<int>(round_half_away(source_coord(r, mask.height(), out_h)));
        for (int c = 0; c < out_w; ++c) {
            const int sc = static_cast<int>(round_half_away(source_coord(c, mask.width(), out_w)));
            out.set(r, c, mask.at(sr, sc));
        }
    }
    return out;
}

GrayImage flip_horizontal(const GrayImage& img) {
    std::vector<std::uint16_t> out;
    out.reserve(img.samples().size());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = img.width() - 1; c >= 0; --c) {
            out.push_back(img.at(r, c));
        }
    }
    return GrayImage(img.width(), img.height(), img.bit_depth(), std::move(out));
}

GrayImage rotate(const GrayImage& img, Rotation rotation) {
    const int w = img.width();
    const int h = img.height();
    const bool swaps = rotation != Rotation::Deg180;
    const int ow = swaps ? h : w;
    const int oh = swaps ? w : h;
    std::vector<std::uint16_t> out(img.samples().size());
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            std::uint16_t v = 0;
            switch (rotation) {
                case Rotation::Deg90: v = img.at(h - 1 - c, r); break;
                case Rotation::Deg180: v = img.at(h - 1 - r, w - 1 - c); break;
                case Rotation::Deg270: v = img.at(c, w - 1 - r); break;
            }
            out[static_cast<std::size_t>(r) * ow + c] = v;
        }
    }
    return GrayImage(ow, oh, img.bit_depth(), std::move(out));
}

std::vector<GrayImage> augment(const GrayImage& img, const AugmentSpec& spec) {
    for (std::size_t i = 0; i < spec.rotations.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.rotations.size(); ++j) {
            if (spec.rotations[i] == spec.rotations[j]) {
                throw InputError("augment: duplicate rotation");
            }
        }
    }
    std::vector<GrayImage> out{img};
    if (spec.horizontal_flip) {
        out.push_back(flip_horizontal(img));
    }
    for (auto rotation : spec.rotations) {
        out.push_back(rotate(img, rotation));
    }
    return out;
}

FloatImage crop(const FloatImage& img, const Rect& rect) {
    check_rect(img.width(), img.height(), rect);
    FloatImage out(rect.width, rect.height);
    for (int r = 0; r < rect.height; ++r) {
        for (int c = 0; c < rect.width; ++c) {
            out.at(r, c) = img.at(rect.top + r, rect.left + c);
        }
    }
    return out;
}

BinaryMask crop(const BinaryMask& mask, const Rect& rect) {
    check_rect(mask.width(), mask.height(), rect);
    BinaryMask out(rect.width, rect.height);
    for (int r = 0; r < rect.height; ++r) {
        for (int c = 0; c < rect.width; ++c) {
            out.set(r, c, mask.at(rect.top + r, rect.left + c));
        }
    }
    return out;
}

GrayImage mask_to_gray(const BinaryMask& mask) {
    std::vector<std::uint16_t> out(mask.size());
    std::transform(mask.bits().begin(), mask.bits().end(), out.begin(),
                   [](std::uint8_t b) { return static_cast<std::uint16_t>(b ? 255 : 0); });
    return GrayImage(mask.width(), mask.height(), 8, std::move(out));
}

}  // namespace lungprep
