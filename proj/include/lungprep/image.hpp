#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lungprep {

// Integer grayscale raster, row-major. bit_depth is 8 or 16.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, int bit_depth, std::vector<std::uint16_t> samples);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int bit_depth() const { return bit_depth_; }
    [[nodiscard]] std::uint32_t max_representable() const { return (1u << bit_depth_) - 1u; }
    [[nodiscard]] std::span<const std::uint16_t> samples() const { return samples_; }
    [[nodiscard]] std::uint16_t at(int row, int col) const {
        return samples_[static_cast<std::size_t>(row) * width_ + col];
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int bit_depth_ = 8;
    std::vector<std::uint16_t> samples_;
};

// Real-valued raster, row-major. Samples are finite; nominally in [0, 1].
class FloatImage {
public:
    FloatImage() = default;
    FloatImage(int width, int height, double fill = 0.0);
    FloatImage(int width, int height, std::vector<double> samples);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] std::size_t size() const { return samples_.size(); }
    [[nodiscard]] std::span<const double> samples() const { return samples_; }
    [[nodiscard]] std::span<double> samples() { return samples_; }
    [[nodiscard]] double at(int row, int col) const {
        return samples_[static_cast<std::size_t>(row) * width_ + col];
    }
    double& at(int row, int col) { return samples_[static_cast<std::size_t>(row) * width_ + col]; }

    friend bool operator==(const FloatImage&, const FloatImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> samples_;
};

// Boolean raster, row-major. Stored one byte per pixel.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);
    BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] std::size_t size() const { return bits_.size(); }
    [[nodiscard]] bool at(int row, int col) const {
        return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
    }
    void set(int row, int col, bool value) {
        bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
    }
    [[nodiscard]] std::span<const std::uint8_t> bits() const { return bits_; }
    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool empty_foreground() const { return count() == 0; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Axis-aligned rectangle in 0-based pixel coordinates.
struct Rect {
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;

    [[nodiscard]] int bottom() const { return top + height - 1; }
    [[nodiscard]] int right() const { return left + width - 1; }
    [[nodiscard]] bool contains(int row, int col) const {
        return row >= top && row <= bottom() && col >= left && col <= right();
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

enum class Rotation { Deg90 = 90, Deg180 = 180, Deg270 = 270 };

struct AugmentSpec {
    bool horizontal_flip = false;
    std::vector<Rotation> rotations;  // no duplicates
};

struct Normalized {
    FloatImage image;
    bool all_zero = false;  // input maximum was 0; output is all zeros
};

// Divides every sample by the image maximum.
Normalized normalize_max(const GrayImage& img);

// round(clamp(x, 0, 1) * 255), ties away from zero.
GrayImage to_u8(const FloatImage& img);

// 8-bit samples divided by 255; 16-bit by 65535.
FloatImage to_float(const GrayImage& img);

// Pixel-center aligned bilinear resampling (source coordinate
// (i + 0.5) * in / out - 0.5, clamped to the valid range).
FloatImage resize_bilinear(const FloatImage& img, int out_w, int out_h);

// Nearest-neighbour resampling using the same coordinate mapping.
BinaryMask resize_nearest_mask(const BinaryMask& mask, int out_w, int out_h);

// Returns the original first, then the flipped image (if enabled), then one
// image per rotation in spec order. Rotations are clockwise.
std::vector<GrayImage> augment(const GrayImage& img, const AugmentSpec& spec);

GrayImage flip_horizontal(const GrayImage& img);
GrayImage rotate(const GrayImage& img, Rotation rotation);

FloatImage crop(const FloatImage& img, const Rect& rect);
BinaryMask crop(const BinaryMask& mask, const Rect& rect);

// 0 / 255 8-bit rendering of a mask.
GrayImage mask_to_gray(const BinaryMask& mask);

}  // namespace lungprep
