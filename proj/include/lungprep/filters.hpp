#pragma once

#include "lungprep/image.hpp"

#include <vector>

namespace lungprep {

// Odd-sized dense kernel, row-major.
class Kernel2D {
public:
    Kernel2D(int width, int height, std::vector<double> weights);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] double at(int row, int col) const {
        return weights_[static_cast<std::size_t>(row) * width_ + col];
    }
    [[nodiscard]] double sum() const;
    [[nodiscard]] Kernel2D transposed() const;

private:
    int width_;
    int height_;
    std::vector<double> weights_;
};

// True convolution (kernel flipped) with replicate border padding.
FloatImage convolve2d(const FloatImage& img, const Kernel2D& kernel);

// 4-neighbour discrete Laplacian [0 1 0; 1 -4 1; 0 1 0].
FloatImage laplacian(const FloatImage& img);

// clamp(f - laplacian(f), 0, 1).
FloatImage sharpen(const FloatImage& img);

// k x k median with replicate padding; k odd and >= 1.
FloatImage median_filter(const FloatImage& img, int k = 3);

// Normalized 1-D Gaussian taps over [-ceil(3 sigma), +ceil(3 sigma)].
std::vector<double> gaussian_kernel_1d(double sigma);

// Separable Gaussian smoothing with replicate borders; sigma > 0.
FloatImage gaussian_smooth(const FloatImage& img, double sigma = 1.0);

// sqrt(Gx^2 + Gy^2), Gx from [-1 0 1; -2 0 2; -1 0 1], Gy its transpose.
FloatImage sobel_magnitude(const FloatImage& img);

Kernel2D laplacian_kernel();
Kernel2D sobel_x_kernel();

}  // namespace lungprep
