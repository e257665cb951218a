#include "lungprep/filters.hpp"

#include "lungprep/error.hpp"
#include "lungprep/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lungprep {

namespace {

int clamp_index(int i, int n) {
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

// out(r, c) = sum_{i,j} k(i, j) * f(r + cy - i, c + cx - j), the flipped
// kernel. Interior pixels skip the clamping; the summation order is the same
// on both paths so results are bit-identical to a naive loop.
void convolve_rows(const FloatImage& img, const Kernel2D& k, FloatImage& out, int r) {
    const int w = img.width();
    const int h = img.height();
    const int cy = k.height() / 2;
    const int cx = k.width() / 2;
    const bool row_interior = r - cy >= 0 && r + cy < h;
    for (int c = 0; c < w; ++c) {
        const bool interior = row_interior && c - cx >= 0 && c + cx < w;
        double acc = 0.0;
        for (int i = 0; i < k.height(); ++i) {
            const int sr = interior ? r + cy - i : clamp_index(r + cy - i, h);
            for (int j = 0; j < k.width(); ++j) {
                const int sc = interior ? c + cx - j : clamp_index(c + cx - j, w);
                acc += k.at(i, j) * img.at(sr, sc);
            }
        }
        out.at(r, c) = acc;
    }
}

}  // namespace

Kernel2D::Kernel2D(int width, int height, std::vector<double> weights)
    : width_(width), height_(height), weights_(std::move(weights)) {
    if (width_ < 1 || height_ < 1 || width_ % 2 == 0 || height_ % 2 == 0) {
        throw InputError("Kernel2D: dimensions must be odd and positive");
    }
    if (weights_.size() != static_cast<std::size_t>(width_) * height_) {
        throw InputError("Kernel2D: weight count does not match dimensions");
    }
    for (double v : weights_) {
        if (!std::isfinite(v)) throw InputError("Kernel2D: non-finite weight");
    }
}

double Kernel2D::sum() const {
    return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Kernel2D Kernel2D::transposed() const {
    std::vector<double> t(weights_.size());
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            t[static_cast<std::size_t>(c) * height_ + r] = at(r, c);
        }
    }
    return Kernel2D(height_, width_, std::move(t));
}

Kernel2D laplacian_kernel() {
    return Kernel2D(3, 3, {0, 1, 0, 1, -4, 1, 0, 1, 0});
}

Kernel2D sobel_x_kernel() {
    return Kernel2D(3, 3, {-1, 0, 1, -2, 0, 2, -1, 0, 1});
}

FloatImage convolve2d(const FloatImage& img, const Kernel2D& kernel) {
    FloatImage out(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r) {
        convolve_rows(img, kernel, out, r);
    }
    return out;
}

FloatImage laplacian(const FloatImage& img) {
    return convolve2d(img, laplacian_kernel());
}

FloatImage sharpen(const FloatImage& img) {
    const FloatImage lap = laplacian(img);
    FloatImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        out.samples()[i] = clamp01(img.samples()[i] - lap.samples()[i]);
    }
    return out;
}

FloatImage median_filter(const FloatImage& img, int k) {
    if (k < 1 || k % 2 == 0) {
        throw InputError("median_filter: window size must be odd and >= 1");
    }
    const int half = k / 2;
    const int w = img.width();
    const int h = img.height();
    FloatImage out(w, h);
    std::vector<double> window(static_cast<std::size_t>(k) * k);
    const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::size_t n = 0;
            for (int dr = -half; dr <= half; ++dr) {
                const int sr = clamp_index(r + dr, h);
                for (int dc = -half; dc <= half; ++dc) {
                    window[n++] = img.at(sr, clamp_index(c + dc, w));
                }
            }
            std::nth_element(window.begin(), mid, window.end());
            out.at(r, c) = *mid;
        }
    }
    return out;
}

std::vector<double> gaussian_kernel_1d(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InputError("gaussian_smooth: sigma must be positive");
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    for (int i = -radius; i <= radius; ++i) {
        taps[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    }
    const double total = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (auto& t : taps) t /= total;
    return taps;
}

FloatImage gaussian_smooth(const FloatImage& img, double sigma) {
    const auto taps = gaussian_kernel_1d(sigma);
    const int n = static_cast<int>(taps.size());
    const Kernel2D horizontal(n, 1, taps);
    const Kernel2D vertical(1, n, taps);
    return convolve2d(convolve2d(img, horizontal), vertical);
}

FloatImage sobel_magnitude(const FloatImage& img) {
    const Kernel2D kx = sobel_x_kernel();
    const FloatImage gx = convolve2d(img, kx);
    const FloatImage gy = convolve2d(img, kx.transposed());
    FloatImage out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = gx.samples()[i];
        const double y = gy.samples()[i];
        out.samples()[i] = std::sqrt(x * x + y * y);
    }
    return out;
}

}  // namespace lungprep
