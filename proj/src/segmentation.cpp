#include "lungprep/segmentation.hpp"

#include "lungprep/error.hpp"
#include "lungprep/filters.hpp"
#include "lungprep/rounding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>

namespace lungprep {

namespace {

// Between-class variance up to the constant factor 1/N^2:
// (S0*N - S*n0)^2 / (n0 * n1). Held as an exact fraction when it fits in
// 128 bits so that equal variances compare equal.
struct VarianceScore {
    std::int64_t diff = 0;
    std::int64_t n0 = 0;
    std::int64_t n1 = 0;
    bool valid = false;
};

__extension__ typedef __int128 i128;

// Largest pixel count for which diff^2 * n0 * n1 cannot overflow __int128.
constexpr std::int64_t kExactOtsuLimit = 400000;

bool greater_than(const VarianceScore& a, const VarianceScore& b, bool exact) {
    if (!a.valid) return false;
    if (!b.valid) return a.diff != 0;
    if (exact) {
        const i128 lhs = static_cast<i128>(a.diff) * a.diff * b.n0 * b.n1;
        const i128 rhs = static_cast<i128>(b.diff) * b.diff * a.n0 * a.n1;
        return lhs > rhs;
    }
    const auto value = [](const VarianceScore& s) {
        const long double d = static_cast<long double>(s.diff);
        return d * d / (static_cast<long double>(s.n0) * static_cast<long double>(s.n1));
    };
    return value(a) > value(b);
}

}  // namespace

void SelectionConfig::validate() const {
    if (roi_rows.first < 1 || roi_rows.last < roi_rows.first || roi_cols.first < 1 ||
        roi_cols.last < roi_cols.first) {
        throw InputError("selection: ROI ranges must be nonempty and 1-based");
    }
    if (intensity_threshold < 0 || intensity_threshold > 255) {
        throw InputError("selection: intensity threshold must be in [0, 255]");
    }
    if (!(min_dark_fraction >= 0.0 && min_dark_fraction <= 1.0)) {
        throw InputError("selection: dark fraction must be in [0, 1]");
    }
}

Rect scaled_roi(int width, int height, const SelectionConfig& cfg) {
    cfg.validate();
    const auto scale = [](int index, int size) {
        return static_cast<int>(round_half_away(static_cast<double>(index) * size / kReferenceSliceSize));
    };
    const int top = scale(cfg.roi_rows.first - 1, height);
    const int bottom = scale(cfg.roi_rows.last, height);  // exclusive
    const int left = scale(cfg.roi_cols.first - 1, width);
    const int right = scale(cfg.roi_cols.last, width);    // exclusive
    if (bottom <= top || right <= left || bottom > height || right > width) {
        throw InputError("selection: ROI outside image after scaling");
    }
    return Rect{top, left, bottom - top, right - left};
}

SelectionResult select_slice(const GrayImage& img, const SelectionConfig& cfg) {
    if (img.bit_depth() != 8) {
        throw InputError("select_slice: expects an 8-bit image");
    }
    const Rect roi = scaled_roi(img.width(), img.height(), cfg);
    std::size_t dark = 0;
    for (int r = roi.top; r <= roi.bottom(); ++r) {
        for (int c = roi.left; c <= roi.right(); ++c) {
            if (img.at(r, c) < cfg.intensity_threshold) ++dark;
        }
    }
    const double total = static_cast<double>(roi.height) * roi.width;
    const double fraction = static_cast<double>(dark) / total;
    return {fraction >= cfg.min_dark_fraction, fraction};
}

int quantize_bin(double x) {
    return static_cast<int>(round_half_away(clamp01(x) * 255.0));
}

OtsuResult binarize_otsu(const FloatImage& img) {
    std::array<std::int64_t, 256> histogram{};
    std::vector<std::uint8_t> bins(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const int b = quantize_bin(img.samples()[i]);
        bins[i] = static_cast<std::uint8_t>(b);
        ++histogram[static_cast<std::size_t>(b)];
    }
    std::int64_t total_count = 0;
    std::int64_t total_moment = 0;
    for (int b = 0; b < 256; ++b) {
        total_count += histogram[b];
        total_moment += histogram[b] * b;
    }
    const bool exact = total_count <= kExactOtsuLimit;

    VarianceScore best;
    int best_t = 0;
    std::int64_t n0 = 0;
    std::int64_t s0 = 0;
    for (int t = 0; t <= 254; ++t) {
        n0 += histogram[t];
        s0 += histogram[t] * t;
        const std::int64_t n1 = total_count - n0;
        VarianceScore score;
        if (n0 > 0 && n1 > 0) {
            score = {s0 * total_count - total_moment * n0, n0, n1, true};
        }
        if (greater_than(score, best, exact)) {
            best = score;
            best_t = t;
        }
    }

    OtsuResult result{BinaryMask(img.width(), img.height()), 0};
    if (!best.valid || best.diff == 0) {
        return result;
    }
    result.threshold = best_t;
    std::vector<std::uint8_t> bits(bins.size());
    std::transform(bins.begin(), bins.end(), bits.begin(),
                   [best_t](std::uint8_t b) { return static_cast<std::uint8_t>(b > best_t); });
    result.mask = BinaryMask(img.width(), img.height(), std::move(bits));
    return result;
}

BinaryMask edge_mask(const FloatImage& grad) {
    double peak = 0.0;
    for (double v : grad.samples()) {
        if (v < 0.0) throw InputError("edge_mask: negative gradient sample");
        peak = std::max(peak, v);
    }
    if (peak == 0.0) {
        return BinaryMask(grad.width(), grad.height());
    }
    FloatImage scaled(grad.width(), grad.height());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        scaled.samples()[i] = grad.samples()[i] / peak;
    }
    return binarize_otsu(scaled).mask;
}

BinaryMask dilate(const BinaryMask& mask, int iterations) {
    if (iterations < 1) {
        throw InputError("dilate: iterations must be >= 1");
    }
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask current = mask;
    for (int it = 0; it < iterations; ++it) {
        BinaryMask next(w, h);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (!current.at(r, c)) continue;
                for (int rr = std::max(r - 1, 0); rr <= std::min(r + 1, h - 1); ++rr) {
                    for (int cc = std::max(c - 1, 0); cc <= std::min(c + 1, w - 1); ++cc) {
                        next.set(rr, cc, true);
                    }
                }
            }
        }
        current = std::move(next);
    }
    return current;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask outside(w, h);
    std::deque<std::pair<int, int>> queue;
    const auto seed = [&](int r, int c) {
        if (!mask.at(r, c) && !outside.at(r, c)) {
            outside.set(r, c, true);
            queue.emplace_back(r, c);
        }
    };
    for (int c = 0; c < w; ++c) {
        seed(0, c);
        seed(h - 1, c);
    }
    for (int r = 0; r < h; ++r) {
        seed(r, 0);
        seed(r, w - 1);
    }
    constexpr std::array<std::pair<int, int>, 4> kSteps{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    while (!queue.empty()) {
        const auto [r, c] = queue.front();
        queue.pop_front();
        for (const auto& [dr, dc] : kSteps) {
            const int rr = r + dr;
            const int cc = c + dc;
            if (rr >= 0 && rr < h && cc >= 0 && cc < w) seed(rr, cc);
        }
    }
    BinaryMask out(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            out.set(r, c, !outside.at(r, c));
        }
    }
    return out;
}

BinaryMask largest_component(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> label(mask.size(), -1);
    std::vector<std::size_t> sizes;
    std::vector<std::pair<int, int>> stack;
    for (int r0 = 0; r0 < h; ++r0) {
        for (int c0 = 0; c0 < w; ++c0) {
            const std::size_t idx0 = static_cast<std::size_t>(r0) * w + c0;
            if (!mask.at(r0, c0) || label[idx0] >= 0) continue;
            const int id = static_cast<int>(sizes.size());
            std::size_t count = 0;
            label[idx0] = id;
            stack.emplace_back(r0, c0);
            while (!stack.empty()) {
                const auto [r, c] = stack.back();
                stack.pop_back();
                ++count;
                for (int rr = std::max(r - 1, 0); rr <= std::min(r + 1, h - 1); ++rr) {
                    for (int cc = std::max(c - 1, 0); cc <= std::min(c + 1, w - 1); ++cc) {
                        const std::size_t idx = static_cast<std::size_t>(rr) * w + cc;
                        if (mask.at(rr, cc) && label[idx] < 0) {
                            label[idx] = id;
                            stack.emplace_back(rr, cc);
                        }
                    }
                }
            }
            sizes.push_back(count);
        }
    }
    BinaryMask out(w, h);
    if (sizes.empty()) return out;
    // Labels are assigned in row-major discovery order, so the first maximum
    // is the tie-break winner.
    const int winner = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (label[i] == winner) {
            out.set(static_cast<int>(i / w), static_cast<int>(i % w), true);
        }
    }
    return out;
}

Rect bounding_box(const BinaryMask& mask) {
    int top = mask.height();
    int bottom = -1;
    int left = mask.width();
    int right = -1;
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask.at(r, c)) continue;
            top = std::min(top, r);
            bottom = std::max(bottom, r);
            left = std::min(left, c);
            right = std::max(right, c);
        }
    }
    if (bottom < 0) {
        throw InputError("bounding_box: empty mask");
    }
    return Rect{top, left, bottom - top + 1, right - left + 1};
}

CropResult auto_crop(const FloatImage& gray, const CropConfig& cfg) {
    if (cfg.output_size < 1) {
        throw InputError("auto_crop: output size must be positive");
    }
    const FloatImage smoothed = gaussian_smooth(gray, cfg.sigma);
    const BinaryMask edges = edge_mask(sobel_magnitude(smoothed));
    if (edges.empty_foreground()) {
        throw InputError("no lung structure found");
    }
    const BinaryMask region = largest_component(fill_holes(dilate(edges, cfg.dilate_iterations)));
    const Rect rect = bounding_box(region);
    return CropResult{
        resize_bilinear(crop(gray, rect), cfg.output_size, cfg.output_size),
        resize_nearest_mask(crop(region, rect), cfg.output_size, cfg.output_size),
        rect,
    };
}

PreprocessedRecord preprocess_image(const std::string& image_id, const GrayImage& raw,
                                    const PreprocessConfig& cfg) {
    PreprocessedRecord record;
    record.image_id = image_id;
    const Normalized normalized = normalize_max(raw);
    const GrayImage stored = to_u8(normalized.image);
    const SelectionResult selection = select_slice(stored, cfg.selection);
    record.dark_fraction = selection.dark_fraction;
    if (!selection.selected) {
        record.reason = "rejected by selection";
        return record;
    }
    const FloatImage filtered = median_filter(sharpen(to_float(stored)), cfg.median_window);
    try {
        CropResult cropped = auto_crop(filtered, cfg.crop);
        record.selected = true;
        record.crop_rect = cropped.rect;
        record.gray = std::move(cropped.gray);
        record.mask = std::move(cropped.mask);
    } catch (const InputError& e) {
        record.reason = e.what();
    }
    return record;
}

}  // namespace lungprep
