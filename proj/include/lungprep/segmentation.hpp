#pragma once

#include "lungprep/image.hpp"

#include <optional>
#include <string>

namespace lungprep {

// Inclusive 1-based range as written against a 512 x 512 reference slice.
struct IndexRange {
    int first = 1;
    int last = 1;
};

struct SelectionConfig {
    IndexRange roi_rows{241, 340};
    IndexRange roi_cols{121, 370};
    int intensity_threshold = 200;
    double min_dark_fraction = 0.40;

    void validate() const;
};

struct CropConfig {
    double sigma = 1.0;
    int dilate_iterations = 2;
    int output_size = 224;
};

inline constexpr int kReferenceSliceSize = 512;

struct SelectionResult {
    bool selected = false;
    double dark_fraction = 0.0;
};

// ROI in 0-based coordinates after proportional scaling to the image size.
Rect scaled_roi(int width, int height, const SelectionConfig& cfg);

SelectionResult select_slice(const GrayImage& img, const SelectionConfig& cfg = {});

struct OtsuResult {
    BinaryMask mask;
    int threshold = 0;
};

// Samples are quantized to 256 bins; the threshold t in [0, 254] maximizing
// between-class variance wins (smallest t on ties); mask = bin > t. Images
// with a single occupied bin give an all-false mask and threshold 0.
OtsuResult binarize_otsu(const FloatImage& img);

// 256-bin quantization shared by Otsu and its callers.
int quantize_bin(double x);

// Gradient rescaled by its maximum, then Otsu. Rejects negative samples.
BinaryMask edge_mask(const FloatImage& grad);

// 3 x 3 square dilation, repeated; iterations >= 1.
BinaryMask dilate(const BinaryMask& mask, int iterations = 2);

// Background flood-filled 4-connectively from the border; unreached false
// pixels become true.
BinaryMask fill_holes(const BinaryMask& mask);

// Largest 8-connected component; ties go to the component whose first pixel
// in row-major order comes earliest.
BinaryMask largest_component(const BinaryMask& mask);

// Tightest rectangle around the true pixels. Throws on an empty mask.
Rect bounding_box(const BinaryMask& mask);

struct CropResult {
    FloatImage gray;
    BinaryMask mask;
    Rect rect;
};

// Gaussian -> Sobel -> edge mask -> dilate -> fill holes -> largest component
// -> bounding box; crops gray and mask to the box and resizes both.
CropResult auto_crop(const FloatImage& gray, const CropConfig& cfg = {});

struct PreprocessConfig {
    SelectionConfig selection;
    CropConfig crop;
    int median_window = 3;
};

struct PreprocessedRecord {
    std::string image_id;
    bool selected = false;
    double dark_fraction = 0.0;
    std::optional<Rect> crop_rect;
    std::optional<FloatImage> gray;
    std::optional<BinaryMask> mask;
    std::string reason;  // empty when selected and cropped
};

// normalize -> uint8 -> select; selected slices continue through
// sharpen -> median -> auto_crop. Crop failures yield a rejected record.
PreprocessedRecord preprocess_image(const std::string& image_id, const GrayImage& raw,
                                    const PreprocessConfig& cfg = {});

}  // namespace lungprep
