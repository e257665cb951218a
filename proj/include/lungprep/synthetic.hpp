#pragma once

#include "lungprep/image.hpp"
#include "lungprep/labels.hpp"
#include "lungprep/manifest.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lungprep::synthetic {

struct PhantomSpec {
    int size = 512;
    Diagnosis label = Diagnosis::N;
    bool closed_lung = false;  // apical/basal slice that selection should reject
    std::uint64_t seed = 0;
};

struct Ellipse {
    double center_row = 0.0;
    double center_col = 0.0;
    double radius_rows = 1.0;
    double radius_cols = 1.0;

    [[nodiscard]] bool contains(double row, double col) const;
};

struct Phantom {
    GrayImage image;  // 16-bit raw intensities
    Ellipse thorax;
    Ellipse left_lung;
    Ellipse right_lung;
};

// Bright thorax ellipse with two dark lung ellipses on a black background.
// CI adds scattered mid-intensity patches inside the lungs, CP a few large
// bright consolidations, N nothing.
Phantom make_lung_phantom(const PhantomSpec& spec);

// Filled ellipse of `value` on zero background.
FloatImage render_ellipse(int width, int height, const Ellipse& e, double value = 1.0);

// Pixel extent of a rendered ellipse (rows/cols of its true pixels).
Rect ellipse_extent(int width, int height, const Ellipse& e);

struct DatasetSpec {
    int patients = 12;
    int slices_per_patient = 4;
    int size = 512;
    double closed_fraction = 0.1;
    std::uint64_t seed = 7;
};

// Writes <dir>/images/<id>.pgm and <dir>/manifest.csv; returns the rows.
// Labels cycle CI, CP, N across patients.
std::vector<ManifestRow> write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec);

}  // namespace lungprep::synthetic
