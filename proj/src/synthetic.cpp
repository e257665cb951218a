#include "lungprep/synthetic.hpp"

#include "lungprep/error.hpp"
#include "lungprep/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace lungprep::synthetic {

namespace {

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

private:
    std::mt19937_64 engine_;
};

void paint(std::vector<double>& field, int size, const Ellipse& e, double value) {
    const int r0 = std::max(0, static_cast<int>(std::floor(e.center_row - e.radius_rows)));
    const int r1 = std::min(size - 1, static_cast<int>(std::ceil(e.center_row + e.radius_rows)));
    const int c0 = std::max(0, static_cast<int>(std::floor(e.center_col - e.radius_cols)));
    const int c1 = std::min(size - 1, static_cast<int>(std::ceil(e.center_col + e.radius_cols)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            if (e.contains(r, c)) field[static_cast<std::size_t>(r) * size + c] = value;
        }
    }
}

// A random point well inside the lung ellipse.
std::pair<double, double> point_in(const Ellipse& lung, Sampler& rng, double margin) {
    for (;;) {
        const double u = rng.uniform(-1.0, 1.0);
        const double v = rng.uniform(-1.0, 1.0);
        if (u * u + v * v <= margin * margin) {
            return {lung.center_row + u * lung.radius_rows, lung.center_col + v * lung.radius_cols};
        }
    }
}

}  // namespace

bool Ellipse::contains(double row, double col) const {
    const double dr = (row - center_row) / radius_rows;
    const double dc = (col - center_col) / radius_cols;
    return dr * dr + dc * dc <= 1.0;
}

Phantom make_lung_phantom(const PhantomSpec& spec) {
    if (spec.size < 64) throw InputError("phantom: size must be >= 64");
    Sampler rng(spec.seed);
    const int size = spec.size;
    const double s = size / 512.0;
    const auto jitter = [&](double amount) { return rng.uniform(-amount, amount) * s; };

    Phantom ph;
    ph.thorax = {256 * s + jitter(6), 256 * s + jitter(6), 200 * s + jitter(8), 232 * s + jitter(8)};
    const double lung_rows = spec.closed_lung ? 28 * s : 130 * s + jitter(8);
    const double lung_cols = spec.closed_lung ? 14 * s : 72 * s + jitter(5);
    ph.left_lung = {ph.thorax.center_row + jitter(4), ph.thorax.center_col - 86 * s + jitter(4), lung_rows, lung_cols};
    ph.right_lung = {ph.thorax.center_row + jitter(4), ph.thorax.center_col + 86 * s + jitter(4), lung_rows,
                     lung_cols};

    // Region intensities, later perturbed per pixel.
    constexpr double kBackground = 0.0;
    constexpr double kThorax = 1000.0;
    constexpr double kLung = 80.0;
    constexpr double kGroundGlass = 450.0;
    constexpr double kConsolidation = 900.0;
    std::vector<double> field(static_cast<std::size_t>(size) * size, kBackground);
    paint(field, size, ph.thorax, kThorax);
    paint(field, size, ph.left_lung, kLung);
    paint(field, size, ph.right_lung, kLung);

    if (!spec.closed_lung) {
        const Ellipse* lungs[] = {&ph.left_lung, &ph.right_lung};
        if (spec.label == Diagnosis::CI) {
            const int patches = rng.integer(5, 8);
            for (int i = 0; i < patches; ++i) {
                const auto& lung = *lungs[i % 2];
                const auto [r, c] = point_in(lung, rng, 0.7);
                const double rad = rng.uniform(10.0, 18.0) * s;
                paint(field, size, {r, c, rad, rad * rng.uniform(0.8, 1.2)}, kGroundGlass);
            }
        } else if (spec.label == Diagnosis::CP) {
            const int blobs = rng.integer(1, 3);
            for (int i = 0; i < blobs; ++i) {
                const auto& lung = *lungs[rng.integer(0, 1)];
                const auto [r, c] = point_in(lung, rng, 0.5);
                const double rad = rng.uniform(22.0, 34.0) * s;
                paint(field, size, {r, c, rad, rad * rng.uniform(0.7, 1.0)}, kConsolidation);
            }
        }
    }

    std::vector<std::uint16_t> samples(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double base = field[i];
        const double noise = base == kBackground ? rng.uniform(0.0, 12.0) : rng.uniform(-25.0, 25.0);
        samples[i] = static_cast<std::uint16_t>(std::clamp(std::round(base + noise), 0.0, 65535.0));
    }
    ph.image = GrayImage(size, size, 16, std::move(samples));
    return ph;
}

FloatImage render_ellipse(int width, int height, const Ellipse& e, double value) {
    FloatImage img(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (e.contains(r, c)) img.at(r, c) = value;
        }
    }
    return img;
}

Rect ellipse_extent(int width, int height, const Ellipse& e) {
    int top = height, bottom = -1, left = width, right = -1;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (!e.contains(r, c)) continue;
            top = std::min(top, r);
            bottom = std::max(bottom, r);
            left = std::min(left, c);
            right = std::max(right, c);
        }
    }
    if (bottom < 0) throw InputError("ellipse_extent: ellipse covers no pixel");
    return {top, left, bottom - top + 1, right - left + 1};
}

std::vector<ManifestRow> write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec) {
    if (spec.patients < 1 || spec.slices_per_patient < 1) {
        throw InputError("synthetic dataset: need at least one patient and one slice");
    }
    std::filesystem::create_directories(dir / "images");
    Sampler rng(spec.seed);
    std::vector<ManifestRow> rows;
    for (int p = 0; p < spec.patients; ++p) {
        const Diagnosis label = kAllDiagnoses[static_cast<std::size_t>(p) % kAllDiagnoses.size()];
        char pid[32];
        std::snprintf(pid, sizeof pid, "P%03d", p);
        for (int k = 0; k < spec.slices_per_patient; ++k) {
            PhantomSpec ps;
            ps.size = spec.size;
            ps.label = label;
            ps.closed_lung = rng.uniform(0.0, 1.0) < spec.closed_fraction;
            ps.seed = rng.integer(0, 1 << 30) * 2654435761ull + static_cast<std::uint64_t>(p * 131 + k);
            const Phantom ph = make_lung_phantom(ps);
            char name[64];
            std::snprintf(name, sizeof name, "%s_s%02d", pid, k);
            const auto rel = std::filesystem::path("images") / (std::string(name) + ".pgm");
            save_pgm(ph.image, dir / rel);
            rows.push_back({rel.generic_string(), pid, label, "synthetic"});
        }
    }
    write_manifest(rows, dir / "manifest.csv");
    return rows;
}

}  // namespace lungprep::synthetic
