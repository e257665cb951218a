#include "oracles.hpp"

#include "lungprep/error.hpp"
#include "lungprep/filters.hpp"
#include "lungprep/records.hpp"
#include "lungprep/segmentation.hpp"
#include "lungprep/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>

using namespace lungprep;

namespace {

GrayImage filled(int w, int h, std::uint16_t v) {
    return GrayImage(w, h, 8, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, v));
}

bool rect_contains(const Rect& outer, const Rect& inner) {
    return outer.top <= inner.top && outer.left <= inner.left && outer.bottom() >= inner.bottom() &&
           outer.right() >= inner.right();
}

bool eight_connected(const BinaryMask& m) {
    const auto comps = oracle::label(m);
    return comps.sizes.size() <= 1;
}

}  // namespace

TEST_CASE("select_slice examples") {
    const auto dark = select_slice(filled(512, 512, 0));
    CHECK(dark.selected);
    CHECK(dark.dark_fraction == 1.0);
    const auto bright = select_slice(filled(512, 512, 255));
    CHECK_FALSE(bright.selected);
    CHECK(bright.dark_fraction == 0.0);

    std::vector<std::uint16_t> s(512 * 512, 255);
    int placed = 0;
    for (int r = 240; r < 340 && placed < 10000; ++r)
        for (int c = 120; c < 370 && placed < 10000; ++c, ++placed) s[r * 512 + c] = 0;
    const auto boundary = select_slice(GrayImage(512, 512, 8, s));
    CHECK(boundary.dark_fraction == 0.4);
    CHECK(boundary.selected);
    s[240 * 512 + 120] = 200;  // threshold is strict
    CHECK_FALSE(select_slice(GrayImage(512, 512, 8, s)).selected);
}

TEST_CASE("select_slice ignores pixels outside the ROI") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> level(0, 255);
    std::vector<std::uint16_t> s(512 * 512);
    for (auto& v : s) v = static_cast<std::uint16_t>(level(rng));
    const auto base = select_slice(GrayImage(512, 512, 8, s));
    const Rect roi = scaled_roi(512, 512, {});
    CHECK(roi == Rect{240, 120, 100, 250});
    std::vector<std::size_t> outside;
    for (int r = 0; r < 512; ++r)
        for (int c = 0; c < 512; ++c)
            if (!roi.contains(r, c)) outside.push_back(static_cast<std::size_t>(r) * 512 + c);
    for (int trial = 0; trial < 3; ++trial) {
        auto perm = outside;
        std::shuffle(perm.begin(), perm.end(), rng);
        auto t = s;
        for (std::size_t i = 0; i < outside.size(); ++i) t[outside[i]] = s[perm[i]];
        CHECK(select_slice(GrayImage(512, 512, 8, t)).dark_fraction == base.dark_fraction);
    }
}

TEST_CASE("selection ROI scales with image size") {
    CHECK(scaled_roi(256, 256, {}) == Rect{120, 60, 50, 125});
    CHECK(select_slice(filled(64, 64, 0)).selected);
    CHECK_THROWS_AS(select_slice(GrayImage(2, 2, 16, {0, 0, 0, 0})), InputError);
    SelectionConfig bad;
    bad.min_dark_fraction = 1.5;
    CHECK_THROWS_AS(select_slice(filled(64, 64, 0), bad), InputError);
}

TEST_CASE("otsu examples") {
    FloatImage two(4, 3);
    two.at(0, 1) = 1.0;
    two.at(2, 3) = 1.0;
    const auto res = binarize_otsu(two);
    CHECK(res.mask.count() == 2);
    CHECK(res.mask.at(0, 1));
    CHECK(res.mask.at(2, 3));
    CHECK(res.threshold == 0);  // every t in [0, 254] separates equally; the smallest wins

    const auto flat = binarize_otsu(FloatImage(5, 5, 0.3));
    CHECK(flat.mask.empty_foreground());
    CHECK(flat.threshold == 0);
}

TEST_CASE("otsu matches the exhaustive variance scan") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        FloatImage img = oracle::random_image(rng, 12, 12);
        if (trial % 3 == 0) {
            // Few distinct levels make exact ties likely.
            for (auto& v : img.samples()) v = std::round(v * 3.0) / 3.0;
        }
        const auto res = binarize_otsu(img);
        CHECK(res.threshold == oracle::otsu_threshold(img));
        CHECK(res.mask == oracle::otsu_mask(img));
    }
}

TEST_CASE("edge_mask") {
    CHECK(edge_mask(FloatImage(6, 6)).empty_foreground());
    FloatImage line(8, 8);
    for (int c = 0; c < 8; ++c) line.at(3, c) = 5.0;
    const auto m = edge_mask(line);
    CHECK(m.count() == 8);
    for (int c = 0; c < 8; ++c) CHECK(m.at(3, c));
    CHECK_THROWS_AS(edge_mask(FloatImage(2, 1, {0.5, -0.1})), InputError);

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = oracle::random_image(rng, 10, 10, 0.0, 7.0);
        FloatImage scaled = g;
        const double peak = *std::max_element(g.samples().begin(), g.samples().end());
        for (auto& v : scaled.samples()) v /= peak;
        CHECK(edge_mask(g) == oracle::otsu_mask(scaled));
    }
}

TEST_CASE("dilate") {
    BinaryMask dot(7, 7);
    dot.set(3, 3, true);
    const auto d = dilate(dot, 1);
    CHECK(d.count() == 9);
    CHECK(bounding_box(d) == Rect{2, 2, 3, 3});
    CHECK(dilate(BinaryMask(4, 4, true), 3) == BinaryMask(4, 4, true));
    CHECK_THROWS_AS(dilate(dot, 0), InputError);

    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = oracle::random_mask(rng, 10, 10, 0.15);
        CHECK(dilate(a, 2) == oracle::dilate_once(oracle::dilate_once(a)));
        CHECK(oracle::subset(a, dilate(a, 1)));
        BinaryMask b = a;
        const auto extra = oracle::random_mask(rng, 10, 10, 0.1);
        for (int r = 0; r < 10; ++r)
            for (int c = 0; c < 10; ++c)
                if (extra.at(r, c)) b.set(r, c, true);
        CHECK(oracle::subset(dilate(a, 2), dilate(b, 2)));
    }
}

TEST_CASE("fill_holes") {
    BinaryMask ring(5, 5);
    for (int r = 1; r <= 3; ++r)
        for (int c = 1; c <= 3; ++c) ring.set(r, c, !(r == 2 && c == 2));
    const auto filled_ring = fill_holes(ring);
    CHECK(filled_ring.at(2, 2));
    CHECK(filled_ring.count() == 9);

    BinaryMask open(5, 5);
    for (int r = 0; r < 5; ++r) open.set(r, 2, true);
    CHECK(fill_holes(open) == open);

    // Diagonal gaps do not leak: the hole is 4-connected to nothing outside.
    BinaryMask diamond(5, 5);
    diamond.set(1, 2, true);
    diamond.set(2, 1, true);
    diamond.set(2, 3, true);
    diamond.set(3, 2, true);
    CHECK(fill_holes(diamond).at(2, 2));

    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = oracle::random_mask(rng, 12, 12, 0.55);
        const auto f = fill_holes(m);
        CHECK(f == oracle::fill_holes(m));
        CHECK(oracle::subset(m, f));
    }
}

TEST_CASE("largest_component") {
    BinaryMask two(8, 4);
    for (int c = 0; c < 5; ++c) two.set(0, c, true);
    for (int c = 5; c < 8; ++c) two.set(3, c, true);
    const auto big = largest_component(two);
    CHECK(big.count() == 5);
    CHECK(big.at(0, 0));
    CHECK_FALSE(big.at(3, 7));
    CHECK(largest_component(BinaryMask(3, 3)).empty_foreground());

    BinaryMask tie(5, 3);
    tie.set(2, 0, true);
    tie.set(2, 1, true);
    tie.set(0, 3, true);
    tie.set(0, 4, true);
    const auto first = largest_component(tie);
    CHECK(first.at(0, 3));
    CHECK_FALSE(first.at(2, 0));

    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = oracle::random_mask(rng, 20, 20, 0.4);
        const auto out = largest_component(m);
        CHECK(out == oracle::largest_component(m));
        CHECK(oracle::subset(out, m));
        CHECK(eight_connected(out));
        if (!out.empty_foreground()) {
            const Rect box = bounding_box(out);
            CHECK(box == oracle::bounding_box(out));
            for (int r = 0; r < 20; ++r)
                for (int c = 0; c < 20; ++c)
                    if (out.at(r, c)) CHECK(box.contains(r, c));
        }
    }
}

TEST_CASE("bounding_box") {
    BinaryMask m(6, 6);
    for (int r = 2; r <= 4; ++r)
        for (int c = 1; c <= 3; ++c) m.set(r, c, (r + c) % 2 == 0 || r == 3);
    CHECK(bounding_box(m) == Rect{2, 1, 3, 3});
    BinaryMask one(4, 4);
    one.set(3, 1, true);
    CHECK(bounding_box(one) == Rect{3, 1, 1, 1});
    CHECK_THROWS_AS(bounding_box(BinaryMask(3, 3)), InputError);
}

TEST_CASE("auto_crop on a bright disk") {
    const synthetic::Ellipse disk{60.0, 70.0, 25.0, 25.0};
    const auto img = synthetic::render_ellipse(128, 128, disk, 1.0);
    const Rect truth = synthetic::ellipse_extent(128, 128, disk);
    const auto res = auto_crop(img);
    CHECK(res.gray.width() == 224);
    CHECK(res.gray.height() == 224);
    CHECK(res.mask.width() == 224);
    CHECK(res.mask.height() == 224);
    CHECK(rect_contains(res.rect, truth));
    const int bound = 2 * CropConfig{}.dilate_iterations;
    CHECK(truth.top - res.rect.top <= bound);
    CHECK(truth.left - res.rect.left <= bound);
    CHECK(res.rect.bottom() - truth.bottom() <= bound);
    CHECK(res.rect.right() - truth.right() <= bound);

    try {
        auto_crop(FloatImage(32, 32, 0.5));
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()) == "no lung structure found");
    }
}

TEST_CASE("preprocess_image") {
    const auto bright = preprocess_image("white", filled(512, 512, 255));
    CHECK_FALSE(bright.selected);
    CHECK_FALSE(bright.gray.has_value());
    CHECK_FALSE(bright.mask.has_value());
    CHECK_FALSE(bright.crop_rect.has_value());

    const auto phantom = synthetic::make_lung_phantom({512, Diagnosis::N, false, 3});
    const auto rec = preprocess_image("p", phantom.image);
    REQUIRE(rec.selected);
    REQUIRE(rec.crop_rect.has_value());
    CHECK(rec.gray->width() == 224);
    CHECK(rec.mask->height() == 224);
    CHECK(rect_contains(*rec.crop_rect, synthetic::ellipse_extent(512, 512, phantom.left_lung)));
    CHECK(rect_contains(*rec.crop_rect, synthetic::ellipse_extent(512, 512, phantom.right_lung)));

    const auto again = preprocess_image("p", phantom.image);
    CHECK(log_entry(again) == log_entry(rec));
    CHECK(*again.gray == *rec.gray);
    CHECK(*again.mask == *rec.mask);

    const auto closed = synthetic::make_lung_phantom({512, Diagnosis::N, true, 3});
    CHECK_FALSE(preprocess_image("c", closed.image).selected);
}
