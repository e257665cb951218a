#pragma once

#include "lungprep/labels.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lungprep {

struct ManifestRow {
    std::string image_path;
    std::string patient_id;
    Diagnosis label = Diagnosis::N;
    std::string source;

    // File stem of image_path; the key that joins features and predictions.
    [[nodiscard]] std::string image_id() const;

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

// Header must contain image_path, patient_id, label and source (any order).
std::vector<ManifestRow> parse_manifest(const std::vector<std::string>& lines);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

std::string render_manifest(std::span<const ManifestRow> rows);
void write_manifest(std::span<const ManifestRow> rows, const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
// One SplitMix64 step: add the golden-ratio increment, then mix.
std::uint64_t splitmix64(std::uint64_t state);

std::uint64_t patient_key(std::string_view patient_id, std::uint64_t seed);

struct Split {
    std::vector<ManifestRow> train;
    std::vector<ManifestRow> test;
    std::vector<std::string> test_patients;  // in assignment order
};

// Patients sorted by key go to test until the test image count first reaches
// test_fraction * total; everyone else trains. Row order within each side
// follows the input.
Split split_by_patient(std::span<const ManifestRow> rows, double test_fraction, std::uint64_t seed);

// "train=<n> test=<n> train_CI=.. train_CP=.. train_N=.. test_CI=.. ..."
std::string split_summary(const Split& split);

}  // namespace lungprep
