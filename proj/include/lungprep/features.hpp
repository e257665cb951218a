#pragma once

#include "lungprep/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lungprep {

struct FeatureSchema {
    std::string schema_id;
    std::vector<std::string> names;

    [[nodiscard]] std::size_t dimension() const { return names.size(); }
};

struct FeatureVector {
    std::string image_id;
    std::string schema_id;
    std::vector<double> values;
};

inline constexpr int kHistogramBins = 32;
inline constexpr const char* kClassicSchemaId = "classic-v1";

// 32 histogram bins, area fraction, aspect ratio, mean, std, skewness,
// perimeter fraction.
const FeatureSchema& classic_schema();

// Descriptors of the masked intensities. Requires a nonempty mask of the
// same size as the image.
FeatureVector classical_features(const std::string& image_id, const FloatImage& gray,
                                 const BinaryMask& mask);

struct FeatureTable {
    FeatureSchema schema;
    std::vector<FeatureVector> vectors;
};

// CSV with an optional "# schema: <id>" first line and an "image_id,..."
// header. Without a schema line the id is "ext-<dimension>".
FeatureTable load_embeddings(const std::filesystem::path& path);
FeatureTable parse_feature_csv(const std::vector<std::string>& lines);

// Rows sorted by image_id; values in shortest round-trip decimal form.
std::string render_feature_csv(const FeatureSchema& schema, const std::vector<FeatureVector>& vectors);
void write_features(const FeatureSchema& schema, const std::vector<FeatureVector>& vectors,
                    const std::filesystem::path& path);

// Generic f0..f{n-1} schema for external embeddings.
FeatureSchema external_schema(std::size_t dimension);

}  // namespace lungprep
