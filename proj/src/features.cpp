#include "lungprep/features.hpp"

#include "lungprep/csv.hpp"
#include "lungprep/error.hpp"
#include "lungprep/pgm.hpp"
#include "lungprep/rounding.hpp"
#include "lungprep/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lungprep {

namespace {

constexpr std::string_view kSchemaPrefix = "# schema:";

FeatureSchema make_classic_schema() {
    FeatureSchema schema{kClassicSchemaId, {}};
    for (int b = 0; b < kHistogramBins; ++b) {
        schema.names.push_back((b < 10 ? "hist0" : "hist") + std::to_string(b));
    }
    for (const char* name : {"area_fraction", "aspect_ratio", "mean", "std", "skewness",
                             "perimeter_fraction"}) {
        schema.names.emplace_back(name);
    }
    return schema;
}

}  // namespace

const FeatureSchema& classic_schema() {
    static const FeatureSchema schema = make_classic_schema();
    return schema;
}

FeatureSchema external_schema(std::size_t dimension) {
    FeatureSchema schema{"ext-" + std::to_string(dimension), {}};
    for (std::size_t i = 0; i < dimension; ++i) {
        schema.names.push_back("f" + std::to_string(i));
    }
    return schema;
}

FeatureVector classical_features(const std::string& image_id, const FloatImage& gray,
                                 const BinaryMask& mask) {
    if (gray.width() != mask.width() || gray.height() != mask.height()) {
        throw InputError("classical_features: image and mask sizes differ");
    }
    const int w = mask.width();
    const int h = mask.height();

    std::vector<double> masked;
    masked.reserve(mask.count());
    std::vector<double> histogram(kHistogramBins, 0.0);
    std::size_t boundary = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!mask.at(r, c)) continue;
            const double x = gray.at(r, c);
            masked.push_back(x);
            const int bin = std::min(static_cast<int>(std::floor(clamp01(x) * kHistogramBins)),
                                     kHistogramBins - 1);
            histogram[static_cast<std::size_t>(bin)] += 1.0;
            // Pixels outside the image count as background.
            const bool edge = r == 0 || r == h - 1 || c == 0 || c == w - 1 || !mask.at(r - 1, c) ||
                              !mask.at(r + 1, c) || !mask.at(r, c - 1) || !mask.at(r, c + 1);
            if (edge) ++boundary;
        }
    }
    if (masked.empty()) {
        throw InputError("classical_features: empty mask");
    }
    const double n = static_cast<double>(masked.size());
    for (auto& bin : histogram) bin /= n;

    const Rect box = bounding_box(mask);
    const double area_fraction = n / (static_cast<double>(w) * h);
    const double aspect = static_cast<double>(box.width) / box.height;

    double sum = 0.0;
    for (double x : masked) sum += x;
    const double mean = sum / n;
    double m2 = 0.0;
    double m3 = 0.0;
    for (double x : masked) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    const auto [lo, hi] = std::minmax_element(masked.begin(), masked.end());
    const bool constant = *lo == *hi;
    const double variance = constant ? 0.0 : m2 / n;
    const double stddev = std::sqrt(variance);
    const double skewness = constant || stddev == 0.0 ? 0.0 : (m3 / n) / (variance * stddev);

    FeatureVector fv{image_id, kClassicSchemaId, std::move(histogram)};
    fv.values.insert(fv.values.end(), {area_fraction, aspect, constant ? *lo : mean, stddev, skewness,
                                       static_cast<double>(boundary) / n});
    return fv;
}

FeatureTable parse_feature_csv(const std::vector<std::string>& lines) {
    std::size_t pos = 0;
    std::string schema_id;
    if (pos < lines.size() && lines[pos].starts_with(kSchemaPrefix)) {
        schema_id = csv::trim(std::string_view(lines[pos]).substr(kSchemaPrefix.size()));
        if (schema_id.empty()) throw InputError("features: empty schema line");
        ++pos;
    }
    if (pos >= lines.size()) {
        throw InputError("features: missing header");
    }
    const auto header = csv::split(lines[pos++]);
    if (header.empty() || csv::trim(header[0]) != "image_id") {
        throw InputError("features: header must start with image_id");
    }
    FeatureTable table;
    for (std::size_t i = 1; i < header.size(); ++i) {
        table.schema.names.push_back(csv::trim(header[i]));
    }
    const std::size_t dim = table.schema.names.size();
    if (dim == 0) throw InputError("features: no feature columns");
    table.schema.schema_id = schema_id.empty() ? "ext-" + std::to_string(dim) : schema_id;

    std::set<std::string> seen;
    for (; pos < lines.size(); ++pos) {
        if (csv::trim(lines[pos]).empty()) continue;
        const auto fields = csv::split(lines[pos]);
        const std::string where = "features line " + std::to_string(pos + 1);
        if (fields.size() != dim + 1) {
            throw InputError(where + ": ragged row");
        }
        FeatureVector fv{csv::trim(fields[0]), table.schema.schema_id, {}};
        if (fv.image_id.empty()) throw InputError(where + ": empty image_id");
        if (!seen.insert(fv.image_id).second) {
            throw InputError(where + ": duplicate image_id " + fv.image_id);
        }
        fv.values.reserve(dim);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            fv.values.push_back(csv::parse_real(fields[i], where));
        }
        table.vectors.push_back(std::move(fv));
    }
    return table;
}

FeatureTable load_embeddings(const std::filesystem::path& path) {
    return parse_feature_csv(csv::read_lines(path));
}

std::string render_feature_csv(const FeatureSchema& schema, const std::vector<FeatureVector>& vectors) {
    std::vector<const FeatureVector*> order;
    for (const auto& fv : vectors) {
        if (fv.schema_id != schema.schema_id) {
            throw InputError("write_features: mixed schemas (" + fv.schema_id + " vs " +
                             schema.schema_id + ")");
        }
        if (fv.values.size() != schema.dimension()) {
            throw InputError("write_features: vector length does not match schema");
        }
        order.push_back(&fv);
    }
    std::sort(order.begin(), order.end(),
              [](const FeatureVector* a, const FeatureVector* b) { return a->image_id < b->image_id; });

    std::string out = std::string(kSchemaPrefix) + " " + schema.schema_id + "\n";
    std::vector<std::string> header{"image_id"};
    header.insert(header.end(), schema.names.begin(), schema.names.end());
    out += csv::join(header) + "\n";
    for (const auto* fv : order) {
        out += csv::escape(fv->image_id);
        for (double v : fv->values) {
            out += ',';
            out += csv::shortest(v);
        }
        out += '\n';
    }
    return out;
}

void write_features(const FeatureSchema& schema, const std::vector<FeatureVector>& vectors,
                    const std::filesystem::path& path) {
    write_file_text(path, render_feature_csv(schema, vectors));
}

}  // namespace lungprep
