#pragma once

#include "lungprep/labels.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lungprep::ensemble {

struct ModelPrediction {
    std::string model_id;
    std::string image_id;
    std::vector<Diagnosis> supported_classes;
    Diagnosis label = Diagnosis::CI;
    double confidence = 0.0;
};

struct EnsembleConfig {
    // Per-model weight; models not listed get default_weight.
    std::map<std::string, double> weights;
    double default_weight = 1.0;
    std::vector<Diagnosis> tie_order{Diagnosis::CP, Diagnosis::CI, Diagnosis::N};

    void validate() const;
    [[nodiscard]] double weight_for(const std::string& model_id) const;
};

// Scores closer than this, relative to the larger of the two, are ties.
// Keeps decimal-grid ties (0.1 + 0.2 vs 0.3) exact in practice.
inline constexpr double kTieRelativeTolerance = 1e-12;

struct Decision {
    Diagnosis label = Diagnosis::CP;
    double score = 0.0;                 // winning raw score / sum of raw scores
    std::array<double, 3> raw_scores{};  // indexed by Diagnosis
};

// Confidence-weighted plurality over 1-3 predictions for one image.
Decision combine(std::span<const ModelPrediction> preds, const EnsembleConfig& cfg = {});

struct PredictionFile {
    std::string model_id;
    std::vector<Diagnosis> classes;
    std::vector<ModelPrediction> predictions;
};

// "# model: <id> classes: <list>" then "image_id,label,confidence".
PredictionFile parse_predictions(const std::vector<std::string>& lines);
PredictionFile read_predictions(const std::filesystem::path& path);
std::string render_predictions(const PredictionFile& file);
void write_predictions(const PredictionFile& file, const std::filesystem::path& path);

struct FinalPrediction {
    std::string image_id;
    Diagnosis label = Diagnosis::CP;
    double score = 0.0;
};

// "image_id,label,score", sorted by image id, score at 6 decimals.
std::string render_final(std::vector<FinalPrediction> rows);
void write_final(const std::vector<FinalPrediction>& rows, const std::filesystem::path& path);

// Reads either a final ensemble CSV or a per-model prediction CSV; only the
// id and label columns are used. Comment lines start with '#'.
std::vector<FinalPrediction> read_labelled(const std::filesystem::path& path);

}  // namespace lungprep::ensemble
