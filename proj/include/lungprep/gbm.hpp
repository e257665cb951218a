#pragma once

#include "lungprep/features.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lungprep::gbm {

struct TrainConfig {
    int rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_leaf = 5;
    // Empty: the sorted distinct training labels. Two classes train a single
    // forest for class_list[1]; more train one forest per class.
    std::vector<std::string> class_list;

    void validate() const;
};

// Internal nodes route x[feature] <= threshold to `left`. Leaves carry an
// unscaled Newton step; the model's learning rate multiplies it at
// prediction time.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
public:
    RegressionTree() = default;
    explicit RegressionTree(std::vector<TreeNode> nodes);

    [[nodiscard]] double evaluate(std::span<const double> x) const;
    // Index of the leaf that x lands in.
    [[nodiscard]] std::size_t leaf_index(std::span<const double> x) const;
    [[nodiscard]] int depth() const;
    [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    std::vector<TreeNode> nodes_;
};

struct GbmModel {
    std::string schema_id;
    std::vector<std::string> class_list;
    std::vector<double> init_scores;  // one per forest
    double learning_rate = 0.1;
    std::vector<std::vector<RegressionTree>> forests;
    std::vector<double> per_round_loss;

    [[nodiscard]] bool is_binary() const { return class_list.size() == 2; }
};

inline constexpr int kModelVersion = 1;

GbmModel fit_gbm(std::span<const FeatureVector> features, std::span<const std::string> labels,
                 const TrainConfig& cfg = {});

// init + learning_rate * sum of tree outputs, one score per forest.
std::vector<double> predict_margin(const GbmModel& model, const FeatureVector& x);

struct LabelPrediction {
    std::string label;
    double confidence = 0.0;
};

LabelPrediction predict_label(const GbmModel& model, const FeatureVector& x);

// Logistic helpers shared with callers that recompute losses.
double sigmoid(double margin);
double log_loss(double margin, double target);

// Canonical JSON: fixed key order, 17 significant digits.
std::string serialize_model(const GbmModel& model);
GbmModel parse_model(const std::string& text);
void save_model(const GbmModel& model, const std::filesystem::path& path);
GbmModel load_model(const std::filesystem::path& path);

}  // namespace lungprep::gbm
