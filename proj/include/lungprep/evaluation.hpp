#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lungprep::evaluation {

// counts[predicted][true]: rows are the output class, columns the target.
struct ConfusionMatrix {
    std::vector<std::string> class_list{"CI", "CP", "N"};
    std::vector<std::vector<std::uint64_t>> counts;

    [[nodiscard]] std::size_t dimension() const { return class_list.size(); }
    [[nodiscard]] std::uint64_t total() const;
    [[nodiscard]] std::uint64_t row_sum(std::size_t predicted) const;
    [[nodiscard]] std::uint64_t column_sum(std::size_t truth) const;

    // Elementwise merge of shards evaluated with the same class list.
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

ConfusionMatrix zero_matrix(std::vector<std::string> class_list);

ConfusionMatrix accumulate(std::span<const std::string> predicted, std::span<const std::string> truth,
                           std::vector<std::string> class_list = {"CI", "CP", "N"});

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;  // true-class count
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;  // aligned with class_list
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    // Support-weighted means.
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
};

// 0/0 is defined as 0 everywhere. Throws on an empty matrix.
MetricsReport metrics(const ConfusionMatrix& cm);

// Deterministic JSON, metrics at 4 decimals.
std::string render_report(const MetricsReport& report, const ConfusionMatrix& cm);
void write_report(const MetricsReport& report, const ConfusionMatrix& cm, const std::filesystem::path& path);

// Counts with percentage of total per cell, precision per row, recall per
// column and accuracy in the corner.
std::string render_text(const ConfusionMatrix& cm);

}  // namespace lungprep::evaluation
