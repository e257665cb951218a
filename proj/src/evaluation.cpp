#include "lungprep/evaluation.hpp"

#include "lungprep/csv.hpp"
#include "lungprep/error.hpp"
#include "lungprep/pgm.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

namespace lungprep::evaluation {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) {
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::string percent(double fraction) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (const auto& row : counts)
        for (auto v : row) sum += v;
    return sum;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t predicted) const {
    std::uint64_t sum = 0;
    for (auto v : counts[predicted]) sum += v;
    return sum;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t truth) const {
    std::uint64_t sum = 0;
    for (const auto& row : counts) sum += row[truth];
    return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.class_list != class_list) {
        throw InputError("confusion matrix: cannot merge matrices with different class lists");
    }
    for (std::size_t r = 0; r < counts.size(); ++r)
        for (std::size_t c = 0; c < counts.size(); ++c) counts[r][c] += other.counts[r][c];
    return *this;
}

ConfusionMatrix zero_matrix(std::vector<std::string> class_list) {
    if (class_list.empty()) throw InputError("confusion matrix: empty class list");
    if (std::set<std::string>(class_list.begin(), class_list.end()).size() != class_list.size()) {
        throw InputError("confusion matrix: duplicate class");
    }
    ConfusionMatrix cm;
    const auto k = class_list.size();
    cm.class_list = std::move(class_list);
    cm.counts.assign(k, std::vector<std::uint64_t>(k, 0));
    return cm;
}

ConfusionMatrix accumulate(std::span<const std::string> predicted, std::span<const std::string> truth,
                           std::vector<std::string> class_list) {
    if (predicted.size() != truth.size()) {
        throw InputError("accumulate: prediction and truth lengths differ");
    }
    ConfusionMatrix cm = zero_matrix(std::move(class_list));
    const auto index_of = [&](const std::string& label) {
        const auto it = std::find(cm.class_list.begin(), cm.class_list.end(), label);
        if (it == cm.class_list.end()) throw InputError("accumulate: unknown label '" + label + "'");
        return static_cast<std::size_t>(it - cm.class_list.begin());
    };
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        ++cm.counts[index_of(predicted[i])][index_of(truth[i])];
    }
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw InputError("metrics: empty confusion matrix");
    MetricsReport report;
    const std::size_t k = cm.dimension();
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const auto hit = cm.counts[c][c];
        trace += hit;
        ClassMetrics m;
        m.precision = ratio(hit, cm.row_sum(c));
        m.recall = ratio(hit, cm.column_sum(c));
        m.f1 = harmonic(m.precision, m.recall);
        m.support = cm.column_sum(c);
        report.per_class.push_back(m);
    }
    report.accuracy = ratio(trace, total);
    for (const auto& m : report.per_class) {
        report.macro_precision += m.precision / static_cast<double>(k);
        report.macro_recall += m.recall / static_cast<double>(k);
        report.macro_f1 += m.f1 / static_cast<double>(k);
        const double w = ratio(m.support, total);
        report.weighted_precision += w * m.precision;
        report.weighted_recall += w * m.recall;
        report.weighted_f1 += w * m.f1;
    }
    return report;
}

std::string render_report(const MetricsReport& report, const ConfusionMatrix& cm) {
    using nlohmann::json;
    const auto num = [](double v) { return csv::fixed(v, 4); };
    std::string out = "{\n";
    out += "  \"class_list\": [";
    for (std::size_t i = 0; i < cm.class_list.size(); ++i) {
        out += (i ? ", " : "") + json(cm.class_list[i]).dump();
    }
    out += "],\n  \"counts\": [";
    for (std::size_t r = 0; r < cm.counts.size(); ++r) {
        out += r ? ", [" : "[";
        for (std::size_t c = 0; c < cm.counts[r].size(); ++c) {
            out += (c ? ", " : "") + std::to_string(cm.counts[r][c]);
        }
        out += "]";
    }
    out += "],\n";
    out += "  \"total\": " + std::to_string(cm.total()) + ",\n";
    out += "  \"accuracy\": " + num(report.accuracy) + ",\n";
    out += "  \"per_class\": {";
    for (std::size_t i = 0; i < report.per_class.size(); ++i) {
        const auto& m = report.per_class[i];
        out += (i ? ",\n    " : "\n    ") + json(cm.class_list[i]).dump() + ": {\"precision\": " +
               num(m.precision) + ", \"recall\": " + num(m.recall) + ", \"f1\": " + num(m.f1) +
               ", \"support\": " + std::to_string(m.support) + "}";
    }
    out += "\n  },\n";
    out += "  \"macro_precision\": " + num(report.macro_precision) + ",\n";
    out += "  \"macro_recall\": " + num(report.macro_recall) + ",\n";
    out += "  \"macro_f1\": " + num(report.macro_f1) + ",\n";
    out += "  \"weighted_precision\": " + num(report.weighted_precision) + ",\n";
    out += "  \"weighted_recall\": " + num(report.weighted_recall) + ",\n";
    out += "  \"weighted_f1\": " + num(report.weighted_f1) + "\n";
    out += "}\n";
    return out;
}

void write_report(const MetricsReport& report, const ConfusionMatrix& cm, const std::filesystem::path& path) {
    write_file_text(path, render_report(report, cm));
}

std::string render_text(const ConfusionMatrix& cm) {
    const std::size_t k = cm.dimension();
    const std::uint64_t total = cm.total();
    constexpr std::size_t kCell = 16;
    std::string out = pad("Output\\Target", kCell);
    for (const auto& name : cm.class_list) out += pad(name, kCell);
    out += pad("precision", kCell) + "\n";
    std::uint64_t trace = 0;
    for (std::size_t r = 0; r < k; ++r) {
        out += pad(cm.class_list[r], kCell);
        for (std::size_t c = 0; c < k; ++c) {
            out += pad(std::to_string(cm.counts[r][c]) + " " + percent(ratio(cm.counts[r][c], total)), kCell);
        }
        const double p = ratio(cm.counts[r][r], cm.row_sum(r));
        out += pad(percent(p) + " " + percent(cm.row_sum(r) ? 1.0 - p : 0.0), kCell) + "\n";
        trace += cm.counts[r][r];
    }
    out += pad("recall", kCell);
    for (std::size_t c = 0; c < k; ++c) {
        const double rc = ratio(cm.counts[c][c], cm.column_sum(c));
        out += pad(percent(rc) + " " + percent(cm.column_sum(c) ? 1.0 - rc : 0.0), kCell);
    }
    const double acc = ratio(trace, total);
    out += pad(percent(acc) + " " + percent(total ? 1.0 - acc : 0.0), kCell) + "\n";
    return out;
}

}  // namespace lungprep::evaluation
