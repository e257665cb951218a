#include "lungprep/ensemble.hpp"

#include "lungprep/csv.hpp"
#include "lungprep/error.hpp"
#include "lungprep/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lungprep::ensemble {

namespace {

std::size_t slot(Diagnosis d) {
    return static_cast<std::size_t>(d);
}

bool supports(const std::vector<Diagnosis>& classes, Diagnosis d) {
    return std::find(classes.begin(), classes.end(), d) != classes.end();
}

double parse_confidence(const std::string& text, const std::string& where) {
    const double v = csv::parse_real(text, where);
    if (v < 0.0 || v > 1.0) throw InputError(where + ": confidence outside [0, 1]");
    return v;
}

}  // namespace

void EnsembleConfig::validate() const {
    bool any_positive = default_weight > 0.0;
    if (!(default_weight >= 0.0) || !std::isfinite(default_weight)) {
        throw InputError("ensemble: weights must be finite and nonnegative");
    }
    for (const auto& [id, w] : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw InputError("ensemble: weight for " + id + " must be finite and nonnegative");
        }
        any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw InputError("ensemble: at least one weight must be positive");
    std::set<Diagnosis> seen(tie_order.begin(), tie_order.end());
    if (tie_order.size() != kAllDiagnoses.size() || seen.size() != kAllDiagnoses.size()) {
        throw InputError("ensemble: tie order must list CI, CP and N exactly once");
    }
}

double EnsembleConfig::weight_for(const std::string& model_id) const {
    const auto it = weights.find(model_id);
    return it == weights.end() ? default_weight : it->second;
}

Decision combine(std::span<const ModelPrediction> preds, const EnsembleConfig& cfg) {
    cfg.validate();
    if (preds.empty() || preds.size() > 3) {
        throw InputError("ensemble: expected 1 to 3 predictions per image");
    }
    std::vector<const ModelPrediction*> ordered;
    for (const auto& p : preds) {
        if (p.image_id != preds.front().image_id) {
            throw InputError("ensemble: mismatched image ids (" + p.image_id + " vs " +
                             preds.front().image_id + ")");
        }
        if (!supports(p.supported_classes, p.label)) {
            throw InputError("ensemble: label " + std::string(to_string(p.label)) +
                             " outside the classes supported by " + p.model_id);
        }
        if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
            throw InputError("ensemble: confidence outside [0, 1] from " + p.model_id);
        }
        ordered.push_back(&p);
    }
    // Summing in model-id order makes the result independent of input order.
    std::sort(ordered.begin(), ordered.end(),
              [](const ModelPrediction* a, const ModelPrediction* b) { return a->model_id < b->model_id; });
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        if (ordered[i]->model_id == ordered[i - 1]->model_id) {
            throw InputError("ensemble: duplicate model id " + ordered[i]->model_id);
        }
    }

    Decision decision;
    for (const auto* p : ordered) {
        decision.raw_scores[slot(p->label)] += cfg.weight_for(p->model_id) * p->confidence;
    }
    const double top = *std::max_element(decision.raw_scores.begin(), decision.raw_scores.end());
    const double floor = top - kTieRelativeTolerance * top;
    for (auto d : cfg.tie_order) {
        if (decision.raw_scores[slot(d)] >= floor) {
            decision.label = d;
            break;
        }
    }
    double total = 0.0;
    for (double s : decision.raw_scores) total += s;
    decision.score = total > 0.0 ? decision.raw_scores[slot(decision.label)] / total : 0.0;
    return decision;
}

PredictionFile parse_predictions(const std::vector<std::string>& lines) {
    if (lines.empty() || !lines.front().starts_with("#")) {
        throw InputError("predictions: missing '# model: <id> classes: <list>' line");
    }
    const std::string& meta = lines.front();
    const auto model_pos = meta.find("model:");
    const auto classes_pos = meta.find("classes:");
    if (model_pos == std::string::npos || classes_pos == std::string::npos || classes_pos < model_pos) {
        throw InputError("predictions: malformed model line '" + meta + "'");
    }
    PredictionFile file;
    file.model_id = csv::trim(std::string_view(meta).substr(model_pos + 6, classes_pos - model_pos - 6));
    file.classes = parse_diagnosis_list(csv::trim(std::string_view(meta).substr(classes_pos + 8)));
    if (file.model_id.empty()) throw InputError("predictions: empty model id");
    if (file.classes.empty()) throw InputError("predictions: empty class list");

    std::size_t pos = 1;
    if (pos < lines.size() && csv::trim(lines[pos]).starts_with("image_id")) ++pos;
    std::set<std::string> seen;
    for (; pos < lines.size(); ++pos) {
        if (csv::trim(lines[pos]).empty()) continue;
        const std::string where = "predictions line " + std::to_string(pos + 1);
        const auto fields = csv::split(lines[pos]);
        if (fields.size() != 3) throw InputError(where + ": expected image_id,label,confidence");
        ModelPrediction p;
        p.model_id = file.model_id;
        p.image_id = csv::trim(fields[0]);
        p.supported_classes = file.classes;
        const std::string label = csv::trim(fields[1]);
        const auto d = parse_diagnosis(label);
        if (!d || !supports(file.classes, *d)) {
            throw InputError(where + ": label '" + label + "' outside declared classes");
        }
        p.label = *d;
        p.confidence = parse_confidence(fields[2], where);
        if (!seen.insert(p.image_id).second) throw InputError(where + ": duplicate image_id " + p.image_id);
        file.predictions.push_back(std::move(p));
    }
    return file;
}

PredictionFile read_predictions(const std::filesystem::path& path) {
    return parse_predictions(csv::read_lines(path));
}

std::string render_predictions(const PredictionFile& file) {
    std::vector<const ModelPrediction*> order;
    for (const auto& p : file.predictions) order.push_back(&p);
    std::sort(order.begin(), order.end(),
              [](const ModelPrediction* a, const ModelPrediction* b) { return a->image_id < b->image_id; });
    std::string out = "# model: " + file.model_id + " classes: " + join_diagnoses(file.classes) + "\n";
    out += "image_id,label,confidence\n";
    for (const auto* p : order) {
        out += csv::escape(p->image_id) + "," + std::string(to_string(p->label)) + "," +
               csv::fixed(p->confidence, 6) + "\n";
    }
    return out;
}

void write_predictions(const PredictionFile& file, const std::filesystem::path& path) {
    write_file_text(path, render_predictions(file));
}

std::string render_final(std::vector<FinalPrediction> rows) {
    std::sort(rows.begin(), rows.end(),
              [](const FinalPrediction& a, const FinalPrediction& b) { return a.image_id < b.image_id; });
    std::string out = "image_id,label,score\n";
    for (const auto& r : rows) {
        out += csv::escape(r.image_id) + "," + std::string(to_string(r.label)) + "," +
               csv::fixed(r.score, 6) + "\n";
    }
    return out;
}

void write_final(const std::vector<FinalPrediction>& rows, const std::filesystem::path& path) {
    write_file_text(path, render_final(rows));
}

std::vector<FinalPrediction> read_labelled(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    std::vector<FinalPrediction> rows;
    std::set<std::string> seen;
    bool header_seen = false;
    for (std::size_t pos = 0; pos < lines.size(); ++pos) {
        const std::string line = csv::trim(lines[pos]);
        if (line.empty() || line.starts_with("#")) continue;
        const std::string where = path.filename().string() + " line " + std::to_string(pos + 1);
        const auto fields = csv::split(line);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() < 2 || csv::trim(fields[0]) != "image_id" || csv::trim(fields[1]) != "label") {
                throw InputError(where + ": header must start with image_id,label");
            }
            continue;
        }
        if (fields.size() < 2) throw InputError(where + ": too few columns");
        FinalPrediction row;
        row.image_id = csv::trim(fields[0]);
        const auto d = parse_diagnosis(csv::trim(fields[1]));
        if (!d) throw InputError(where + ": unknown label '" + csv::trim(fields[1]) + "'");
        row.label = *d;
        if (fields.size() >= 3) row.score = csv::parse_real(fields[2], where);
        if (!seen.insert(row.image_id).second) throw InputError(where + ": duplicate image_id " + row.image_id);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace lungprep::ensemble
