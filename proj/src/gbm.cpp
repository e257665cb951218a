#include "lungprep/gbm.hpp"

#include "lungprep/error.hpp"
#include "lungprep/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lungprep::gbm {

namespace {

// Row-major training matrix in canonical (sorted) example order.
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> x;

    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return x[row * cols + col]; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return std::span<const double>(x).subspan(r * cols, cols);
    }
};

struct SplitCandidate {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, std::span<const double> grad, std::span<const double> hess,
                const TrainConfig& cfg)
        : data_(data), grad_(grad), hess_(hess), cfg_(cfg) {}

    RegressionTree build() {
        std::vector<std::size_t> all(data_.rows);
        std::iota(all.begin(), all.end(), std::size_t{0});
        nodes_.clear();
        grow(all, 0);
        return RegressionTree(std::move(nodes_));
    }

private:
    int grow(const std::vector<std::size_t>& members, int depth) {
        double g = 0.0;
        double h = 0.0;
        for (auto i : members) {
            g += grad_[i];
            h += hess_[i];
        }
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(TreeNode{});
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
        SplitCandidate best;
        if (depth < cfg_.max_depth && members.size() >= 2 * min_leaf) {
            best = find_split(members, g, h);
        }
        if (!best.found) {
            nodes_[id].value = h > 0.0 ? g / h : 0.0;
            return id;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto i : members) {
            (data_.at(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(i);
        }
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    // Exhaustive scan over features (ascending) and midpoints between
    // consecutive distinct values (ascending). Only strictly better gains
    // replace the incumbent, which realises the (feature, threshold) tie-break.
    SplitCandidate find_split(const std::vector<std::size_t>& members, double g_total, double h_total) const {
        SplitCandidate best;
        const std::size_t n = members.size();
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
        const double parent = h_total > 0.0 ? g_total * g_total / h_total : 0.0;
        std::vector<std::size_t> order(members);
        for (std::size_t f = 0; f < data_.cols; ++f) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return data_.at(a, f) < data_.at(b, f);
            });
            double gl = 0.0;
            double hl = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                gl += grad_[order[k - 1]];
                hl += hess_[order[k - 1]];
                const double lo = data_.at(order[k - 1], f);
                const double hi = data_.at(order[k], f);
                if (k < min_leaf || n - k < min_leaf || !(lo < hi)) continue;
                const double gr = g_total - gl;
                const double hr = h_total - hl;
                if (!(hl > 0.0) || !(hr > 0.0)) continue;
                const double gain = gl * gl / hl + gr * gr / hr - parent;
                if (gain > 0.0 && (!best.found || gain > best.gain)) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (!(threshold < hi)) threshold = lo;
                    best = {true, static_cast<int>(f), threshold, gain};
                }
            }
        }
        return best;
    }

    const Dataset& data_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    const TrainConfig& cfg_;
    std::vector<TreeNode> nodes_;
};

double mean_log_loss(std::span<const double> margins, std::span<const double> targets) {
    double total = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) total += log_loss(margins[i], targets[i]);
    return total / static_cast<double>(margins.size());
}

std::string render_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T, typename F>
std::string render_array(const std::vector<T>& items, F render) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += render(items[i]);
    }
    return out + "]";
}

std::string render_tree(const RegressionTree& tree) {
    return render_array(tree.nodes(), [](const TreeNode& n) {
        if (n.is_leaf()) return "{\"leaf\": " + render_number(n.value) + "}";
        return "{\"feature\": " + std::to_string(n.feature) + ", \"threshold\": " +
               render_number(n.threshold) + ", \"left\": " + std::to_string(n.left) +
               ", \"right\": " + std::to_string(n.right) + "}";
    });
}

[[noreturn]] void malformed(const std::string& what) {
    throw InputError("malformed model file: " + what);
}

}  // namespace

void TrainConfig::validate() const {
    if (rounds < 1) throw InputError("gbm: rounds must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw InputError("gbm: learning rate must be in (0, 1]");
    }
    if (max_depth < 1) throw InputError("gbm: max depth must be >= 1");
    if (min_leaf < 1) throw InputError("gbm: min leaf must be >= 1");
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw InvariantError("RegressionTree: no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.is_leaf()) continue;
        const auto valid_child = [&](int c) {
            return c > static_cast<int>(i) && c < static_cast<int>(nodes_.size());
        };
        if (!valid_child(n.left) || !valid_child(n.right)) {
            throw InputError("RegressionTree: child index out of order");
        }
    }
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& n = nodes_[i];
        if (static_cast<std::size_t>(n.feature) >= x.size()) {
            throw InputError("gbm: feature index beyond vector length (schema mismatch)");
        }
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return i;
}

double RegressionTree::evaluate(std::span<const double> x) const {
    return nodes_[leaf_index(x)].value;
}

int RegressionTree::depth() const {
    std::vector<int> level(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes_[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

double sigmoid(double margin) {
    if (margin >= 0.0) return 1.0 / (1.0 + std::exp(-margin));
    const double e = std::exp(margin);
    return e / (1.0 + e);
}

double log_loss(double margin, double target) {
    // log(1 + e^m) - y * m, evaluated without overflow.
    const double softplus = margin > 0.0 ? margin + std::log1p(std::exp(-margin)) : std::log1p(std::exp(margin));
    return softplus - target * margin;
}

GbmModel fit_gbm(std::span<const FeatureVector> features, std::span<const std::string> labels,
                 const TrainConfig& cfg) {
    cfg.validate();
    if (features.size() != labels.size()) {
        throw InputError("gbm: feature and label counts differ");
    }
    if (features.size() < 2) {
        throw InputError("gbm: need at least 2 examples");
    }
    const std::string& schema_id = features.front().schema_id;
    const std::size_t dim = features.front().values.size();
    for (const auto& fv : features) {
        if (fv.schema_id != schema_id || fv.values.size() != dim) {
            throw InputError("gbm: schema mismatch between training vectors");
        }
    }
    const std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        throw InputError("single-class input");
    }
    std::vector<std::string> classes = cfg.class_list;
    if (classes.empty()) classes.assign(distinct.begin(), distinct.end());
    if (std::set<std::string>(classes.begin(), classes.end()).size() != classes.size()) {
        throw InputError("gbm: duplicate class in class list");
    }
    for (const auto& label : distinct) {
        if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
            throw InputError("gbm: label '" + label + "' not in class list");
        }
    }
    for (const auto& c : classes) {
        if (!distinct.contains(c)) {
            throw InputError("gbm: class '" + c + "' has no training examples");
        }
    }

    // Canonical example order makes the fit independent of input order.
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (features[a].values != features[b].values) return features[a].values < features[b].values;
        return labels[a] < labels[b];
    });
    Dataset data{features.size(), dim, {}};
    data.x.reserve(data.rows * dim);
    std::vector<std::string> sorted_labels;
    for (auto i : order) {
        data.x.insert(data.x.end(), features[i].values.begin(), features[i].values.end());
        sorted_labels.push_back(labels[i]);
    }

    GbmModel model;
    model.schema_id = schema_id;
    model.class_list = classes;
    model.learning_rate = cfg.learning_rate;

    // Forest k models P(class = targets_for[k]).
    std::vector<std::string> targets_for;
    if (classes.size() == 2) {
        targets_for.push_back(classes[1]);
    } else {
        targets_for = classes;
    }
    const std::size_t n = data.rows;
    std::vector<std::vector<double>> targets(targets_for.size(), std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> margins(targets_for.size());
    for (std::size_t k = 0; k < targets_for.size(); ++k) {
        double positives = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            targets[k][i] = sorted_labels[i] == targets_for[k] ? 1.0 : 0.0;
            positives += targets[k][i];
        }
        const double prior = positives / static_cast<double>(n);
        model.init_scores.push_back(std::log(prior / (1.0 - prior)));
        margins[k].assign(n, model.init_scores.back());
    }
    model.forests.resize(targets_for.size());
    if (n < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
        return model;
    }

    std::vector<double> grad(n);
    std::vector<double> hess(n);
    for (int round = 0; round < cfg.rounds; ++round) {
        double round_loss = 0.0;
        for (std::size_t k = 0; k < targets_for.size(); ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = sigmoid(margins[k][i]);
                grad[i] = targets[k][i] - p;
                hess[i] = p * (1.0 - p);
            }
            RegressionTree tree = TreeBuilder(data, grad, hess, cfg).build();
            for (std::size_t i = 0; i < n; ++i) {
                margins[k][i] += cfg.learning_rate * tree.evaluate(data.row(i));
            }
            model.forests[k].push_back(std::move(tree));
            round_loss += mean_log_loss(margins[k], targets[k]);
        }
        model.per_round_loss.push_back(round_loss / static_cast<double>(targets_for.size()));
    }
    return model;
}

std::vector<double> predict_margin(const GbmModel& model, const FeatureVector& x) {
    if (x.schema_id != model.schema_id) {
        throw InputError("gbm: schema mismatch (model " + model.schema_id + ", vector " + x.schema_id + ")");
    }
    std::vector<double> scores;
    scores.reserve(model.forests.size());
    for (std::size_t k = 0; k < model.forests.size(); ++k) {
        double sum = 0.0;
        for (const auto& tree : model.forests[k]) sum += tree.evaluate(x.values);
        scores.push_back(model.init_scores[k] + model.learning_rate * sum);
    }
    return scores;
}

LabelPrediction predict_label(const GbmModel& model, const FeatureVector& x) {
    const auto margins = predict_margin(model, x);
    if (model.is_binary()) {
        const double p = sigmoid(margins.front());
        if (p >= 0.5) return {model.class_list[1], p};
        return {model.class_list[0], 1.0 - p};
    }
    std::vector<double> probs(margins.size());
    std::transform(margins.begin(), margins.end(), probs.begin(), sigmoid);
    const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    return {model.class_list[best], total > 0.0 ? probs[best] / total : 0.0};
}

std::string serialize_model(const GbmModel& model) {
    using nlohmann::json;
    std::string out = "{\n";
    out += "  \"version\": " + std::to_string(kModelVersion) + ",\n";
    out += "  \"schema_id\": " + json(model.schema_id).dump() + ",\n";
    out += "  \"class_list\": " +
           render_array(model.class_list, [](const std::string& s) { return json(s).dump(); }) + ",\n";
    out += "  \"init_scores\": " + render_array(model.init_scores, render_number) + ",\n";
    out += "  \"learning_rate\": " + render_number(model.learning_rate) + ",\n";
    out += "  \"forests\": [";
    for (std::size_t k = 0; k < model.forests.size(); ++k) {
        out += k == 0 ? "\n    [" : ",\n    [";
        const auto& forest = model.forests[k];
        for (std::size_t t = 0; t < forest.size(); ++t) {
            out += t == 0 ? "\n      " : ",\n      ";
            out += render_tree(forest[t]);
        }
        out += forest.empty() ? "]" : "\n    ]";
    }
    out += model.forests.empty() ? "],\n" : "\n  ],\n";
    out += "  \"per_round_loss\": " + render_array(model.per_round_loss, render_number) + "\n";
    out += "}\n";
    return out;
}

GbmModel parse_model(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        malformed(e.what());
    }
    try {
        if (!doc.is_object()) malformed("top level is not an object");
        if (!doc.contains("version") || doc.at("version").get<int>() != kModelVersion) {
            throw InputError("model version mismatch");
        }
        GbmModel model;
        model.schema_id = doc.at("schema_id").get<std::string>();
        model.class_list = doc.at("class_list").get<std::vector<std::string>>();
        model.init_scores = doc.at("init_scores").get<std::vector<double>>();
        model.learning_rate = doc.at("learning_rate").get<double>();
        model.per_round_loss = doc.at("per_round_loss").get<std::vector<double>>();
        for (const auto& forest_doc : doc.at("forests")) {
            std::vector<RegressionTree> forest;
            for (const auto& tree_doc : forest_doc) {
                std::vector<TreeNode> nodes;
                for (const auto& node_doc : tree_doc) {
                    TreeNode node;
                    if (node_doc.contains("leaf")) {
                        node.value = node_doc.at("leaf").get<double>();
                    } else {
                        node.feature = node_doc.at("feature").get<int>();
                        node.threshold = node_doc.at("threshold").get<double>();
                        node.left = node_doc.at("left").get<int>();
                        node.right = node_doc.at("right").get<int>();
                        if (node.feature < 0) malformed("negative feature index");
                    }
                    nodes.push_back(node);
                }
                forest.emplace_back(std::move(nodes));
            }
            model.forests.push_back(std::move(forest));
        }
        if (model.class_list.size() < 2) malformed("fewer than two classes");
        const std::size_t expected = model.is_binary() ? 1 : model.class_list.size();
        if (model.forests.size() != expected || model.init_scores.size() != expected) {
            malformed("forest count does not match class list");
        }
        return model;
    } catch (const json::exception& e) {
        malformed(e.what());
    }
}

void save_model(const GbmModel& model, const std::filesystem::path& path) {
    write_file_text(path, serialize_model(model));
}

GbmModel load_model(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_model(std::string(bytes.begin(), bytes.end()));
}

}  // namespace lungprep::gbm
