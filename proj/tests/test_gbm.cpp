#include "oracles.hpp"

#include "lungprep/error.hpp"
#include "lungprep/gbm.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

using namespace lungprep;
using namespace lungprep::gbm;

namespace {

struct Labelled {
    std::vector<FeatureVector> x;
    std::vector<std::string> y;
};

Labelled clusters(std::uint64_t seed, int n, double separation, int dim = 2) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Labelled d;
    for (int i = 0; i < n; ++i) {
        const bool pos = i % 2 == 1;
        FeatureVector fv{"s" + std::to_string(i), "ext-" + std::to_string(dim), {}};
        for (int k = 0; k < dim; ++k) fv.values.push_back((pos ? separation : -separation) / 2 + noise(rng));
        d.x.push_back(fv);
        d.y.push_back(pos ? "CP" : "N");
    }
    return d;
}

double accuracy(const GbmModel& model, const Labelled& d) {
    int hits = 0;
    for (std::size_t i = 0; i < d.x.size(); ++i) hits += predict_label(model, d.x[i]).label == d.y[i];
    return static_cast<double>(hits) / d.x.size();
}

// Mean training loss of the forest truncated to `rounds` trees, summed per
// example from the prediction path.
double truncated_loss(const GbmModel& model, const Labelled& d, std::size_t rounds) {
    GbmModel cut = model;
    for (auto& forest : cut.forests) forest.resize(std::min(rounds, forest.size()));
    double total = 0.0;
    for (std::size_t k = 0; k < cut.forests.size(); ++k) {
        const std::string& target = cut.is_binary() ? cut.class_list[1] : cut.class_list[k];
        double sum = 0.0;
        for (std::size_t i = 0; i < d.x.size(); ++i)
            sum += oracle::log_loss(predict_margin(cut, d.x[i])[k], d.y[i] == target ? 1.0 : 0.0);
        total += sum / d.x.size();
    }
    return total / cut.forests.size();
}

std::vector<FeatureVector> stump_points() {
    std::vector<FeatureVector> x;
    for (int i = 0; i < 4; ++i) x.push_back({"p" + std::to_string(i), "ext-1", {static_cast<double>(i)}});
    return x;
}

}  // namespace

TEST_CASE("four-point stump matches the hand computation") {
    const auto x = stump_points();
    const std::vector<std::string> y{"N", "N", "CP", "CP"};
    TrainConfig cfg;
    cfg.rounds = 1;
    cfg.max_depth = 1;
    cfg.learning_rate = 1.0;
    cfg.min_leaf = 1;
    cfg.class_list = {"N", "CP"};
    const auto model = fit_gbm(x, y, cfg);

    // prior 1/2 -> init 0; p = 1/2, residuals -0.5,-0.5,0.5,0.5, hessians 0.25.
    // Left leaf G/H = -1 / 0.5 = -2, right +2.
    REQUIRE(model.forests.size() == 1);
    REQUIRE(model.forests[0].size() == 1);
    CHECK(model.init_scores[0] == 0.0);
    const auto& nodes = model.forests[0][0].nodes();
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].feature == 0);
    CHECK(nodes[0].threshold == 1.5);
    CHECK(std::abs(nodes[nodes[0].left].value - (-2.0)) < 1e-12);
    CHECK(std::abs(nodes[nodes[0].right].value - 2.0) < 1e-12);
    const double p0 = 1.0 / (1.0 + std::exp(2.0));
    CHECK(std::abs(sigmoid(predict_margin(model, x[0])[0]) - p0) < 1e-12);
    CHECK(std::abs(p0 - 0.1192) < 1e-4);
    CHECK(std::abs(predict_margin(model, x[3])[0] - 2.0) < 1e-12);
    CHECK(predict_label(model, x[0]).label == "N");
    CHECK(predict_label(model, x[3]).label == "CP");
    CHECK(accuracy(model, {x, y}) == 1.0);
}

TEST_CASE("training preconditions") {
    const auto x = stump_points();
    CHECK_THROWS_WITH_AS(fit_gbm(x, std::vector<std::string>(4, "N")), "single-class input", InputError);
    auto bad = x;
    bad[2].schema_id = "ext-9";
    CHECK_THROWS_AS(fit_gbm(bad, std::vector<std::string>{"N", "N", "CP", "CP"}), InputError);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(fit_gbm(x, std::vector<std::string>{"N", "N", "CP", "CP"}, cfg), InputError);
    cfg = {};
    cfg.class_list = {"CP", "CI"};
    CHECK_THROWS_AS(fit_gbm(x, std::vector<std::string>{"N", "N", "CP", "CP"}, cfg), InputError);
}

TEST_CASE("too few examples to split gives an init-only model") {
    const auto x = stump_points();
    const std::vector<std::string> y{"N", "CP", "CP", "CP"};
    const auto model = fit_gbm(x, y);  // min_leaf 5
    REQUIRE(model.forests.size() == 1);
    CHECK(model.forests[0].empty());
    CHECK(model.per_round_loss.empty());
    // Sorted class list {CP, N}; the forest models N with prior 1/4.
    CHECK(model.init_scores[0] == doctest::Approx(std::log(1.0 / 3.0)));
    CHECK(predict_margin(model, x[0]) == model.init_scores);
}

TEST_CASE("separable clusters") {
    const auto train = clusters(41, 200, 6.0);
    const auto test = clusters(42, 200, 6.0);
    const auto model = fit_gbm(train.x, train.y);
    CHECK(model.forests.at(0).size() == 100);
    CHECK(accuracy(model, train) >= 0.99);
    CHECK(accuracy(model, test) >= 0.90);
    for (std::size_t r = 1; r < model.per_round_loss.size(); ++r)
        CHECK(model.per_round_loss[r] <= model.per_round_loss[r - 1]);
    for (std::size_t r : {1u, 10u, 50u, 100u})
        CHECK(std::abs(truncated_loss(model, train, r) - model.per_round_loss[r - 1]) < 1e-12);
}

TEST_CASE("loss is nonincreasing over seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = clusters(100 + seed, 120, 1.5, 3);
        TrainConfig cfg;
        cfg.rounds = 30;
        const auto model = fit_gbm(d.x, d.y, cfg);
        REQUIRE(model.per_round_loss.size() == 30);
        for (std::size_t r = 1; r < 30; ++r) CHECK(model.per_round_loss[r] <= model.per_round_loss[r - 1]);
        CHECK(std::abs(truncated_loss(model, d, 30) - model.per_round_loss.back()) < 1e-12);
    }
}

TEST_CASE("structure: depth bound and min_leaf") {
    const auto d = clusters(43, 150, 1.0, 4);
    for (int depth : {1, 2, 4}) {
        for (int min_leaf : {1, 5, 20}) {
            TrainConfig cfg;
            cfg.rounds = 5;
            cfg.max_depth = depth;
            cfg.min_leaf = min_leaf;
            const auto model = fit_gbm(d.x, d.y, cfg);
            for (const auto& tree : model.forests[0]) {
                CHECK(tree.depth() <= depth);
                std::map<std::size_t, int> counts;
                for (const auto& fv : d.x) ++counts[tree.leaf_index(fv.values)];
                for (const auto& [leaf, n] : counts) CHECK(n >= min_leaf);
                std::size_t leaves = 0;
                for (const auto& node : tree.nodes()) leaves += node.is_leaf();
                CHECK(counts.size() == leaves);
            }
        }
    }
}

TEST_CASE("fit is invariant to example order") {
    auto d = clusters(44, 90, 1.0, 3);
    d.y[4] = "CI";
    d.y[9] = "CI";
    d.y[16] = "CI";
    d.y[23] = "CI";
    d.y[30] = "CI";
    d.y[41] = "CI";
    TrainConfig cfg;
    cfg.rounds = 15;
    const auto model = fit_gbm(d.x, d.y, cfg);
    REQUIRE(model.forests.size() == 3);
    std::mt19937_64 rng(45);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::size_t> perm(d.x.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Labelled shuffled;
        for (auto i : perm) {
            shuffled.x.push_back(d.x[i]);
            shuffled.y.push_back(d.y[i]);
        }
        const auto again = fit_gbm(shuffled.x, shuffled.y, cfg);
        CHECK(serialize_model(again) == serialize_model(model));
        for (const auto& fv : d.x) CHECK(predict_margin(again, fv) == predict_margin(model, fv));
    }
}

TEST_CASE("a perfectly separating feature yields a perfect stump") {
    Labelled d;
    std::mt19937_64 rng(46);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        const bool pos = i % 3 == 0;
        d.x.push_back({"i" + std::to_string(i), "ext-3", {u(rng), pos ? 2.0 + u(rng) : u(rng), u(rng)}});
        d.y.push_back(pos ? "CP" : "N");
    }
    TrainConfig cfg;
    cfg.rounds = 1;
    cfg.max_depth = 1;
    cfg.learning_rate = 1.0;
    const auto model = fit_gbm(d.x, d.y, cfg);
    CHECK(accuracy(model, d) == 1.0);
    CHECK(model.forests[0][0].nodes()[0].feature == 1);
}

TEST_CASE("predict_label confidence rules") {
    GbmModel binary;
    binary.schema_id = "ext-1";
    binary.class_list = {"N", "CP"};
    binary.init_scores = {0.0};
    binary.forests.resize(1);
    const FeatureVector x{"x", "ext-1", {0.0}};
    const auto tie = predict_label(binary, x);
    CHECK(tie.label == "CP");
    CHECK(tie.confidence == 0.5);

    binary.init_scores = {-0.7};
    const auto neg = predict_label(binary, x);
    CHECK(neg.label == "N");
    CHECK(neg.confidence + sigmoid(-0.7) == doctest::Approx(1.0).epsilon(1e-15));

    GbmModel multi;
    multi.schema_id = "ext-1";
    multi.class_list = {"CI", "CP", "N"};
    const double logit = std::log(0.2 / 0.8);
    multi.init_scores = {logit, logit, logit};
    multi.forests.resize(3);
    const auto first = predict_label(multi, x);
    CHECK(first.label == "CI");
    CHECK(first.confidence == doctest::Approx(1.0 / 3.0));
    multi.init_scores = {-1.0, 0.5, 0.2};
    const auto ordered = predict_label(multi, x);
    CHECK(ordered.label == "CP");
    const double pcp = sigmoid(0.5);
    CHECK(ordered.confidence == doctest::Approx(pcp / (sigmoid(-1.0) + pcp + sigmoid(0.2))));
    CHECK_THROWS_AS(predict_label(multi, FeatureVector{"x", "ext-2", {0.0, 0.0}}), InputError);

    // A tree with zero leaves leaves the margin unchanged.
    GbmModel padded = multi;
    padded.forests[1].push_back(RegressionTree({TreeNode{0, 0.3, 1, 2, 0.0}, TreeNode{}, TreeNode{}}));
    CHECK(predict_margin(padded, x) == predict_margin(multi, x));
}

TEST_CASE("multiclass confidences are in range") {
    auto d = clusters(47, 120, 2.0, 2);
    for (std::size_t i = 0; i < d.y.size(); i += 3) d.y[i] = "CI";
    TrainConfig cfg;
    cfg.rounds = 10;
    const auto model = fit_gbm(d.x, d.y, cfg);
    CHECK(model.class_list == std::vector<std::string>{"CI", "CP", "N"});
    for (const auto& fv : d.x) {
        const auto p = predict_label(model, fv);
        CHECK(p.confidence >= 0.0);
        CHECK(p.confidence <= 1.0);
    }
}

TEST_CASE("model JSON round-trip") {
    const auto d = clusters(48, 100, 2.0, 3);
    TrainConfig cfg;
    cfg.rounds = 20;
    cfg.class_list = {"N", "CP"};
    const auto model = fit_gbm(d.x, d.y, cfg);
    const auto text = serialize_model(model);
    CHECK(text.starts_with("{\n  \"version\": 1,\n  \"schema_id\": \"ext-3\",\n  \"class_list\": [\"N\", \"CP\"]"));
    const auto back = parse_model(text);
    CHECK(serialize_model(back) == text);
    std::mt19937_64 rng(49);
    for (int i = 0; i < 100; ++i) {
        const auto v = oracle::random_image(rng, 3, 1, -4.0, 4.0);
        const FeatureVector fv{"r", "ext-3", {v.samples().begin(), v.samples().end()}};
        CHECK(predict_margin(back, fv) == predict_margin(model, fv));
    }
    CHECK(serialize_model(fit_gbm(d.x, d.y, cfg)) == text);

    CHECK_THROWS_AS(parse_model(text.substr(0, text.size() / 2)), InputError);
    CHECK_THROWS_AS(parse_model(""), InputError);
    std::string other = text;
    other.replace(other.find("\"version\": 1"), 12, "\"version\": 2");
    CHECK_THROWS_WITH_AS(parse_model(other), "model version mismatch", InputError);
}
