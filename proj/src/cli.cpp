#include "lungprep/cli.hpp"

#include "lungprep/csv.hpp"
#include "lungprep/ensemble.hpp"
#include "lungprep/error.hpp"
#include "lungprep/evaluation.hpp"
#include "lungprep/features.hpp"
#include "lungprep/gbm.hpp"
#include "lungprep/manifest.hpp"
#include "lungprep/pgm.hpp"
#include "lungprep/records.hpp"
#include "lungprep/segmentation.hpp"
#include "lungprep/synthetic.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <thread>

namespace lungprep::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static const auto instance = [] {
        auto log = std::make_shared<spdlog::logger>("lungprep", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        log->set_pattern("[%l] %v");
        const char* env = std::getenv("LUNGPREP_LOG");
        const std::string level = env ? env : "info";
        if (level == "quiet") {
            log->set_level(spdlog::level::err);
        } else if (level == "debug") {
            log->set_level(spdlog::level::debug);
        } else {
            log->set_level(spdlog::level::info);
        }
        return log;
    }();
    return instance;
}

// Runs body(i) for i in [0, n) on `jobs` threads. Each index writes only its
// own output slot, so results do not depend on scheduling. The exception of
// the lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(n);
    const auto guarded = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) guarded(i);
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

fs::path resolve_image(const fs::path& manifest, const std::string& image_path) {
    const fs::path p(image_path);
    return p.is_absolute() ? p : manifest.parent_path() / p;
}

std::map<std::string, const ManifestRow*> index_by_id(const std::vector<ManifestRow>& rows) {
    std::map<std::string, const ManifestRow*> index;
    for (const auto& r : rows) {
        if (!index.emplace(r.image_id(), &r).second) {
            throw InputError("manifest: two rows share image id '" + r.image_id() + "'");
        }
    }
    return index;
}

std::vector<double> parse_weights(const std::string& text) {
    std::vector<double> out;
    for (const auto& f : csv::split(text)) out.push_back(csv::parse_real(f, "--weights"));
    return out;
}

struct PreprocessArgs {
    std::string manifest;
    std::string out_dir;
    int select_threshold = 200;
    double select_fraction = 0.40;
    double sigma = 1.0;
    int dilate_iters = 2;
    int jobs = 1;
};

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
    const auto rows = read_manifest(a.manifest);
    if (rows.empty()) throw InputError("no rows in manifest " + a.manifest);
    index_by_id(rows);
    PreprocessConfig cfg;
    cfg.selection.intensity_threshold = a.select_threshold;
    cfg.selection.min_dark_fraction = a.select_fraction;
    cfg.selection.validate();
    cfg.crop.sigma = a.sigma;
    cfg.crop.dilate_iterations = a.dilate_iters;
    if (!(a.sigma > 0.0)) throw InputError("--sigma must be positive");
    if (a.dilate_iters < 1) throw InputError("--dilate-iters must be >= 1");
    fs::create_directories(a.out_dir);

    std::vector<LogEntry> entries(rows.size());
    std::vector<char> failed(rows.size(), 0);
    parallel_for(rows.size(), a.jobs, [&](std::size_t i) {
        const auto& row = rows[i];
        PreprocessedRecord record;
        record.image_id = row.image_id();
        try {
            const GrayImage raw = load_image(resolve_image(a.manifest, row.image_path));
            record = preprocess_image(row.image_id(), raw, cfg);
            write_record_rasters(record, a.out_dir);
        } catch (const InputError& e) {
            record = PreprocessedRecord{};
            record.image_id = row.image_id();
            record.reason = e.what();
            failed[i] = 1;
        }
        entries[i] = log_entry(record);
    });
    write_file_text(fs::path(a.out_dir) / kPreprocessLogName, render_log(entries));

    std::size_t selected = 0;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        selected += entries[i].selected ? 1 : 0;
        failures += failed[i];
        if (failed[i]) logger()->warn("{}: {}", entries[i].image_id, entries[i].reason);
    }
    out << "rows=" << rows.size() << " selected=" << selected << " rejected=" << rows.size() - selected
        << " failed=" << failures << "\n";
    if (failures == rows.size()) {
        throw InputError("every image failed to load");
    }
    return kSuccess;
}

int cmd_features(const std::string& preprocess_dir, const std::string& out_path, const std::string& embeddings,
                 int jobs, std::ostream& out) {
    if (!embeddings.empty()) {
        const FeatureTable table = load_embeddings(embeddings);
        write_features(table.schema, table.vectors, out_path);
        out << "vectors=" << table.vectors.size() << " schema=" << table.schema.schema_id << "\n";
        return kSuccess;
    }
    if (preprocess_dir.empty()) throw UsageError("features: --preprocess-dir or --embeddings is required");
    const auto entries = read_log(fs::path(preprocess_dir) / kPreprocessLogName);
    std::vector<const LogEntry*> selected;
    for (const auto& e : entries) {
        if (e.selected) selected.push_back(&e);
    }
    std::vector<FeatureVector> vectors(selected.size());
    parallel_for(selected.size(), jobs, [&](std::size_t i) {
        const auto slice = read_record_rasters(selected[i]->image_id, preprocess_dir);
        vectors[i] = classical_features(selected[i]->image_id, slice.gray, slice.mask);
    });
    write_features(classic_schema(), vectors, out_path);
    out << "vectors=" << vectors.size() << " schema=" << classic_schema().schema_id << "\n";
    return kSuccess;
}

struct TrainArgs {
    std::string features;
    std::string manifest;
    std::string model;
    int rounds = 100;
    double lr = 0.1;
    int depth = 3;
    int min_leaf = 5;
    std::string classes = "CP,N";
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const FeatureTable table = load_embeddings(a.features);
    const auto rows = read_manifest(a.manifest);
    const auto index = index_by_id(rows);
    const auto classes = parse_diagnosis_list(a.classes);
    if (classes.size() < 2) throw InputError("--classes needs at least two labels");

    std::vector<FeatureVector> train;
    std::vector<std::string> labels;
    for (const auto& fv : table.vectors) {
        const auto it = index.find(fv.image_id);
        if (it == index.end()) {
            logger()->debug("{}: not in manifest, skipped", fv.image_id);
            continue;
        }
        if (std::find(classes.begin(), classes.end(), it->second->label) == classes.end()) continue;
        train.push_back(fv);
        labels.emplace_back(to_string(it->second->label));
    }
    gbm::TrainConfig cfg;
    cfg.rounds = a.rounds;
    cfg.learning_rate = a.lr;
    cfg.max_depth = a.depth;
    cfg.min_leaf = a.min_leaf;
    for (auto d : classes) cfg.class_list.emplace_back(to_string(d));
    const gbm::GbmModel model = gbm::fit_gbm(train, labels, cfg);
    for (std::size_t r = 0; r < model.per_round_loss.size(); ++r) {
        out << "round=" << r + 1 << " loss=" << csv::fixed(model.per_round_loss[r], 6) << "\n";
    }
    gbm::save_model(model, a.model);
    out << "examples=" << train.size() << " classes=" << a.classes << "\n";
    return kSuccess;
}

int cmd_predict(const std::string& model_path, const std::string& features, const std::string& out_path,
                const std::string& model_id, const std::string& manifest, std::ostream& out) {
    const gbm::GbmModel model = gbm::load_model(model_path);
    const FeatureTable table = load_embeddings(features);
    std::set<std::string> keep;
    if (!manifest.empty()) {
        for (const auto& r : read_manifest(manifest)) keep.insert(r.image_id());
    }
    ensemble::PredictionFile file;
    file.model_id = model_id;
    for (const auto& c : model.class_list) {
        const auto d = parse_diagnosis(c);
        if (!d) throw InputError("model class '" + c + "' is not one of CI, CP, N");
        file.classes.push_back(*d);
    }
    for (const auto& fv : table.vectors) {
        if (!manifest.empty() && !keep.contains(fv.image_id)) continue;
        const auto p = gbm::predict_label(model, fv);
        file.predictions.push_back({model_id, fv.image_id, file.classes, *parse_diagnosis(p.label), p.confidence});
    }
    ensemble::write_predictions(file, out_path);
    out << "predictions=" << file.predictions.size() << " model=" << model_id << "\n";
    return kSuccess;
}

int cmd_ensemble(const std::vector<std::string>& pred_paths, const std::string& weights_text,
                 const std::string& tie_order, const std::string& out_path, std::ostream& out) {
    if (pred_paths.empty() || pred_paths.size() > 3) throw UsageError("ensemble: give 1 to 3 --preds files");
    ensemble::EnsembleConfig cfg;
    cfg.tie_order = parse_diagnosis_list(tie_order);
    std::vector<ensemble::PredictionFile> files;
    for (const auto& p : pred_paths) files.push_back(ensemble::read_predictions(p));
    if (!weights_text.empty()) {
        const auto weights = parse_weights(weights_text);
        if (weights.size() != files.size()) throw UsageError("--weights must list one weight per --preds file");
        for (std::size_t i = 0; i < files.size(); ++i) cfg.weights[files[i].model_id] = weights[i];
    }
    std::map<std::string, std::vector<ensemble::ModelPrediction>> by_image;
    std::set<std::string> model_ids;
    for (const auto& f : files) {
        if (!model_ids.insert(f.model_id).second) throw InputError("ensemble: duplicate model id " + f.model_id);
        for (const auto& p : f.predictions) by_image[p.image_id].push_back(p);
    }
    std::vector<ensemble::FinalPrediction> rows;
    for (const auto& [image_id, preds] : by_image) {
        const auto d = ensemble::combine(preds, cfg);
        rows.push_back({image_id, d.label, d.score});
    }
    ensemble::write_final(rows, out_path);
    out << "images=" << rows.size() << " models=" << files.size() << "\n";
    return kSuccess;
}

int cmd_evaluate(const std::string& preds_path, const std::string& manifest, const std::string& report_path,
                 const std::string& classes_text, std::ostream& out) {
    const auto preds = ensemble::read_labelled(preds_path);
    const auto rows = read_manifest(manifest);
    const auto index = index_by_id(rows);
    std::vector<std::string> class_list;
    for (auto d : parse_diagnosis_list(classes_text)) class_list.emplace_back(to_string(d));
    std::vector<std::string> predicted;
    std::vector<std::string> truth;
    for (const auto& p : preds) {
        const auto it = index.find(p.image_id);
        if (it == index.end()) throw InputError("prediction id '" + p.image_id + "' is not in the manifest");
        predicted.emplace_back(to_string(p.label));
        truth.emplace_back(to_string(it->second->label));
    }
    const auto cm = evaluation::accumulate(predicted, truth, class_list);
    const auto report = evaluation::metrics(cm);
    evaluation::write_report(report, cm, report_path);
    fs::path text_path(report_path);
    text_path.replace_extension(".txt");
    write_file_text(text_path, evaluation::render_text(cm));
    out << "n=" << cm.total() << " accuracy=" << csv::fixed(report.accuracy, 4)
        << " macro_f1=" << csv::fixed(report.macro_f1, 4) << "\n";
    return kSuccess;
}

int cmd_split(const std::string& manifest, double fraction, std::uint64_t seed, const std::string& out_dir,
              std::ostream& out) {
    const auto rows = read_manifest(manifest);
    const Split split = split_by_patient(rows, fraction, seed);
    fs::create_directories(out_dir);
    // Relative image paths are rebased onto the output directory.
    const auto rebase = [&](std::vector<ManifestRow> side) {
        for (auto& r : side) {
            const fs::path p(r.image_path);
            if (!p.is_absolute()) {
                r.image_path = fs::relative(fs::absolute(resolve_image(manifest, r.image_path)),
                                            fs::absolute(out_dir))
                                   .generic_string();
            }
        }
        return side;
    };
    write_manifest(rebase(split.train), fs::path(out_dir) / "train.csv");
    write_manifest(rebase(split.test), fs::path(out_dir) / "test.csv");
    out << split_summary(split) << "\n";
    return kSuccess;
}

int cmd_augment(const std::string& manifest, const std::string& out_dir, bool flip, const std::string& rotations,
                std::ostream& out) {
    AugmentSpec spec;
    spec.horizontal_flip = flip;
    if (!rotations.empty()) {
        for (const auto& f : csv::split(rotations)) {
            const std::string t = csv::trim(f);
            if (t == "90") spec.rotations.push_back(Rotation::Deg90);
            else if (t == "180") spec.rotations.push_back(Rotation::Deg180);
            else if (t == "270") spec.rotations.push_back(Rotation::Deg270);
            else throw UsageError("--rotations accepts 90, 180 and 270");
        }
    }
    const auto rows = read_manifest(manifest);
    fs::create_directories(fs::path(out_dir) / "images");
    std::vector<ManifestRow> result;
    for (const auto& row : rows) {
        const auto variants = augment(load_image(resolve_image(manifest, row.image_path)), spec);
        std::vector<std::string> suffixes{""};
        if (spec.horizontal_flip) suffixes.push_back("_flip");
        for (auto r : spec.rotations) suffixes.push_back("_rot" + std::to_string(static_cast<int>(r)));
        for (std::size_t k = 0; k < variants.size(); ++k) {
            const auto rel = fs::path("images") / (row.image_id() + suffixes[k] + ".pgm");
            save_pgm(variants[k], fs::path(out_dir) / rel);
            result.push_back({rel.generic_string(), row.patient_id, row.label, row.source});
        }
    }
    write_manifest(result, fs::path(out_dir) / "manifest.csv");
    out << "rows=" << rows.size() << " augmented=" << result.size() << "\n";
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lung CT preprocessing, gradient boosting, ensemble and evaluation toolkit", "lungprep"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    PreprocessArgs pre;
    auto* preprocess = app.add_subcommand("preprocess", "Normalize, select, sharpen, filter and crop slices");
    preprocess->add_option("--manifest", pre.manifest, "Manifest CSV")->required();
    preprocess->add_option("--out-dir", pre.out_dir, "Output directory")->required();
    preprocess->add_option("--select-threshold", pre.select_threshold, "Dark-pixel intensity threshold (8-bit)");
    preprocess->add_option("--select-fraction", pre.select_fraction, "Minimum dark fraction of the ROI");
    preprocess->add_option("--sigma", pre.sigma, "Gaussian sigma for cropping");
    preprocess->add_option("--dilate-iters", pre.dilate_iters, "Dilation iterations for cropping");
    preprocess->add_option("--jobs", pre.jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::string feat_dir, feat_out, feat_emb;
    int feat_jobs = 1;
    auto* features = app.add_subcommand("features", "Compute classical features or validate embeddings");
    features->add_option("--preprocess-dir", feat_dir, "Directory written by preprocess");
    features->add_option("--out", feat_out, "Feature CSV to write")->required();
    features->add_option("--embeddings", feat_emb, "External embedding CSV to validate and pass through");
    features->add_option("--jobs", feat_jobs, "Worker threads")->check(CLI::PositiveNumber);

    TrainArgs tr;
    auto* train = app.add_subcommand("train-gbm", "Fit the gradient-boosting classifier");
    train->add_option("--features", tr.features, "Feature CSV")->required();
    train->add_option("--manifest", tr.manifest, "Manifest with labels")->required();
    train->add_option("--model", tr.model, "Model JSON to write")->required();
    train->add_option("--rounds", tr.rounds, "Boosting rounds");
    train->add_option("--lr", tr.lr, "Learning rate");
    train->add_option("--depth", tr.depth, "Maximum tree depth");
    train->add_option("--min-leaf", tr.min_leaf, "Minimum examples per leaf");
    train->add_option("--classes", tr.classes, "Comma-separated classes to train on");

    std::string pr_model, pr_features, pr_out, pr_id = "gbm", pr_manifest;
    auto* predict = app.add_subcommand("predict", "Write GBM predictions");
    predict->add_option("--model", pr_model, "Model JSON")->required();
    predict->add_option("--features", pr_features, "Feature CSV")->required();
    predict->add_option("--out", pr_out, "Prediction CSV to write")->required();
    predict->add_option("--model-id", pr_id, "Model id recorded in the prediction header");
    predict->add_option("--manifest", pr_manifest, "Only predict images listed in this manifest");

    std::vector<std::string> en_preds;
    std::string en_weights, en_tie = "CP,CI,N", en_out;
    auto* ens = app.add_subcommand("ensemble", "Combine per-model predictions");
    ens->add_option("--preds", en_preds, "Prediction CSVs (1 to 3)")->required()->expected(1, 3);
    ens->add_option("--weights", en_weights, "Comma-separated weights, one per file");
    ens->add_option("--tie-order", en_tie, "Class priority for exact ties");
    ens->add_option("--out", en_out, "Final CSV to write")->required();

    std::string ev_preds, ev_manifest, ev_report, ev_classes = "CI,CP,N";
    auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix and metrics");
    evaluate->add_option("--preds", ev_preds, "Final or per-model prediction CSV")->required();
    evaluate->add_option("--manifest", ev_manifest, "Manifest with true labels")->required();
    evaluate->add_option("--report", ev_report, "Report JSON to write")->required();
    evaluate->add_option("--classes", ev_classes, "Class order of the matrix");

    std::string sp_manifest, sp_out;
    double sp_fraction = 0.2;
    std::uint64_t sp_seed = 0;
    auto* split = app.add_subcommand("split", "Patient-wise train/test split");
    split->add_option("--manifest", sp_manifest, "Manifest CSV")->required();
    split->add_option("--test-fraction", sp_fraction, "Fraction of images for test");
    split->add_option("--seed", sp_seed, "Split seed");
    split->add_option("--out-dir", sp_out, "Directory for train.csv and test.csv")->required();

    std::string au_manifest, au_out, au_rot;
    bool au_flip = false;
    auto* aug = app.add_subcommand("augment", "Flip/rotate every image of a (training) manifest");
    aug->add_option("--manifest", au_manifest, "Manifest CSV")->required();
    aug->add_option("--out-dir", au_out, "Output directory")->required();
    aug->add_flag("--flip", au_flip, "Add a horizontally flipped copy");
    aug->add_option("--rotations", au_rot, "Comma-separated right angles, e.g. 90,180");

    synthetic::DatasetSpec sy;
    std::string sy_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic phantom dataset");
    synth->add_option("--out-dir", sy_out, "Output directory")->required();
    synth->add_option("--patients", sy.patients, "Number of patients");
    synth->add_option("--slices", sy.slices_per_patient, "Slices per patient");
    synth->add_option("--size", sy.size, "Slice width and height");
    synth->add_option("--closed-fraction", sy.closed_fraction, "Share of closed-lung slices");
    synth->add_option("--seed", sy.seed, "Generator seed");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsageError;
    }

    try {
        if (*preprocess) return cmd_preprocess(pre, out);
        if (*features) return cmd_features(feat_dir, feat_out, feat_emb, feat_jobs, out);
        if (*train) return cmd_train(tr, out);
        if (*predict) return cmd_predict(pr_model, pr_features, pr_out, pr_id, pr_manifest, out);
        if (*ens) return cmd_ensemble(en_preds, en_weights, en_tie, en_out, out);
        if (*evaluate) return cmd_evaluate(ev_preds, ev_manifest, ev_report, ev_classes, out);
        if (*split) return cmd_split(sp_manifest, sp_fraction, sp_seed, sp_out, out);
        if (*aug) return cmd_augment(au_manifest, au_out, au_flip, au_rot, out);
        if (*synth) {
            const auto rows = synthetic::write_dataset(sy_out, sy);
            out << "rows=" << rows.size() << " manifest=" << (fs::path(sy_out) / "manifest.csv").generic_string()
                << "\n";
            return kSuccess;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    err << "internal error: no command dispatched\n";
    return kInternalError;
}

}  // namespace lungprep::cli
