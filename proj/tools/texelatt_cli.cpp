// Command-line entry point. Every subcommand reads and writes the file
// formats of the library (PNG, JSON manifests, descriptor CSVs).
//
// Exit codes: 0 success, 1 invalid input or config, 2 stage failure.

#include "texelatt/color_naming.hpp"
#include "texelatt/config.hpp"
#include "texelatt/descriptor.hpp"
#include "texelatt/detection.hpp"
#include "texelatt/distortion.hpp"
#include "texelatt/error.hpp"
#include "texelatt/harness.hpp"
#include "texelatt/io.hpp"
#include "texelatt/parallel.hpp"
#include "texelatt/retrieval.hpp"
#include "texelatt/synthesis.hpp"
#include "texelatt/tamura.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace texelatt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitStage = 2;

/// One image to process, with the ground truth an oracle detector would use.
struct Item {
    std::string id;
    fs::path image;
    fs::path ground_truth;
};

/// Images of a dataset split (`--dataset`) or of a query set (`--queries`).
/// Query items take the ground truth of their database image.
struct ItemSource {
    fs::path dataset;
    fs::path queries;
    std::string split = "test";

    void add_options(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset directory holding manifest.json");
        app->add_option("--queries", queries, "Query-set directory holding queries.json");
        app->add_option("--split", split, "Dataset split: train, test or all")
            ->check(CLI::IsMember({"train", "test", "all"}));
    }

    std::vector<Item> items() const {
        if (dataset.empty() && queries.empty()) throw InvalidArgument("one of --dataset or --queries is required");
        std::map<std::string, fs::path> gt_of;
        std::vector<Item> out;
        if (!dataset.empty()) {
            const auto manifest = io::read_manifest(dataset / "manifest.json");
            std::vector<std::string> wanted;
            if (split == "train" || split == "all")
                wanted.insert(wanted.end(), manifest.train_ids.begin(), manifest.train_ids.end());
            if (split == "test" || split == "all")
                wanted.insert(wanted.end(), manifest.test_ids.begin(), manifest.test_ids.end());
            std::map<std::string, const synth::ManifestEntry*> by_id;
            for (const auto& e : manifest.entries) by_id[e.id] = &e;
            for (const auto& e : manifest.entries) gt_of[e.id] = dataset / e.ground_truth_path;
            if (queries.empty()) {
                for (const auto& id : wanted) {
                    const auto it = by_id.find(id);
                    if (it == by_id.end()) throw InvalidArgument("manifest lists unknown id " + id);
                    out.push_back({id, dataset / it->second->image_path, gt_of[id]});
                }
                return out;
            }
        }
        const auto qm = io::read_query_manifest(queries / "queries.json");
        for (const auto& q : qm.entries) {
            const auto gt = gt_of.find(q.database_id);
            out.push_back({q.query_id, queries / q.image_path, gt == gt_of.end() ? fs::path{} : gt->second});
        }
        return out;
    }
};

config::Method parse_method(const std::string& s) { return config::method_from_string(s); }

std::vector<FeatureRecord> read_records(const fs::path& csv) { return io::read_descriptors_csv(csv).records; }

/// Query id -> database id from a query manifest.
std::map<std::string, std::string> read_truth(const fs::path& queries_dir) {
    std::map<std::string, std::string> truth;
    for (const auto& q : io::read_query_manifest(queries_dir / "queries.json").entries)
        truth[q.query_id] = q.database_id;
    return truth;
}

int cmd_synth(std::size_t n, std::uint64_t seed, int canvas, double split_ratio, const fs::path& out) {
    synth::DatasetOptions options;
    options.n = n;
    options.seed = seed;
    options.canvas_px = canvas;
    options.split_ratio = split_ratio;
    const auto manifest = synth::generate_dataset(options, out);
    std::cout << "wrote " << manifest.entries.size() << " images (" << manifest.train_ids.size() << " train, "
              << manifest.test_ids.size() << " test) to " << out.string() << "\n";
    return kExitOk;
}

int cmd_detect(const ItemSource& source, bool oracle, const fs::path& out, bool evaluate) {
    const auto items = source.items();
    std::vector<detect::DetectionReport> reports(items.size());
    parallel_for(items.size(), [&](std::size_t i) {
        const auto& item = items[i];
        try {
            std::vector<DetectedTexel> detections;
            std::optional<synth::GroundTruth> gt;
            if (oracle || evaluate) {
                if (item.ground_truth.empty()) throw InvalidArgument("no ground truth for " + item.id);
                gt = io::read_ground_truth(item.ground_truth);
            }
            if (oracle) {
                detections = detect::detect_oracle(*gt);
            } else {
                detections = detect::detect(read_png(item.image));
            }
            if (evaluate) reports[i] = detect::evaluate_detection(detections, gt->texels);
            io::write_detections(detections, out / (item.id + ".json"));
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError("detect", item.id, e.what());
        }
    });
    std::cout << "wrote detections for " << items.size() << " images to " << out.string() << "\n";
    if (evaluate) {
        long long tp = 0, fp = 0, fn = 0;
        for (const auto& r : reports) {
            tp += r.true_positives;
            fp += r.false_positives;
            fn += r.false_negatives;
        }
        const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        std::printf("TP %lld  FP %lld  FN %lld  precision %.4f  recall %.4f  F1 %.4f\n", tp, fp, fn, p, r, f1);
    }
    return kExitOk;
}

int cmd_describe(const ItemSource& source, const std::string& method_name, const fs::path& detections_dir,
                 const std::optional<fs::path>& palette, bool extended, const fs::path& out) {
    const auto method = parse_method(method_name);
    const auto items = source.items();
    std::optional<ColorNamer> custom;
    if (palette) custom.emplace(ColorNamer::from_file(*palette).prototypes());
    const ColorNamer& namer = custom ? *custom : default_color_namer();
    if (method == config::Method::texelatt && detections_dir.empty())
        throw InvalidArgument("--detections is required for the texelatt method");

    io::DescriptorTable table;
    table.names = method == config::Method::texelatt ? harness::texelatt_names() : tamura::TamuraDescriptor::names(extended);
    table.records.resize(items.size());
    parallel_for(items.size(), [&](std::size_t i) {
        const auto& item = items[i];
        try {
            const Image image = read_png(item.image);
            if (method == config::Method::texelatt) {
                const auto detections = io::read_detections(detections_dir / (item.id + ".json"));
                table.records[i] = harness::texelatt_record(item.id, image, detections, namer);
            } else {
                table.records[i] = harness::tamura_record(item.id, image, tamura::TamuraOptions{extended});
            }
        } catch (const std::exception& e) {
            throw StageError("describe", item.id, e.what());
        }
    });
    io::write_descriptors_csv(table, out);
    std::cout << "wrote " << table.records.size() << " descriptors to " << out.string() << "\n";
    return kExitOk;
}

int cmd_normalize(const fs::path& descriptors, const fs::path& out) {
    const auto table = io::read_descriptors_csv(descriptors);
    const auto stats = znormalize_fit(table.records);
    io::write_stats_csv(stats, table.names, out);
    std::cout << "wrote statistics of " << table.names.size() << " dimensions to " << out.string() << "\n";
    return kExitOk;
}

int cmd_distort(const fs::path& dataset, int resolution, const std::string& effect, double p, std::uint64_t seed,
                const fs::path& out) {
    distort::DistortionSpec spec;
    spec.resolution = resolution;
    spec.effect = distort::effect_from_string(effect);
    spec.noise_probability = p;
    spec.seed = seed;
    distort::validate(spec);
    const auto manifest = io::read_manifest(dataset / "manifest.json");
    const auto qm = distort::make_query_set(manifest, dataset, spec, out);
    std::cout << "wrote " << qm.entries.size() << " " << spec.variant() << " queries to " << out.string() << "\n";
    return kExitOk;
}

int cmd_retrieve(const fs::path& database, const fs::path& queries, const std::string& metric_name, std::size_t top,
                 const fs::path& out) {
    const auto metric = retrieval::metric_from_string(metric_name);
    const auto index = retrieval::build_index(read_records(database), metric);
    std::ostringstream csv;
    csv << "query_id,rank,database_id,distance\n";
    csv.precision(17);
    for (const auto& q : read_records(queries)) {
        const auto ranking = retrieval::query(index, q);
        const std::size_t n = std::min(top, ranking.ordered.size());
        for (std::size_t r = 0; r < n; ++r)
            csv << q.id << ',' << r + 1 << ',' << ranking.ordered[r].first << ',' << ranking.ordered[r].second << '\n';
    }
    io::write_text(out, csv.str());
    std::cout << "wrote rankings to " << out.string() << "\n";
    return kExitOk;
}

int cmd_eval(const fs::path& database, const fs::path& queries, const fs::path& queries_dir,
             const std::string& metric_name, const std::string& method, const fs::path& out) {
    const auto metric = retrieval::metric_from_string(metric_name);
    const auto qm = io::read_query_manifest(queries_dir / "queries.json");
    const auto result = retrieval::run_experiment(read_records(database), read_records(queries),
                                                  read_truth(queries_dir), metric, qm.spec.variant(), method);
    retrieval::write_report_csv({result.row}, out / "auc.csv");
    retrieval::write_cmc_csv({result}, out / "cmc.csv");
    retrieval::write_cmc_svg({result}, result.row.variant, out / ("cmc_" + result.row.variant + ".svg"));
    std::printf("%s %s (%s): AUC %.4f  AUC@200 %.4f\n", result.row.variant.c_str(), method.c_str(),
                std::string(retrieval::to_string(metric)).c_str(), result.row.auc, result.row.auc_at_200);
    return kExitOk;
}

void print_problems(const std::vector<std::string>& problems) {
    for (const auto& p : problems) std::cerr << "problem: " << p << "\n";
}

int cmd_validate(const fs::path& path) {
    const auto cfg = config::load_config(path);
    const auto problems = config::validate(cfg);
    if (!problems.empty()) {
        print_problems(problems);
        return kExitInvalid;
    }
    std::cout << "config is valid\n";
    return kExitOk;
}

int cmd_run(const std::optional<fs::path>& config_path, const std::optional<fs::path>& desk_out) {
    config::ExperimentConfig cfg;
    if (config_path) {
        cfg = config::load_config(*config_path);
    } else if (desk_out) {
        cfg = config::desk_config(*desk_out);
    } else {
        throw InvalidArgument("one of --config or --desk is required");
    }
    const auto problems = config::validate(cfg);
    if (!problems.empty()) {
        print_problems(problems);
        return kExitInvalid;
    }
    const auto summary = harness::run(cfg);
    for (const auto& s : summary.executed_stages) std::cout << "ran     " << s << "\n";
    for (const auto& s : summary.skipped_stages) std::cout << "cached  " << s << "\n";
    std::printf("%-12s %-10s %-10s %8s %8s\n", "variant", "method", "metric", "AUC", "AUC@200");
    for (const auto& r : summary.rows)
        std::printf("%-12s %-10s %-10s %8.4f %8.4f\n", r.variant.c_str(), r.method.c_str(),
                    std::string(retrieval::to_string(r.metric)).c_str(), r.auc, r.auc_at_200);
    std::cout << "report: " << summary.report_csv.string() << "\n"
              << "manifest: " << summary.run_manifest.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Texel-Att texture descriptors and retrieval experiments"};
    app.require_subcommand(1);

    int rc = kExitOk;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic texture dataset");
    std::size_t n = 300;
    std::uint64_t seed = 0;
    int canvas = 1024;
    double split_ratio = 0.9;
    fs::path out;
    synth->add_option("--n", n, "Number of images")->check(CLI::PositiveNumber);
    synth->add_option("--seed", seed, "Dataset seed")->required();
    synth->add_option("--canvas", canvas, "Canvas side in pixels")->check(CLI::Range(64, 8192));
    synth->add_option("--split-ratio", split_ratio, "Train fraction")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--out", out, "Output directory")->required();
    synth->callback([&] { rc = cmd_synth(n, seed, canvas, split_ratio, out); });

    auto* det = app.add_subcommand("detect", "Detect texels and write one JSON file per image");
    ItemSource det_source;
    bool oracle = false, evaluate = false;
    fs::path det_out;
    det_source.add_options(det);
    det->add_flag("--oracle", oracle, "Convert ground truth instead of running the classical detector");
    det->add_flag("--evaluate", evaluate, "Report pooled precision, recall and F1 against ground truth");
    det->add_option("--out", det_out, "Output directory")->required();
    det->callback([&] { rc = cmd_detect(det_source, oracle, det_out, evaluate); });

    auto* desc = app.add_subcommand("describe", "Compute descriptors into a CSV table");
    ItemSource desc_source;
    std::string method = "texelatt";
    fs::path detections, desc_out;
    std::optional<fs::path> palette;
    bool extended = false;
    desc_source.add_options(desc);
    desc->add_option("--method", method, "texelatt or tamura")->check(CLI::IsMember({"texelatt", "tamura"}));
    desc->add_option("--detections", detections, "Directory written by `detect` (texelatt only)");
    desc->add_option("--palette", palette, "Color prototype file with name,r,g,b lines");
    desc->add_flag("--extended", extended, "Add line-likeness, regularity and roughness (tamura only)");
    desc->add_option("--out", desc_out, "Output CSV")->required();
    desc->callback([&] { rc = cmd_describe(desc_source, method, detections, palette, extended, desc_out); });

    auto* norm = app.add_subcommand("normalize", "Fit Z-normalization statistics of a database table");
    fs::path norm_in, norm_out;
    norm->add_option("--descriptors", norm_in, "Database descriptor CSV")->required();
    norm->add_option("--out", norm_out, "Output statistics CSV")->required();
    norm->callback([&] { rc = cmd_normalize(norm_in, norm_out); });

    auto* dist = app.add_subcommand("distort", "Build a distorted query set from the test split");
    fs::path dist_dataset, dist_out;
    int resolution = 100;
    std::string effect = "noise";
    double probability = distort::kDefaultNoiseProbability;
    std::uint64_t dist_seed = 0;
    dist->add_option("--dataset", dist_dataset, "Dataset directory")->required();
    dist->add_option("--resolution", resolution, "Intermediate resolution: 100, 200 or 300");
    dist->add_option("--effect", effect, "noise or light");
    dist->add_option("--p", probability, "Impulsive noise probability");
    dist->add_option("--seed", dist_seed, "Distortion seed")->required();
    dist->add_option("--out", dist_out, "Output directory")->required();
    dist->callback([&] { rc = cmd_distort(dist_dataset, resolution, effect, probability, dist_seed, dist_out); });

    auto* ret = app.add_subcommand("retrieve", "Rank the database for every query");
    fs::path ret_db, ret_q, ret_out;
    std::string metric = "cosine";
    std::size_t top = 10;
    ret->add_option("--database", ret_db, "Database descriptor CSV")->required();
    ret->add_option("--queries", ret_q, "Query descriptor CSV")->required();
    ret->add_option("--metric", metric, "cosine, cityblock or euclidean");
    ret->add_option("--top", top, "Ranks written per query")->check(CLI::PositiveNumber);
    ret->add_option("--out", ret_out, "Output CSV")->required();
    ret->callback([&] { rc = cmd_retrieve(ret_db, ret_q, metric, top, ret_out); });

    auto* ev = app.add_subcommand("eval", "CMC curve and AUC of one query set");
    fs::path ev_db, ev_q, ev_qdir, ev_out;
    std::string ev_metric = "cosine", ev_method = "texelatt";
    ev->add_option("--database", ev_db, "Database descriptor CSV")->required();
    ev->add_option("--queries", ev_q, "Query descriptor CSV")->required();
    ev->add_option("--query-set", ev_qdir, "Query-set directory holding queries.json")->required();
    ev->add_option("--metric", ev_metric, "cosine, cityblock or euclidean");
    ev->add_option("--method", ev_method, "Method label for the report");
    ev->add_option("--out", ev_out, "Report directory")->required();
    ev->callback([&] { rc = cmd_eval(ev_db, ev_q, ev_qdir, ev_metric, ev_method, ev_out); });

    auto* run = app.add_subcommand("run", "Run a whole experiment with stage caching");
    std::optional<fs::path> config_path, desk;
    auto* cfg_opt = run->add_option("--config", config_path, "Experiment config (YAML)");
    run->add_option("--desk", desk, "Run the default desk config into this directory")->excludes(cfg_opt);
    run->callback([&] { rc = cmd_run(config_path, desk); });

    auto* val = app.add_subcommand("validate", "Check an experiment config without running it");
    fs::path val_path;
    val->add_option("config", val_path, "Experiment config (YAML)")->required();
    val->callback([&] { rc = cmd_validate(val_path); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const InvalidSpec& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const InvalidPalette& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return rc;
}
