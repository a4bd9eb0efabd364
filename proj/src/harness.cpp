#include "texelatt/harness.hpp"

#include "texelatt/descriptor.hpp"
#include "texelatt/detection.hpp"
#include "texelatt/distortion.hpp"
#include "texelatt/error.hpp"
#include "texelatt/io.hpp"
#include "texelatt/parallel.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>

namespace texelatt::harness {

using nlohmann::json;
namespace fs = std::filesystem;

FeatureRecord texelatt_record(const std::string& id, const Image& image, std::span<const DetectedTexel> texels,
                              const ColorNamer& namer) {
    return descriptor::describe(image, texels, namer).to_record(id);
}

FeatureRecord tamura_record(const std::string& id, const Image& image, const tamura::TamuraOptions& options) {
    return tamura::compute(image, options).to_record(id);
}

std::vector<std::string> texelatt_names() {
    const auto& n = descriptor::TextureDescriptor::names();
    return {n.begin(), n.end()};
}

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("SHA-256 final failed");
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4]);
            out.push_back(digits[md[i] & 15]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

StageCache::StageCache(fs::path root) : root_(std::move(root)) {}

fs::path StageCache::stamp_path(const std::string& stage) const { return root_ / "stamps" / (stage + ".json"); }

bool StageCache::fresh(const std::string& stage, const std::string& key) const {
    const fs::path p = stamp_path(stage);
    if (!fs::exists(p)) return false;
    try {
        const json j = json::parse(io::read_text(p));
        if (j.at("key").get<std::string>() != key) return false;
        for (const auto& [rel, digest] : j.at("outputs").items()) {
            if (!fs::exists(root_ / rel)) return false;
            if (sha256_file(root_ / rel) != digest.get<std::string>()) return false;
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

void StageCache::commit(const std::string& stage, const std::string& key, const std::vector<std::string>& outputs) {
    json j{{"stage", stage}, {"key", key}, {"outputs", json::object()}};
    for (const auto& rel : outputs) j["outputs"][rel] = sha256_file(root_ / rel);
    io::write_text(stamp_path(stage), j.dump(1) + "\n");
}

std::vector<std::string> StageCache::outputs(const std::string& stage) const {
    std::vector<std::string> out;
    const fs::path p = stamp_path(stage);
    if (!fs::exists(p)) return out;
    try {
        const json j = json::parse(io::read_text(p));
        for (const auto& [rel, digest] : j.at("outputs").items()) out.push_back(rel);
    } catch (const std::exception&) {
    }
    return out;
}

std::string StageCache::digest(const std::string& stage) const {
    const fs::path p = stamp_path(stage);
    if (!fs::exists(p)) return {};
    const json j = json::parse(io::read_text(p));
    return sha256_hex(j.at("outputs").dump());
}

namespace {

/// Runs fn(i) over items, tagging failures with the stage and item id.
template <typename Fn>
void for_items(const std::string& stage, const std::vector<std::string>& ids, Fn&& fn) {
    parallel_for(ids.size(), [&](std::size_t i) {
        try {
            fn(i);
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, ids[i], e.what());
        }
    });
}

/// Per-run state shared by the stage functions.
class Pipeline {
public:
    Pipeline(const config::ExperimentConfig& cfg, RunSummary& summary)
        : cfg_(cfg), root_(cfg.output_dir), cache_(root_), summary_(summary) {
        if (cfg.palette_file)
            namer_ = std::make_unique<ColorNamer>(ColorNamer::from_file(*cfg.palette_file).prototypes());
        for (const auto& m : cfg.methods) {
            if (m.method == config::Method::texelatt) texelatt_ = true;
            if (m.method == config::Method::tamura) tamura_ = true;
        }
    }

    void execute() {
        synth();
        load_dataset();
        if (texelatt_) detect("db", db_ids_, db_ids_, [&](std::size_t i) { return db_image(i); });
        describe("db", db_ids_, [&](std::size_t i) { return db_image(i); });
        index();
        for (const auto& spec : cfg_.distortions.specs()) {
            const std::string v = spec.variant();
            distort(spec);
            const auto qm = io::read_query_manifest(root_ / "queries" / v / "queries.json");
            std::vector<std::string> qids, truth;
            for (const auto& e : qm.entries) {
                qids.push_back(e.query_id);
                truth.push_back(e.database_id);
            }
            auto load = [&, v](std::size_t i) { return read_png(root_ / "queries" / v / qm.entries[i].image_path); };
            if (texelatt_) detect(v, qids, truth, load);
            describe(v, qids, load);
            variants_.push_back({v, qids, truth});
        }
        retrieve();
        write_run_manifest();
    }

private:
    struct Variant {
        std::string name;
        std::vector<std::string> query_ids;
        std::vector<std::string> database_ids;
    };

    const ColorNamer& namer() const { return namer_ ? *namer_ : default_color_namer(); }

    /// Runs `body` unless the stage is fresh; `body` returns its outputs.
    template <typename Body>
    void stage(const std::string& name, const std::string& key_material, Body&& body) {
        const std::string key = sha256_hex(key_material);
        if (cache_.fresh(name, key)) {
            summary_.skipped_stages.push_back(name);
            return;
        }
        std::error_code ec;
        for (const auto& rel : cache_.outputs(name)) fs::remove(root_ / rel, ec);
        std::vector<std::string> outputs;
        try {
            outputs = body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, "", e.what());
        }
        cache_.commit(name, key, outputs);
        summary_.executed_stages.push_back(name);
    }

    void synth() {
        const std::string key = "synth\n" + std::to_string(*cfg_.dataset.n) + "\n" + std::to_string(*cfg_.dataset.seed) +
                                "\n" + std::to_string(cfg_.dataset.canvas) + "\n" + std::to_string(cfg_.dataset.split_ratio);
        stage("synth", key, [&] {
            synth::DatasetOptions opt{*cfg_.dataset.n, *cfg_.dataset.seed, cfg_.dataset.canvas, cfg_.dataset.split_ratio};
            const auto m = synth::generate_dataset(opt, root_ / "dataset");
            std::vector<std::string> out{"dataset/manifest.json"};
            for (const auto& e : m.entries) {
                out.push_back("dataset/" + e.image_path);
                out.push_back("dataset/" + e.ground_truth_path);
            }
            return out;
        });
    }

    void load_dataset() {
        manifest_ = io::read_manifest(root_ / "dataset" / "manifest.json");
        db_ids_ = manifest_.test_ids;
        for (const auto& e : manifest_.entries) entries_[e.id] = &e;
    }

    const synth::ManifestEntry& entry(const std::string& id) const {
        const auto it = entries_.find(id);
        if (it == entries_.end()) throw InvalidArgument("unknown database id " + id);
        return *it->second;
    }

    Image db_image(std::size_t i) const { return read_png(root_ / "dataset" / entry(db_ids_[i]).image_path); }

    std::string detector_key() const {
        std::string k = cfg_.detector.kind == config::DetectorKind::oracle ? "oracle" : "classical";
        const auto& t = cfg_.detector.thresholds;
        for (double v : {t.circularity_threshold, t.elongation_threshold, static_cast<double>(t.min_component_px),
                         t.max_component_fraction, t.border_keep_fraction, t.median_prefilter ? 1.0 : 0.0, t.impulse_threshold,
                         t.flatten_illumination ? 1.0 : 0.0})
            k += "," + std::to_string(v);
        return k;
    }

    std::string palette_key() const {
        return cfg_.palette_file ? sha256_file(*cfg_.palette_file) : std::string("default");
    }

    fs::path detection_path(const std::string& set, const std::string& id) const {
        return root_ / "detections" / set / (id + ".json");
    }

    /// `truth_ids[i]` is the database item whose ground truth the oracle uses.
    template <typename Load>
    void detect(const std::string& set, const std::vector<std::string>& ids, const std::vector<std::string>& truth_ids,
                Load&& load) {
        const std::string upstream = set == "db" ? cache_.digest("synth") : cache_.digest("distort_" + set);
        const std::string key = "detect\n" + detector_key() + "\n" + palette_key() + "\n" + cache_.digest("synth") +
                                "\n" + upstream;
        const std::string name = "detect_" + set;
        stage(name, key, [&] {
            for_items(name, ids, [&](std::size_t i) {
                std::vector<DetectedTexel> dets;
                if (cfg_.detector.kind == config::DetectorKind::oracle) {
                    dets = detect::detect_oracle(
                        io::read_ground_truth(root_ / "dataset" / entry(truth_ids[i]).ground_truth_path));
                } else {
                    dets = detect::detect(load(i), cfg_.detector.thresholds, namer());
                }
                io::write_detections(dets, detection_path(set, ids[i]));
            });
            std::vector<std::string> out;
            for (const auto& id : ids) out.push_back(fs::relative(detection_path(set, id), root_).string());
            return out;
        });
    }

    template <typename Load>
    void describe(const std::string& set, const std::vector<std::string>& ids, Load&& load) {
        const std::string upstream = set == "db" ? cache_.digest("synth") : cache_.digest("distort_" + set);
        std::string key = "describe\n" + palette_key() + "\n" + upstream + "\n" + (cfg_.tamura_extended ? "ext" : "basic");
        if (texelatt_) key += "\n" + cache_.digest("detect_" + set);
        for (const auto& m : cfg_.methods) key += "\n" + std::string(config::to_string(m.method));
        const std::string name = "describe_" + set;
        stage(name, key, [&] {
            std::vector<FeatureRecord> tex(ids.size()), tam(ids.size());
            for_items(name, ids, [&](std::size_t i) {
                const Image image = load(i);
                if (texelatt_) tex[i] = texelatt_record(ids[i], image, io::read_detections(detection_path(set, ids[i])), namer());
                if (tamura_) tam[i] = tamura_record(ids[i], image, {cfg_.tamura_extended});
            });
            std::vector<std::string> out;
            if (texelatt_) {
                io::write_descriptors_csv({texelatt_names(), tex}, descriptor_path(set, config::Method::texelatt));
                out.push_back(rel_descriptor(set, config::Method::texelatt));
            }
            if (tamura_) {
                io::write_descriptors_csv({tamura::TamuraDescriptor::names(cfg_.tamura_extended), tam},
                                          descriptor_path(set, config::Method::tamura));
                out.push_back(rel_descriptor(set, config::Method::tamura));
            }
            return out;
        });
    }

    std::string rel_descriptor(const std::string& set, config::Method m) const {
        return "descriptors/" + set + "_" + std::string(config::to_string(m)) + ".csv";
    }
    fs::path descriptor_path(const std::string& set, config::Method m) const { return root_ / rel_descriptor(set, m); }

    void index() {
        stage("index", "index\n" + cache_.digest("describe_db"), [&] {
            std::vector<std::string> out;
            for (const auto& m : cfg_.methods) {
                const auto table = io::read_descriptors_csv(descriptor_path("db", m.method));
                const auto stats = znormalize_fit(table.records);
                const std::string rel = "stats/" + std::string(config::to_string(m.method)) + ".csv";
                io::write_stats_csv(stats, table.names, root_ / rel);
                out.push_back(rel);
            }
            return out;
        });
    }

    void distort(const distort::DistortionSpec& spec) {
        const std::string v = spec.variant();
        const std::string key = "distort\n" + v + "\n" + std::to_string(spec.noise_probability) + "\n" +
                                std::to_string(spec.seed) + "\n" + cache_.digest("synth");
        stage("distort_" + v, key, [&] {
            const auto qm = distort::make_query_set(manifest_, root_ / "dataset", spec, root_ / "queries" / v);
            std::vector<std::string> out{"queries/" + v + "/queries.json"};
            for (const auto& e : qm.entries) out.push_back("queries/" + v + "/" + e.image_path);
            return out;
        });
    }

    void retrieve() {
        std::string key = "retrieve\n" + cache_.digest("index") + "\n" + cache_.digest("describe_db");
        for (const auto& m : cfg_.methods)
            key += "\n" + std::string(config::to_string(m.method)) + ":" + std::string(retrieval::to_string(m.metric));
        for (const auto& v : variants_) key += "\n" + v.name + ":" + cache_.digest("describe_" + v.name);
        stage("retrieve", key, [&] {
            std::vector<std::string> out;
            std::vector<retrieval::ReportRow> rows;
            std::vector<retrieval::ExperimentResult> all;
            std::map<config::Method, std::vector<FeatureRecord>> db;
            for (const auto& m : cfg_.methods) db[m.method] = io::read_descriptors_csv(descriptor_path("db", m.method)).records;
            for (const auto& v : variants_) {
                std::map<std::string, std::string> truth;
                for (std::size_t i = 0; i < v.query_ids.size(); ++i) truth[v.query_ids[i]] = v.database_ids[i];
                std::vector<retrieval::ExperimentResult> per_variant;
                for (const auto& m : cfg_.methods) {
                    const auto queries = io::read_descriptors_csv(descriptor_path(v.name, m.method)).records;
                    per_variant.push_back(retrieval::run_experiment(db[m.method], queries, truth, m.metric, v.name,
                                                                    std::string(config::to_string(m.method))));
                }
                const std::string svg = "report/cmc_" + v.name + ".svg";
                retrieval::write_cmc_svg(per_variant, v.name, root_ / svg);
                out.push_back(svg);
                for (auto& r : per_variant) {
                    rows.push_back(r.row);
                    all.push_back(std::move(r));
                }
            }
            retrieval::write_report_csv(rows, root_ / "report" / "auc.csv");
            retrieval::write_cmc_csv(all, root_ / "report" / "cmc.csv");
            out.push_back("report/auc.csv");
            out.push_back("report/cmc.csv");
            return out;
        });
        summary_.rows = retrieval::read_report_csv(root_ / "report" / "auc.csv");
        summary_.report_csv = root_ / "report" / "auc.csv";
    }

    void write_run_manifest() {
        std::vector<std::string> stages{"synth"};
        if (texelatt_) stages.push_back("detect_db");
        stages.push_back("describe_db");
        stages.push_back("index");
        for (const auto& v : variants_) {
            stages.push_back("distort_" + v.name);
            if (texelatt_) stages.push_back("detect_" + v.name);
            stages.push_back("describe_" + v.name);
        }
        stages.push_back("retrieve");
        json jstages = json::array();
        for (const auto& s : stages) {
            json files = json::array();
            for (const auto& rel : cache_.outputs(s)) files.push_back(rel);
            files.push_back("stamps/" + s + ".json");
            jstages.push_back(json{{"stage", s}, {"outputs", std::move(files)}});
        }
        const json j{{"config", config::to_yaml(cfg_)}, {"report", "report/auc.csv"}, {"stages", std::move(jstages)}};
        summary_.run_manifest = root_ / "run_manifest.json";
        io::write_text(summary_.run_manifest, j.dump(1) + "\n");
    }

    const config::ExperimentConfig& cfg_;
    fs::path root_;
    StageCache cache_;
    RunSummary& summary_;
    std::unique_ptr<ColorNamer> namer_;
    bool texelatt_ = false;
    bool tamura_ = false;
    synth::DatasetManifest manifest_;
    std::vector<std::string> db_ids_;
    std::map<std::string, const synth::ManifestEntry*> entries_;
    std::vector<Variant> variants_;
};

}  // namespace

RunSummary run(const config::ExperimentConfig& cfg) {
    const auto problems = config::validate(cfg);
    if (!problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw InvalidArgument(msg);
    }
    RunSummary summary;
    Pipeline(cfg, summary).execute();
    return summary;
}

}  // namespace texelatt::harness
