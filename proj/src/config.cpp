#include "texelatt/config.hpp"

#include "texelatt/error.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace texelatt::config {

namespace {

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw InvalidArgument("config key '" + key + "' has an invalid value");
    }
}

void reject_unknown(const YAML::Node& node, const std::string& section, std::initializer_list<const char*> known) {
    if (!node.IsMap()) throw InvalidArgument("config section '" + section + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw InvalidArgument("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
    }
}

}  // namespace

std::vector<distort::DistortionSpec> DistortionSection::specs() const {
    std::vector<distort::DistortionSpec> out;
    for (auto e : effects)
        for (int r : resolutions) out.push_back({r, e, noise_probability, seed.value_or(0)});
    return out;
}

std::string_view to_string(Method m) { return m == Method::texelatt ? "texelatt" : "tamura"; }

Method method_from_string(std::string_view s) {
    if (s == "texelatt") return Method::texelatt;
    if (s == "tamura") return Method::tamura;
    throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

ExperimentConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw InvalidArgument(std::string("config is not valid YAML: ") + e.what());
    }
    if (!root.IsMap()) throw InvalidArgument("config must be a mapping of sections");
    reject_unknown(root, "", {"output_dir", "palette_file", "tamura_extended", "dataset", "detector", "distortions", "methods"});

    ExperimentConfig c;
    if (root["output_dir"]) c.output_dir = scalar<std::string>(root["output_dir"], "output_dir");
    if (root["palette_file"]) c.palette_file = scalar<std::string>(root["palette_file"], "palette_file");
    if (root["tamura_extended"]) c.tamura_extended = scalar<bool>(root["tamura_extended"], "tamura_extended");

    if (const auto d = root["dataset"]) {
        reject_unknown(d, "dataset", {"n", "seed", "canvas", "split_ratio"});
        if (d["n"]) c.dataset.n = scalar<std::size_t>(d["n"], "dataset.n");
        if (d["seed"]) c.dataset.seed = scalar<std::uint64_t>(d["seed"], "dataset.seed");
        if (d["canvas"]) c.dataset.canvas = scalar<int>(d["canvas"], "dataset.canvas");
        if (d["split_ratio"]) c.dataset.split_ratio = scalar<double>(d["split_ratio"], "dataset.split_ratio");
    }
    if (const auto d = root["detector"]) {
        reject_unknown(d, "detector",
                       {"kind", "circularity_threshold", "elongation_threshold", "min_component_px",
                        "max_component_fraction", "border_keep_fraction", "median_prefilter", "impulse_threshold",
                        "flatten_illumination"});
        auto& t = c.detector.thresholds;
        if (d["kind"]) {
            const auto kind = scalar<std::string>(d["kind"], "detector.kind");
            if (kind != "classical" && kind != "oracle")
                throw InvalidArgument("detector.kind must be 'classical' or 'oracle'");
            c.detector.kind = kind == "oracle" ? DetectorKind::oracle : DetectorKind::classical;
        }
        if (d["circularity_threshold"]) t.circularity_threshold = scalar<double>(d["circularity_threshold"], "detector.circularity_threshold");
        if (d["elongation_threshold"]) t.elongation_threshold = scalar<double>(d["elongation_threshold"], "detector.elongation_threshold");
        if (d["min_component_px"]) t.min_component_px = scalar<long long>(d["min_component_px"], "detector.min_component_px");
        if (d["max_component_fraction"]) t.max_component_fraction = scalar<double>(d["max_component_fraction"], "detector.max_component_fraction");
        if (d["border_keep_fraction"]) t.border_keep_fraction = scalar<double>(d["border_keep_fraction"], "detector.border_keep_fraction");
        if (d["median_prefilter"]) t.median_prefilter = scalar<bool>(d["median_prefilter"], "detector.median_prefilter");
        if (d["impulse_threshold"]) t.impulse_threshold = scalar<double>(d["impulse_threshold"], "detector.impulse_threshold");
        if (d["flatten_illumination"]) t.flatten_illumination = scalar<bool>(d["flatten_illumination"], "detector.flatten_illumination");
    }
    if (const auto d = root["distortions"]) {
        reject_unknown(d, "distortions", {"seed", "resolutions", "effects", "noise_probability"});
        if (d["seed"]) c.distortions.seed = scalar<std::uint64_t>(d["seed"], "distortions.seed");
        if (d["resolutions"]) c.distortions.resolutions = scalar<std::vector<int>>(d["resolutions"], "distortions.resolutions");
        if (d["effects"]) {
            c.distortions.effects.clear();
            for (const auto& e : scalar<std::vector<std::string>>(d["effects"], "distortions.effects"))
                c.distortions.effects.push_back(distort::effect_from_string(e));
        }
        if (d["noise_probability"])
            c.distortions.noise_probability = scalar<double>(d["noise_probability"], "distortions.noise_probability");
    }
    if (const auto d = root["methods"]) {
        if (!d.IsMap()) throw InvalidArgument("config section 'methods' must map method names to metrics");
        for (const auto& kv : d) {
            MethodConfig m;
            m.method = method_from_string(kv.first.as<std::string>());
            m.metric = retrieval::metric_from_string(scalar<std::string>(kv.second, "methods." + kv.first.as<std::string>()));
            c.methods.push_back(m);
        }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> problems;
    if (!c.dataset.n) problems.push_back("dataset.n is missing");
    else if (*c.dataset.n < 10) problems.push_back("dataset.n must be at least 10");
    if (!c.dataset.seed) problems.push_back("dataset.seed is missing");
    if (c.dataset.canvas < 64) problems.push_back("dataset.canvas must be at least 64");
    if (!(c.dataset.split_ratio > 0.0 && c.dataset.split_ratio < 1.0))
        problems.push_back("dataset.split_ratio must lie in (0, 1), got " + std::to_string(c.dataset.split_ratio));
    else if (c.dataset.n && *c.dataset.n >= 10) {
        const auto test = *c.dataset.n - static_cast<std::size_t>(std::llround(*c.dataset.n * c.dataset.split_ratio));
        if (test < 2) problems.push_back("dataset.split_ratio leaves fewer than 2 test images");
    }

    if (!c.distortions.seed) problems.push_back("distortions.seed is missing");
    if (c.distortions.resolutions.empty()) problems.push_back("distortions.resolutions is empty");
    if (c.distortions.effects.empty()) problems.push_back("distortions.effects is empty");
    std::set<int> seen;
    for (int r : c.distortions.resolutions) {
        if (r != 100 && r != 200 && r != 300)
            problems.push_back("distortions.resolutions entry " + std::to_string(r) + " is not 100, 200 or 300");
        else if (r > c.dataset.canvas)
            problems.push_back("distortions.resolutions entry " + std::to_string(r) + " exceeds the canvas");
        if (!seen.insert(r).second) problems.push_back("distortions.resolutions repeats " + std::to_string(r));
    }
    if (!(c.distortions.noise_probability >= 0.0 && c.distortions.noise_probability <= 1.0))
        problems.push_back("distortions.noise_probability must lie in [0, 1]");

    if (c.methods.empty()) problems.push_back("methods is empty");
    std::set<Method> methods;
    for (const auto& m : c.methods)
        if (!methods.insert(m.method).second) problems.push_back("methods lists " + std::string(to_string(m.method)) + " twice");

    const auto& t = c.detector.thresholds;
    if (!(t.circularity_threshold > 0.0 && t.circularity_threshold <= 1.0))
        problems.push_back("detector.circularity_threshold must lie in (0, 1]");
    if (!(t.elongation_threshold > 1.0)) problems.push_back("detector.elongation_threshold must exceed 1");
    if (t.min_component_px < 1) problems.push_back("detector.min_component_px must be positive");
    if (!(t.max_component_fraction > 0.0 && t.max_component_fraction <= 1.0))
        problems.push_back("detector.max_component_fraction must lie in (0, 1]");
    if (!(t.border_keep_fraction >= 0.0 && t.border_keep_fraction <= 1.0))
        problems.push_back("detector.border_keep_fraction must lie in [0, 1]");
    if (!(t.impulse_threshold >= 0.0 && t.impulse_threshold <= 1.0))
        problems.push_back("detector.impulse_threshold must lie in [0, 1]");

    if (c.output_dir.empty()) {
        problems.push_back("output_dir is missing");
    } else {
        std::error_code ec;
        const auto abs = std::filesystem::absolute(c.output_dir, ec);
        auto parent = abs.parent_path();
        while (!parent.empty() && !std::filesystem::exists(parent, ec) && parent != parent.parent_path())
            parent = parent.parent_path();
        if (std::filesystem::exists(abs, ec) && !std::filesystem::is_directory(abs, ec))
            problems.push_back("output_dir " + c.output_dir.string() + " exists and is not a directory");
        else if (!std::filesystem::is_directory(parent, ec))
            problems.push_back("output_dir " + c.output_dir.string() + " has no existing ancestor directory");
    }
    if (c.palette_file && !std::filesystem::is_regular_file(*c.palette_file))
        problems.push_back("palette_file " + c.palette_file->string() + " does not exist");
    return problems;
}

ExperimentConfig desk_config(const std::filesystem::path& output_dir) {
    ExperimentConfig c;
    c.dataset.n = 300;
    c.dataset.seed = 2024;
    c.distortions.seed = 7;
    c.methods = {{Method::texelatt, retrieval::Metric::cosine}, {Method::tamura, retrieval::Metric::cityblock}};
    c.output_dir = output_dir;
    return c;
}

std::string to_yaml(const ExperimentConfig& c) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();
    if (c.palette_file) out << YAML::Key << "palette_file" << YAML::Value << c.palette_file->string();
    out << YAML::Key << "tamura_extended" << YAML::Value << c.tamura_extended;
    out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
    if (c.dataset.n) out << YAML::Key << "n" << YAML::Value << *c.dataset.n;
    if (c.dataset.seed) out << YAML::Key << "seed" << YAML::Value << *c.dataset.seed;
    out << YAML::Key << "canvas" << YAML::Value << c.dataset.canvas;
    out << YAML::Key << "split_ratio" << YAML::Value << c.dataset.split_ratio;
    out << YAML::EndMap;
    const auto& t = c.detector.thresholds;
    out << YAML::Key << "detector" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << (c.detector.kind == DetectorKind::oracle ? "oracle" : "classical");
    out << YAML::Key << "circularity_threshold" << YAML::Value << t.circularity_threshold;
    out << YAML::Key << "elongation_threshold" << YAML::Value << t.elongation_threshold;
    out << YAML::Key << "min_component_px" << YAML::Value << t.min_component_px;
    out << YAML::Key << "max_component_fraction" << YAML::Value << t.max_component_fraction;
    out << YAML::Key << "border_keep_fraction" << YAML::Value << t.border_keep_fraction;
    out << YAML::Key << "median_prefilter" << YAML::Value << t.median_prefilter;
    out << YAML::Key << "impulse_threshold" << YAML::Value << t.impulse_threshold;
    out << YAML::Key << "flatten_illumination" << YAML::Value << t.flatten_illumination;
    out << YAML::EndMap;
    out << YAML::Key << "distortions" << YAML::Value << YAML::BeginMap;
    if (c.distortions.seed) out << YAML::Key << "seed" << YAML::Value << *c.distortions.seed;
    out << YAML::Key << "resolutions" << YAML::Value << YAML::Flow << c.distortions.resolutions;
    out << YAML::Key << "effects" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto e : c.distortions.effects) out << std::string(distort::to_string(e));
    out << YAML::EndSeq;
    out << YAML::Key << "noise_probability" << YAML::Value << c.distortions.noise_probability;
    out << YAML::EndMap;
    out << YAML::Key << "methods" << YAML::Value << YAML::BeginMap;
    for (const auto& m : c.methods)
        out << YAML::Key << std::string(to_string(m.method)) << YAML::Value << std::string(retrieval::to_string(m.metric));
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace texelatt::config
