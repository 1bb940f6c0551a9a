#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

#include "relight/filtering.hpp"
#include "relight/intrinsic.hpp"
#include "relight/shading.hpp"
#include "relight/shadows.hpp"

namespace relight {

using Range = std::pair<double, double>;

struct PipelineConfig {
    std::filesystem::path images_dir = "images";
    std::filesystem::path scores_path = "scores.jsonl";
    std::filesystem::path masks_dir = "masks";
    std::filesystem::path depth_dir = "depth";
    std::filesystem::path instructions_path = "instructions.jsonl";
    std::filesystem::path output_dir = "out";

    double threshold = default_score_threshold;
    std::size_t prompt_count = 7;
    int target_resolution = 512;
    MsrConfig msr;
    Range ambient_range = default_ambient_range;
    double gradient_scale = default_gradient_scale;
    PatternWeights pattern_weights = uniform_pattern_weights();
    Range opacity_range = default_opacity_range;
    Range blur_range = default_shadow_blur_range;  // at 512 px
    double gray_level = 0.5;
    SplitCounts split_counts;
    std::uint64_t global_seed = 0;

    /// Shadow blur range scaled to the working resolution.
    Range scaled_blur_range() const {
        const double k = target_resolution / 512.0;
        return {blur_range.first * k, blur_range.second * k};
    }

    void validate() const {
        auto unit_range = [](const Range& r, const char* what) {
            if (!(0.0 <= r.first && r.first <= r.second && r.second <= 1.0))
                throw Error(ErrorKind::InvalidArgument, std::string(what) + " must satisfy 0 <= lo <= hi <= 1");
        };
        if (!std::isfinite(threshold)) throw Error(ErrorKind::InvalidArgument, "threshold must be finite");
        if (target_resolution < 64) throw Error(ErrorKind::InvalidArgument, "target_resolution must be >= 64");
        if (prompt_count < 1) throw Error(ErrorKind::InvalidArgument, "prompt_count must be >= 1");
        msr.validate();
        unit_range(ambient_range, "ambient_range");
        unit_range(opacity_range, "opacity_range");
        if (!(0.0 <= blur_range.first && blur_range.first <= blur_range.second && std::isfinite(blur_range.second)))
            throw Error(ErrorKind::InvalidArgument, "blur_range must satisfy 0 <= lo <= hi");
        if (!(gradient_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "gradient_scale must be > 0");
        if (!(0.0 <= gray_level && gray_level <= 1.0))
            throw Error(ErrorKind::InvalidArgument, "gray_level must be in [0,1]");
        double total = 0.0;
        for (double w : pattern_weights) {
            if (!(w >= 0.0)) throw Error(ErrorKind::InvalidArgument, "pattern weights must be >= 0");
            total += w;
        }
        if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "pattern weights are all zero");
    }
};

namespace detail {
inline Range range_from_json(const nlohmann::json& j, const char* key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw Error(ErrorKind::InvalidArgument, std::string(key) + " must be a [lo, hi] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}
inline nlohmann::json range_to_json(const Range& r) { return nlohmann::json::array({r.first, r.second}); }
} // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json weights = nlohmann::json::object();
    for (auto k : all_pattern_kinds) weights[std::string(to_string(k))] = c.pattern_weights[static_cast<std::size_t>(k)];
    return {
        {"images_dir", c.images_dir.string()},
        {"scores_path", c.scores_path.string()},
        {"masks_dir", c.masks_dir.string()},
        {"depth_dir", c.depth_dir.string()},
        {"instructions_path", c.instructions_path.string()},
        {"output_dir", c.output_dir.string()},
        {"threshold", c.threshold},
        {"prompt_count", c.prompt_count},
        {"target_resolution", c.target_resolution},
        {"msr",
         {{"scales", c.msr.scales},
          {"weights", c.msr.weights},
          {"epsilon", c.msr.epsilon},
          {"norm_percentiles", detail::range_to_json(c.msr.norm_percentiles)},
          {"blend_range", detail::range_to_json(c.msr.blend_range)}}},
        {"ambient_range", detail::range_to_json(c.ambient_range)},
        {"gradient_scale", c.gradient_scale},
        {"shadow",
         {{"weights", weights},
          {"opacity_range", detail::range_to_json(c.opacity_range)},
          {"blur_range", detail::range_to_json(c.blur_range)}}},
        {"gray_level", c.gray_level},
        {"split_counts", {{"train", c.split_counts.train}, {"val", c.split_counts.val}, {"test", c.split_counts.test}}},
        {"global_seed", c.global_seed},
    };
}

namespace detail {
inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                                const std::string& where) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config: " + where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error(ErrorKind::InvalidArgument, "config: unknown key '" + where + key + "'");
}
} // namespace detail

/// Missing keys keep their defaults; unknown keys are an error. Relative paths
/// are resolved against `base_dir`.
inline PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
    PipelineConfig c;
    auto path = [&](const char* key, std::filesystem::path& dst) {
        if (!j.contains(key)) return;
        std::filesystem::path p = j.at(key).get<std::string>();
        dst = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    detail::reject_unknown_keys(j,
                                {"images_dir", "scores_path", "masks_dir", "depth_dir", "instructions_path",
                                 "output_dir", "threshold", "prompt_count", "target_resolution", "msr",
                                 "ambient_range", "gradient_scale", "shadow", "gray_level", "split_counts",
                                 "global_seed"},
                                "");
    if (j.contains("msr"))
        detail::reject_unknown_keys(j["msr"], {"scales", "weights", "epsilon", "norm_percentiles", "blend_range"},
                                    "msr.");
    if (j.contains("shadow"))
        detail::reject_unknown_keys(j["shadow"], {"weights", "opacity_range", "blur_range"}, "shadow.");
    if (j.contains("split_counts"))
        detail::reject_unknown_keys(j["split_counts"], {"train", "val", "test"}, "split_counts.");
    try {
        path("images_dir", c.images_dir);
        path("scores_path", c.scores_path);
        path("masks_dir", c.masks_dir);
        path("depth_dir", c.depth_dir);
        path("instructions_path", c.instructions_path);
        path("output_dir", c.output_dir);
        if (j.contains("threshold")) c.threshold = j.at("threshold").get<double>();
        if (j.contains("prompt_count")) c.prompt_count = j.at("prompt_count").get<std::size_t>();
        if (j.contains("target_resolution")) c.target_resolution = j.at("target_resolution").get<int>();
        if (j.contains("msr")) {
            const auto& m = j.at("msr");
            if (m.contains("scales")) c.msr.scales = m.at("scales").get<std::vector<double>>();
            if (m.contains("weights")) c.msr.weights = m.at("weights").get<std::vector<double>>();
            if (m.contains("epsilon")) c.msr.epsilon = m.at("epsilon").get<double>();
            if (m.contains("norm_percentiles"))
                c.msr.norm_percentiles = detail::range_from_json(m.at("norm_percentiles"), "msr.norm_percentiles");
            if (m.contains("blend_range")) c.msr.blend_range = detail::range_from_json(m.at("blend_range"), "msr.blend_range");
        }
        if (j.contains("ambient_range")) c.ambient_range = detail::range_from_json(j.at("ambient_range"), "ambient_range");
        if (j.contains("gradient_scale")) c.gradient_scale = j.at("gradient_scale").get<double>();
        if (j.contains("shadow")) {
            const auto& s = j.at("shadow");
            if (s.contains("weights")) {
                PatternWeights w{};
                for (const auto& [name, value] : s.at("weights").items()) {
                    auto kind = parse_pattern_kind(name);
                    if (!kind) throw Error(ErrorKind::InvalidArgument, "unknown pattern kind '" + name + "'");
                    w[static_cast<std::size_t>(*kind)] = value.get<double>();
                }
                c.pattern_weights = w;
            }
            if (s.contains("opacity_range"))
                c.opacity_range = detail::range_from_json(s.at("opacity_range"), "shadow.opacity_range");
            if (s.contains("blur_range")) c.blur_range = detail::range_from_json(s.at("blur_range"), "shadow.blur_range");
        }
        if (j.contains("gray_level")) c.gray_level = j.at("gray_level").get<double>();
        if (j.contains("split_counts")) {
            const auto& s = j.at("split_counts");
            c.split_counts.train = s.value("train", c.split_counts.train);
            c.split_counts.val = s.value("val", c.split_counts.val);
            c.split_counts.test = s.value("test", c.split_counts.test);
        }
        if (j.contains("global_seed")) c.global_seed = j.at("global_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::FileNotFound, file.string());
    const auto j = nlohmann::json::parse(in, nullptr, false, true);
    if (j.is_discarded()) throw Error(ErrorKind::InvalidArgument, file.string() + ": not valid JSON");
    return config_from_json(j, file.parent_path());
}

} // namespace relight
