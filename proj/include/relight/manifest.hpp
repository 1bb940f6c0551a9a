#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relight/filtering.hpp"
#include "relight/shading.hpp"
#include "relight/shadows.hpp"

namespace relight {

inline constexpr int manifest_schema_version = 1;

struct DegradationParams {
    double alpha = 0.0;
    Vec3 light_direction{0.0, 0.0, 1.0};
    double ambient = 0.0;
    PatternKind pattern_kind = PatternKind::VenetianBlinds;
    double opacity = 0.0;
    double blur_sigma = 0.0;
    std::uint64_t pattern_seed = 0;
    friend bool operator==(const DegradationParams&, const DegradationParams&) = default;
};

/// One manifest row: (degraded input, instruction, ground truth) plus the
/// provenance needed to regenerate it.
struct TripletRecord {
    std::string image_id;
    std::string input_path;   // degraded image, relative to the output dir
    std::string output_path;  // ground truth, relative to the output dir
    std::string instruction;
    Split split = Split::train;
    double clip_score = 0.0;
    std::uint64_t seed = 0;
    DegradationParams params;
    friend bool operator==(const TripletRecord&, const TripletRecord&) = default;
};

inline nlohmann::json to_json(const TripletRecord& r) {
    const auto& p = r.params;
    return {
        {"schema_version", manifest_schema_version},
        {"image_id", r.image_id},
        {"input_path", r.input_path},
        {"output_path", r.output_path},
        {"instruction", r.instruction},
        {"split", std::string(to_string(r.split))},
        {"clip_score", r.clip_score},
        {"seed", r.seed},
        {"params",
         {{"alpha", p.alpha},
          {"light_direction", {p.light_direction[0], p.light_direction[1], p.light_direction[2]}},
          {"ambient", p.ambient},
          {"pattern_kind", std::string(to_string(p.pattern_kind))},
          {"pattern_engine_addition", is_engine_addition(p.pattern_kind)},
          {"opacity", p.opacity},
          {"blur_sigma", p.blur_sigma},
          {"pattern_seed", p.pattern_seed}}},
    };
}

inline TripletRecord record_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != manifest_schema_version)
            throw Error(ErrorKind::MalformedRow, "unsupported manifest schema_version");
        TripletRecord r;
        r.image_id = j.at("image_id").get<std::string>();
        r.input_path = j.at("input_path").get<std::string>();
        r.output_path = j.at("output_path").get<std::string>();
        r.instruction = j.at("instruction").get<std::string>();
        r.split = parse_split(j.at("split").get<std::string>());
        r.clip_score = j.at("clip_score").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        const auto& p = j.at("params");
        r.params.alpha = p.at("alpha").get<double>();
        const auto& l = p.at("light_direction");
        if (!l.is_array() || l.size() != 3) throw Error(ErrorKind::MalformedRow, "light_direction must have 3 entries");
        r.params.light_direction = {l[0].get<double>(), l[1].get<double>(), l[2].get<double>()};
        r.params.ambient = p.at("ambient").get<double>();
        const auto kind = parse_pattern_kind(p.at("pattern_kind").get<std::string>());
        if (!kind) throw Error(ErrorKind::MalformedRow, "unknown pattern_kind");
        r.params.pattern_kind = *kind;
        r.params.opacity = p.at("opacity").get<double>();
        r.params.blur_sigma = p.at("blur_sigma").get<double>();
        r.params.pattern_seed = p.at("pattern_seed").get<std::uint64_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedRow, std::string("manifest row: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::MalformedRow) throw;
        throw Error(ErrorKind::MalformedRow, e.what());
    }
}

inline std::string serialize_record(const TripletRecord& r) { return to_json(r).dump(); }

inline TripletRecord parse_record(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::MalformedRow, "manifest row is not valid JSON");
    return record_from_json(j);
}

inline std::vector<TripletRecord> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileNotFound, path.string());
    std::vector<TripletRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(parse_record(line));
    return out;
}

/// Canonical form: sorted by image_id, one JSON object per line.
inline std::string serialize_manifest(std::vector<TripletRecord> records) {
    std::sort(records.begin(), records.end(),
              [](const TripletRecord& a, const TripletRecord& b) { return a.image_id < b.image_id; });
    std::string out;
    for (const auto& r : records) {
        out += serialize_record(r);
        out += '\n';
    }
    return out;
}

} // namespace relight
