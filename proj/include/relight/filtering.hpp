#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relight/error.hpp"
#include "relight/random.hpp"

namespace relight {

inline constexpr double default_score_threshold = 0.21;

/// Lighting-quality prompts scored against each image. The first four are the
/// published ones; the last three complete the set of seven and are engine
/// defaults.
inline const std::vector<std::string>& default_lighting_prompts() {
    static const std::vector<std::string> prompts = {
        "beautiful lighting",   "professional lighting", "well lit face",
        "bright and clear lighting",
        "soft studio lighting", "evenly lit portrait",   "clear natural light",
    };
    return prompts;
}

struct FilterScore {
    std::string image_id;
    std::vector<double> prompt_scores;
    double mean_score = 0.0;
};

enum class Split { train, val, test, unassigned };

inline std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
    }
    return "unassigned";
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    throw Error(ErrorKind::InvalidArgument, "unknown split '" + std::string(s) + "'");
}

struct SplitAssignment {
    std::string image_id;
    Split split = Split::train;
    friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

struct SplitCounts {
    std::size_t train = 10000;
    std::size_t val = 1000;
    std::size_t test = 1000;
    std::size_t total() const noexcept { return train + val + test; }
};

inline double average_scores(std::span<const double> scores) {
    if (scores.empty()) throw Error(ErrorKind::EmptyInput, "no prompt scores");
    double sum = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s)) throw Error(ErrorKind::NonFinite, "non-finite prompt score");
        sum += s;
    }
    return sum / static_cast<double>(scores.size());
}

/// Strict comparison: a score equal to the threshold is rejected.
inline bool passes_threshold(double mean_score, double threshold = default_score_threshold) {
    return mean_score > threshold;
}

/// Seeded shuffle of the sorted ids, then train/val/test in that order.
/// Ids beyond counts.total() are left out of the result.
inline std::vector<SplitAssignment> split_dataset(std::vector<std::string> ids, const SplitCounts& counts,
                                                  std::uint64_t seed) {
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw Error(ErrorKind::InvalidArgument, "duplicate image ids in split input");
    if (counts.total() > ids.size())
        throw Error(ErrorKind::InsufficientIds, "requested " + std::to_string(counts.total()) +
                                                    " ids for splitting but only " +
                                                    std::to_string(ids.size()) + " kept");
    Rng rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(ids[i - 1], ids[j]);
    }
    std::vector<SplitAssignment> out;
    out.reserve(counts.total());
    std::size_t next = 0;
    for (auto [split, n] : {std::pair{Split::train, counts.train}, std::pair{Split::val, counts.val},
                            std::pair{Split::test, counts.test}})
        for (std::size_t i = 0; i < n; ++i) out.push_back({std::move(ids[next++]), split});
    return out;
}

/// Parses one scores row: {"image_id": ..., "prompt_scores": [...]}.
inline FilterScore parse_score_row(std::string_view line, std::size_t expected_prompts) {
    nlohmann::json row;
    try {
        row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedRow, e.what());
    }
    if (!row.is_object() || !row.contains("image_id") || !row["image_id"].is_string() ||
        !row.contains("prompt_scores") || !row["prompt_scores"].is_array())
        throw Error(ErrorKind::MalformedRow, "score row needs string image_id and array prompt_scores");
    FilterScore fs;
    fs.image_id = row["image_id"].get<std::string>();
    if (fs.image_id.empty()) throw Error(ErrorKind::MalformedRow, "empty image_id");
    for (const auto& v : row["prompt_scores"]) {
        if (!v.is_number()) throw Error(ErrorKind::MalformedRow, fs.image_id + ": non-numeric prompt score");
        fs.prompt_scores.push_back(v.get<double>());
    }
    if (fs.prompt_scores.size() != expected_prompts)
        throw Error(ErrorKind::MalformedRow, fs.image_id + ": expected " + std::to_string(expected_prompts) +
                                                 " prompt scores, got " +
                                                 std::to_string(fs.prompt_scores.size()));
    fs.mean_score = average_scores(fs.prompt_scores);
    return fs;
}

struct ScoreFileRow {
    std::size_t line_number = 0;
    std::string image_id;  // best effort, may be empty for unparsable rows
    std::optional<FilterScore> score;
    std::string error;
};

/// Reads a line-delimited scores file. Bad rows are reported per line rather
/// than aborting the read.
inline std::vector<ScoreFileRow> read_scores(const std::filesystem::path& path, std::size_t expected_prompts) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileNotFound, path.string());
    std::vector<ScoreFileRow> rows;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ScoreFileRow r;
        r.line_number = n;
        try {
            r.score = parse_score_row(line, expected_prompts);
            r.image_id = r.score->image_id;
        } catch (const Error& e) {
            r.error = e.what();
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_object() && j.contains("image_id") && j["image_id"].is_string())
                r.image_id = j["image_id"].get<std::string>();
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace relight
