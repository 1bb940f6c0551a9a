#pragma once

// Per-image degradation and the parallel, resumable batch run.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "relight/config.hpp"
#include "relight/filtering.hpp"
#include "relight/intrinsic.hpp"
#include "relight/io.hpp"
#include "relight/manifest.hpp"
#include "relight/resize.hpp"
#include "relight/shading.hpp"
#include "relight/shadows.hpp"

namespace relight {

/// Per-image seed: FNV-1a-64 of the id, xor splitmix64(global_seed), then a
/// splitmix64 finalizer. Independent of processing order.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view image_id) {
    return mix64(fnv1a64(image_id) ^ mix64(global_seed));
}

enum class Stage { load, filter, mask, albedo, degrade, instruction, write };

inline std::string_view to_string(Stage s) {
    switch (s) {
    case Stage::load: return "load";
    case Stage::filter: return "filter";
    case Stage::mask: return "mask";
    case Stage::albedo: return "albedo";
    case Stage::degrade: return "degrade";
    case Stage::instruction: return "instruction";
    case Stage::write: return "write";
    }
    return "unknown";
}

struct StageError {
    std::string image_id;
    Stage stage = Stage::load;
    std::string message;
};

class StageFailure : public std::runtime_error {
public:
    explicit StageFailure(StageError e)
        : std::runtime_error(std::string(to_string(e.stage)) + ": " + e.message), error_(std::move(e)) {}
    const StageError& error() const noexcept { return error_; }

private:
    StageError error_;
};

inline constexpr std::size_t max_instruction_length = 300;

/// Trims, collapses runs of blanks, and accepts a single sentence of at most
/// 300 characters ending in its only terminator (. ! ?).
inline std::string validate_instruction(std::string_view text) {
    auto is_blank = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; };
    std::size_t b = 0, e = text.size();
    while (b < e && is_blank(text[b])) ++b;
    while (e > b && is_blank(text[e - 1])) --e;
    text = text.substr(b, e - b);
    if (text.empty()) throw Error(ErrorKind::EmptyInstruction, "instruction is empty");
    if (text.find_first_of("\r\n") != std::string_view::npos)
        throw Error(ErrorKind::MultiSentence, "instruction spans several lines");

    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == ' ' || c == '\t') {
            if (out.back() != ' ') out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    std::size_t code_points = 0;
    for (unsigned char c : out)
        if ((c & 0xc0) != 0x80) ++code_points;
    if (code_points > max_instruction_length)
        throw Error(ErrorKind::Overlong, "instruction exceeds 300 characters");

    const auto terminators = std::count_if(out.begin(), out.end(), [](char c) { return c == '.' || c == '!' || c == '?'; });
    if (terminators > 1) throw Error(ErrorKind::MultiSentence, "instruction has more than one sentence terminator");
    const char last = out.back();
    if (terminators == 0 || (last != '.' && last != '!' && last != '?'))
        throw Error(ErrorKind::Unterminated, "instruction must end with a sentence terminator");
    return out;
}

/// Intermediate images of one degradation, kept for inspection and tests.
struct DegradeStages {
    ImageRGB albedo;
    ImageRGB shaded;
    ImageRGB shadowed;
    PatternField pattern;
};

struct DegradeResult {
    ImageRGB ground_truth;  // resized source
    Mask mask;              // resized
    ImageRGB degraded;
    DegradationParams params;
    std::optional<DegradeStages> stages;
};

/// Resize -> albedo -> Lambertian shading -> procedural shadow -> gray
/// background. Every random draw comes from one stream seeded with `seed`,
/// in the order alpha, light (u1, u2, ambient), pattern kind, opacity,
/// blur sigma, pattern seed.
inline DegradeResult degrade_image(const ImageRGB& source, const Mask& source_mask, const DepthMap& source_depth,
                                   const PipelineConfig& cfg, std::uint64_t seed, bool keep_stages = false) {
    auto fail = [](Stage s, const std::string& msg) { throw StageFailure({"", s, msg}); };
    if (!source.same_size(source_mask))
        fail(Stage::mask, "mask is " + std::to_string(source_mask.width()) + "x" + std::to_string(source_mask.height()) +
                              ", image is " + std::to_string(source.width()) + "x" + std::to_string(source.height()));
    if (!source.same_size(source_depth))
        fail(Stage::degrade, "depth is " + std::to_string(source_depth.width()) + "x" +
                                 std::to_string(source_depth.height()) + ", image is " +
                                 std::to_string(source.width()) + "x" + std::to_string(source.height()));
    const int res = cfg.target_resolution;
    DegradeResult out;
    out.ground_truth = resize(source, res, res);
    out.mask = resize(source_mask, res, res);
    const DepthMap depth = resize(source_depth, res, res);
    if (!out.ground_truth.all_finite() || !depth.all_finite()) fail(Stage::load, "non-finite samples");

    Rng rng(seed);
    AlbedoResult albedo;
    try {
        albedo = extract_albedo(out.ground_truth, out.mask, cfg.msr, rng);
    } catch (const Error& e) {
        fail(e.kind() == ErrorKind::EmptyMask ? Stage::mask : Stage::albedo, e.what());
    }

    DegradationParams& p = out.params;
    p.alpha = albedo.alpha;
    const LightSample light = sample_light(rng, cfg.ambient_range);
    p.light_direction = light.direction;
    p.ambient = light.ambient;
    p.pattern_kind = select_pattern(cfg.pattern_weights, rng);
    p.opacity = rng.uniform(cfg.opacity_range.first, cfg.opacity_range.second);
    const auto blur = cfg.scaled_blur_range();
    p.blur_sigma = rng.uniform(blur.first, blur.second);
    p.pattern_seed = rng();

    try {
        const NormalMap normals = depth_to_normals(depth, cfg.gradient_scale);
        ImageRGB shaded = lambertian_shade(albedo.albedo, normals, light, out.mask);
        PatternField pattern = generate_pattern(p.pattern_kind, res, res, p.pattern_seed);
        ImageRGB shadowed =
            composite_shadow(shaded, pattern, out.mask, {p.pattern_kind, p.opacity, p.blur_sigma, p.pattern_seed});
        out.degraded = place_on_gray(shadowed, out.mask, cfg.gray_level);
        out.degraded.clamp01();
        if (keep_stages)
            out.stages = DegradeStages{std::move(albedo.albedo), std::move(shaded), std::move(shadowed), std::move(pattern)};
    } catch (const Error& e) {
        fail(Stage::degrade, e.what());
    }
    return out;
}

struct ProcessResult {
    ImageRGB ground_truth;
    ImageRGB degraded;
    TripletRecord record;
    std::optional<DegradeStages> stages;
};

inline std::string degraded_relpath(std::string_view id) { return "degraded/" + std::string(id) + ".png"; }
inline std::string ground_truth_relpath(std::string_view id) { return "ground_truth/" + std::string(id) + ".png"; }

/// One full triplet for an image that already passed the score filter.
inline ProcessResult process_image(const std::string& id, const ImageRGB& ground_truth, const Mask& mask,
                                   const DepthMap& depth, std::string_view instruction, double score,
                                   const PipelineConfig& cfg, Split split = Split::train, bool keep_stages = false) {
    std::string text;
    try {
        text = validate_instruction(instruction);
    } catch (const Error& e) {
        throw StageFailure({id, Stage::instruction, e.what()});
    }
    const std::uint64_t seed = derive_seed(cfg.global_seed, id);
    DegradeResult d;
    try {
        d = degrade_image(ground_truth, mask, depth, cfg, seed, keep_stages);
    } catch (const StageFailure& f) {
        StageError e = f.error();
        e.image_id = id;
        throw StageFailure(std::move(e));
    }
    ProcessResult r;
    r.record.image_id = id;
    r.record.input_path = degraded_relpath(id);
    r.record.output_path = ground_truth_relpath(id);
    r.record.instruction = std::move(text);
    r.record.split = split;
    r.record.clip_score = score;
    r.record.seed = seed;
    r.record.params = d.params;
    r.ground_truth = std::move(d.ground_truth);
    r.degraded = std::move(d.degraded);
    r.stages = std::move(d.stages);
    return r;
}

// ---------------------------------------------------------------------------
// Batch run

struct RunOptions {
    unsigned workers = 1;
    bool resume = false;
};

struct RunSummary {
    std::size_t total_scored = 0;
    std::size_t processed = 0;  // includes records carried over by resume
    std::size_t resumed = 0;
    std::size_t skipped_by_filter = 0;
    std::size_t unassigned = 0;
    std::vector<StageError> failed;
};

/// Output layout under cfg.output_dir.
struct OutputLayout {
    std::filesystem::path root;
    std::filesystem::path manifest() const { return root / "manifest.jsonl"; }
    std::filesystem::path journal() const { return root / "journal.jsonl"; }
    std::filesystem::path splits() const { return root / "splits.jsonl"; }
    std::filesystem::path failures() const { return root / "failures.jsonl"; }
    std::filesystem::path degraded_dir() const { return root / "degraded"; }
    std::filesystem::path ground_truth_dir() const { return root / "ground_truth"; }
};

/// Ids become file names, so path separators and dot-only names are refused.
inline bool safe_image_id(std::string_view id) {
    if (id.empty() || id == "." || id == "..") return false;
    return id.find_first_of("/\\") == std::string_view::npos && id.find('\0') == std::string_view::npos;
}

inline std::optional<std::filesystem::path> find_source_image(const std::filesystem::path& dir, const std::string& id) {
    for (const char* ext : {".png", ".jpg", ".jpeg", ".PNG", ".JPG", ".JPEG"}) {
        auto p = dir / (id + ext);
        std::error_code ec;
        if (std::filesystem::is_regular_file(p, ec)) return p;
    }
    return std::nullopt;
}

/// Reads the instructions sidecar: {"image_id", "instruction"} per line.
/// Later rows win on duplicate ids.
inline std::map<std::string, std::string> read_instructions(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("image_id") || !j["image_id"].is_string() ||
            !j.contains("instruction") || !j["instruction"].is_string())
            continue;
        out[j["image_id"].get<std::string>()] = j["instruction"].get<std::string>();
    }
    return out;
}

struct KeptImage {
    std::string image_id;
    double score = 0.0;
    Split split = Split::unassigned;
};

struct FilterOutcome {
    std::size_t total_scored = 0;
    std::size_t skipped_by_filter = 0;
    std::vector<KeptImage> kept;  // sorted by id
    std::vector<StageError> failed;
};

/// Score filter plus split assignment. Kept ids beyond the configured split
/// counts are marked unassigned. A missing scores file counts as empty.
inline FilterOutcome filter_and_split(const PipelineConfig& cfg) {
    FilterOutcome out;
    std::vector<ScoreFileRow> rows;
    std::error_code ec;
    if (std::filesystem::exists(cfg.scores_path, ec)) rows = read_scores(cfg.scores_path, cfg.prompt_count);
    out.total_scored = rows.size();
    std::map<std::string, double> kept;
    std::set<std::string> seen;
    for (const auto& r : rows) {
        if (!r.score) {
            out.failed.push_back({r.image_id, Stage::filter, "line " + std::to_string(r.line_number) + ": " + r.error});
            continue;
        }
        if (!seen.insert(r.image_id).second) {
            out.failed.push_back({r.image_id, Stage::filter, "duplicate score row"});
            continue;
        }
        if (passes_threshold(r.score->mean_score, cfg.threshold))
            kept.emplace(r.image_id, r.score->mean_score);
        else
            ++out.skipped_by_filter;
    }
    if (kept.empty()) return out;
    std::vector<std::string> ids;
    for (const auto& [id, s] : kept) ids.push_back(id);
    std::map<std::string, Split> split_of;
    for (const auto& a : split_dataset(ids, cfg.split_counts, cfg.global_seed)) split_of[a.image_id] = a.split;
    for (const auto& [id, score] : kept) {
        auto it = split_of.find(id);
        out.kept.push_back({id, score, it == split_of.end() ? Split::unassigned : it->second});
    }
    return out;
}

/// splits.jsonl body: {"image_id", "split"} per kept id, sorted by id.
inline std::string serialize_splits(const FilterOutcome& f) {
    std::string text;
    for (const auto& k : f.kept)
        text += nlohmann::json{{"image_id", k.image_id}, {"split", std::string(to_string(k.split))}}.dump() + "\n";
    return text;
}

namespace detail {

struct WorkItem {
    std::string id;
    Split split;
    double score;
};

/// Journal lines whose images are both on disk. A torn trailing line from an
/// interrupted run simply fails to parse and is ignored.
inline std::map<std::string, TripletRecord> completed_from_journal(const OutputLayout& out) {
    std::map<std::string, TripletRecord> done;
    std::ifstream in(out.journal());
    std::string line;
    while (std::getline(in, line)) {
        try {
            auto r = parse_record(line);
            std::error_code ec;
            if (std::filesystem::is_regular_file(out.root / r.input_path, ec) &&
                std::filesystem::is_regular_file(out.root / r.output_path, ec))
                done[r.image_id] = std::move(r);
        } catch (const Error&) {
        }
    }
    return done;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace detail

/// Filter, split, and process every assigned image with per-image seeds.
/// Output bytes do not depend on the worker count or scheduling.
inline RunSummary run_batch(const PipelineConfig& cfg, const RunOptions& opts = {}) {
    cfg.validate();
    namespace fs = std::filesystem;
    RunSummary summary;
    const OutputLayout out{cfg.output_dir};

    std::error_code ec;
    if (!fs::is_directory(cfg.images_dir, ec))
        throw Error(ErrorKind::FileNotFound, "images dir " + cfg.images_dir.string());
    fs::create_directories(out.degraded_dir(), ec);
    fs::create_directories(out.ground_truth_dir(), ec);
    if (ec || !fs::is_directory(out.root)) throw Error(ErrorKind::Unwritable, "output dir " + out.root.string());

    FilterOutcome filtered = filter_and_split(cfg);
    summary.total_scored = filtered.total_scored;
    summary.skipped_by_filter = filtered.skipped_by_filter;
    summary.failed = filtered.failed;
    std::vector<detail::WorkItem> work;
    for (const auto& k : filtered.kept) {
        if (k.split == Split::unassigned)
            ++summary.unassigned;
        else
            work.push_back({k.image_id, k.split, k.score});
    }
    const std::string splits_text = serialize_splits(filtered);
    detail::write_text_atomic(out.splits(), splits_text);

    // Resume state.
    std::map<std::string, TripletRecord> done;
    if (opts.resume) {
        done = detail::completed_from_journal(out);
    } else {
        fs::remove(out.journal(), ec);
    }
    std::vector<TripletRecord> records;
    std::vector<detail::WorkItem> todo;
    for (const auto& item : work) {
        auto it = done.find(item.id);
        if (it != done.end() && it->second.split == item.split) {
            records.push_back(it->second);
            ++summary.resumed;
        } else {
            todo.push_back(item);
        }
    }
    // Rewrite the journal with only the carried-over rows so a torn tail
    // never sits in the middle of the file.
    {
        std::string text;
        for (const auto& r : records) text += serialize_record(r) + "\n";
        detail::write_text_atomic(out.journal(), text);
    }

    const auto instructions = read_instructions(cfg.instructions_path);
    std::ofstream journal(out.journal(), std::ios::app);
    if (!journal) throw Error(ErrorKind::Unwritable, out.journal().string());
    std::mutex sink;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            const auto& item = todo[i];
            try {
                if (!safe_image_id(item.id)) throw StageFailure({item.id, Stage::load, "image id is not a safe file name"});
                const auto src = find_source_image(cfg.images_dir, item.id);
                if (!src) throw StageFailure({item.id, Stage::load, "no image file for id"});
                ImageRGB img;
                Mask mask;
                DepthMap depth;
                try {
                    img = load_image(*src);
                } catch (const Error& e) {
                    throw StageFailure({item.id, Stage::load, e.what()});
                }
                try {
                    mask = load_mask(cfg.masks_dir / (item.id + ".png"));
                } catch (const Error& e) {
                    throw StageFailure({item.id, Stage::mask, e.what()});
                }
                try {
                    depth = load_depth(cfg.depth_dir / (item.id + ".png"));
                } catch (const Error& e) {
                    throw StageFailure({item.id, Stage::degrade, e.what()});
                }
                auto it = instructions.find(item.id);
                if (it == instructions.end()) throw StageFailure({item.id, Stage::instruction, "no instruction for id"});

                ProcessResult r = process_image(item.id, img, mask, depth, it->second, item.score, cfg, item.split);
                try {
                    save_image(r.degraded, out.root / r.record.input_path);
                    save_image(r.ground_truth, out.root / r.record.output_path);
                } catch (const Error& e) {
                    throw StageFailure({item.id, Stage::write, e.what()});
                }
                std::lock_guard lock(sink);
                journal << serialize_record(r.record) << '\n' << std::flush;
                records.push_back(std::move(r.record));
            } catch (const StageFailure& f) {
                std::lock_guard lock(sink);
                summary.failed.push_back(f.error());
            } catch (const std::exception& e) {
                std::lock_guard lock(sink);
                summary.failed.push_back({item.id, Stage::degrade, e.what()});
            }
        }
    };
    const unsigned n = std::max(1u, opts.workers);
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    journal.close();

    summary.processed = records.size();
    detail::write_text_atomic(out.manifest(), serialize_manifest(std::move(records)));

    std::sort(summary.failed.begin(), summary.failed.end(), [](const StageError& a, const StageError& b) {
        return std::tie(a.image_id, a.message) < std::tie(b.image_id, b.message);
    });
    std::string failures;
    for (const auto& f : summary.failed)
        failures += nlohmann::json{{"image_id", f.image_id}, {"stage", std::string(to_string(f.stage))}, {"message", f.message}}
                        .dump() +
                    "\n";
    detail::write_text_atomic(out.failures(), failures);
    return summary;
}

} // namespace relight
