// relight: command-line front end for the triplet data engine.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "relight/config.hpp"
#include "relight/engine.hpp"
#include "relight/io.hpp"
#include "relight/manifest.hpp"
#include "relight/metrics.hpp"
#include "relight/resize.hpp"
#include "relight/shadows.hpp"

namespace fs = std::filesystem;
using namespace relight;

namespace {

// Left-justify by code points; the arrows and ± are multi-byte.
std::string pad(const std::string& s, std::size_t width) {
    const auto cols = static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
    return cols >= width ? s : s + std::string(width - cols, ' ');
}

nlohmann::json params_json(const DegradationParams& p) {
    return {{"alpha", p.alpha},
            {"light_direction", {p.light_direction[0], p.light_direction[1], p.light_direction[2]}},
            {"ambient", p.ambient},
            {"pattern_kind", std::string(to_string(p.pattern_kind))},
            {"opacity", p.opacity},
            {"blur_sigma", p.blur_sigma},
            {"pattern_seed", p.pattern_seed}};
}

PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_config(path);
}

nlohmann::json failure_json(const StageError& e) {
    return {{"image_id", e.image_id}, {"stage", std::string(to_string(e.stage))}, {"message", e.message}};
}

int cmd_filter(const std::string& config, std::optional<std::uint64_t> seed, const std::string& output) {
    PipelineConfig cfg = load_config(config);
    if (seed) cfg.global_seed = *seed;
    if (!output.empty()) cfg.output_dir = output;
    const FilterOutcome f = filter_and_split(cfg);
    fs::create_directories(cfg.output_dir);
    std::string keep;
    for (const auto& k : f.kept) keep += k.image_id + "\n";
    auto write = [](const fs::path& p, const std::string& text) {
        detail::write_file_atomic(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    };
    write(cfg.output_dir / "keep.txt", keep);
    write(cfg.output_dir / "splits.jsonl", serialize_splits(f));
    std::map<Split, std::size_t> counts;
    for (const auto& k : f.kept) ++counts[k.split];
    nlohmann::json j{{"scored", f.total_scored},
                     {"kept", f.kept.size()},
                     {"skipped_by_filter", f.skipped_by_filter},
                     {"train", counts[Split::train]},
                     {"val", counts[Split::val]},
                     {"test", counts[Split::test]},
                     {"unassigned", counts[Split::unassigned]},
                     {"failed", nlohmann::json::array()}};
    for (const auto& e : f.failed) j["failed"].push_back(failure_json(e));
    std::cout << j.dump(2) << '\n';
    return f.failed.empty() ? 0 : 1;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, unsigned workers, bool resume,
            const std::string& output) {
    PipelineConfig cfg = load_config(config);
    if (seed) cfg.global_seed = *seed;
    if (!output.empty()) cfg.output_dir = output;
    const RunSummary s = run_batch(cfg, {workers, resume});
    nlohmann::json j{{"scored", s.total_scored},         {"processed", s.processed},
                     {"resumed", s.resumed},             {"skipped_by_filter", s.skipped_by_filter},
                     {"unassigned", s.unassigned},       {"failed", nlohmann::json::array()}};
    for (const auto& e : s.failed) j["failed"].push_back(failure_json(e));
    std::cout << j.dump(2) << '\n';
    return s.failed.empty() ? 0 : 1;
}

int cmd_degrade(const std::string& config, std::optional<std::uint64_t> seed, const std::string& image,
                const std::string& mask, const std::string& depth, std::string id, const std::string& output,
                const std::string& stages_dir) {
    PipelineConfig cfg = config_or_default(config);
    if (seed) cfg.global_seed = *seed;
    if (id.empty()) id = fs::path(image).stem().string();
    const std::uint64_t image_seed = derive_seed(cfg.global_seed, id);
    const auto result = degrade_image(load_image(image), load_mask(mask), load_depth(depth), cfg, image_seed,
                                      !stages_dir.empty());
    save_image(result.degraded, output);
    if (result.stages) {
        fs::create_directories(stages_dir);
        save_image(result.ground_truth, fs::path(stages_dir) / "ground_truth.png");
        save_image(result.stages->albedo, fs::path(stages_dir) / "albedo.png");
        save_image(result.stages->shaded, fs::path(stages_dir) / "shaded.png");
        save_image(result.stages->shadowed, fs::path(stages_dir) / "shadowed.png");
        save_png8(result.stages->pattern, fs::path(stages_dir) / "pattern.png");
    }
    nlohmann::json j{{"image_id", id}, {"seed", image_seed}, {"params", params_json(result.params)}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_metrics(const std::string& manifest_path, const std::string& root, const std::string& predictions,
                const std::vector<std::string>& externals, const std::string& split_name, bool as_json) {
    auto records = read_manifest(manifest_path);
    const fs::path data_root = root.empty() ? fs::path(manifest_path).parent_path() : fs::path(root);
    std::set<std::string> known;
    for (const auto& r : records) known.insert(r.image_id);
    if (split_name != "all") {
        const Split want = parse_split(split_name);
        std::erase_if(records, [&](const TripletRecord& r) { return r.split != want; });
    }
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.image_id);

    std::vector<MetricReport> rows;
    if (!predictions.empty()) {
        std::vector<double> values;
        for (const auto& r : records) {
            const auto pred = find_source_image(predictions, r.image_id);
            if (!pred) throw Error(ErrorKind::FileNotFound, "no prediction for " + r.image_id);
            values.push_back(ssim(load_image(*pred), load_image(data_root / r.output_path)));
        }
        rows.push_back(aggregate(values, "SSIM", MetricDirection::higher_better));
    }
    for (const auto& spec : externals) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error(ErrorKind::InvalidArgument, "--external expects name=path, got '" + spec + "'");
        const std::string name = spec.substr(0, eq);
        std::vector<double> values;
        // Sidecars may cover the whole manifest; keep the selected split.
        for (const auto& v : collect_external(spec.substr(eq + 1), known))
            if (ids.contains(v.image_id)) values.push_back(v.value);
        std::string lower = name;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        const auto dir = lower.find("lpips") != std::string::npos ? MetricDirection::lower_better
                                                                  : MetricDirection::higher_better;
        rows.push_back(aggregate(values, name, dir));
    }
    if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to report: pass --predictions or --external");

    if (as_json) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows)
            j.push_back({{"metric", r.name},
                         {"direction", r.direction == MetricDirection::lower_better ? "lower" : "higher"},
                         {"mean", r.mean},
                         {"std", r.std},
                         {"n", r.n},
                         {"formatted", r.formatted()}});
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << pad("Metric", 16) << ' ' << pad("mean ± std", 22) << " n\n";
        for (const auto& r : rows) {
            const std::string label =
                r.name + (r.direction == MetricDirection::lower_better ? " (↓)" : " (↑)");
            std::cout << pad(label, 16) << ' ' << pad(r.formatted(), 22) << ' ' << r.n << '\n';
        }
    }
    return 0;
}

int cmd_preview(const std::string& manifest_path, const std::string& root, std::size_t count, std::uint64_t seed,
                int tile, const std::string& output, const std::string& patterns_dir, int pattern_size) {
    if (!patterns_dir.empty()) {
        fs::create_directories(patterns_dir);
        for (auto kind : all_pattern_kinds)
            save_png8(generate_pattern(kind, pattern_size, pattern_size, seed),
                      fs::path(patterns_dir) / (std::string(to_string(kind)) + ".png"));
        if (manifest_path.empty()) return 0;
    }
    auto records = read_manifest(manifest_path);
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "manifest has no records");
    const fs::path data_root = root.empty() ? fs::path(manifest_path).parent_path() : fs::path(root);
    std::sort(records.begin(), records.end(),
              [](const TripletRecord& a, const TripletRecord& b) { return a.image_id < b.image_id; });
    Rng rng(seed);
    for (std::size_t i = records.size(); i > 1; --i) std::swap(records[i - 1], records[rng.below(i)]);
    records.resize(std::min(count, records.size()));

    // One row per triplet: degraded | ground truth.
    const int pad = 4;
    ImageRGB sheet(2 * tile + 3 * pad, static_cast<int>(records.size()) * (tile + pad) + pad, 1.0f);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int y0 = pad + static_cast<int>(i) * (tile + pad);
        const ImageRGB cells[2] = {resize(load_image(data_root / records[i].input_path), tile, tile),
                                   resize(load_image(data_root / records[i].output_path), tile, tile)};
        for (int k = 0; k < 2; ++k) {
            const int x0 = pad + k * (tile + pad);
            for (int y = 0; y < tile; ++y)
                for (int x = 0; x < tile; ++x)
                    for (int c = 0; c < 3; ++c) sheet.at(x0 + x, y0 + y, c) = cells[k].at(x, y, c);
        }
    }
    save_image(sheet, output);
    for (const auto& r : records) std::cout << r.image_id << '\t' << r.instruction << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relighting triplet data engine"};
    app.require_subcommand(1);

    std::string config, output;
    std::optional<std::uint64_t> seed;

    auto* filter = app.add_subcommand("filter", "Score filter and train/val/test split");
    filter->add_option("--config", config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    filter->add_option("--seed", seed, "Override global_seed");
    filter->add_option("--output", output, "Override output_dir");

    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    bool resume = false;
    auto* run = app.add_subcommand("run", "Full pipeline over a dataset");
    run->add_option("--config", config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override global_seed");
    run->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 1024u));
    run->add_flag("--resume", resume, "Keep finished images from an interrupted run");
    run->add_option("--output", output, "Override output_dir");

    std::string image, mask, depth, id, stages;
    auto* degrade = app.add_subcommand("degrade", "Degrade one image and print its parameters");
    degrade->add_option("--config", config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
    degrade->add_option("--seed", seed, "Override global_seed");
    degrade->add_option("--image", image)->required()->check(CLI::ExistingFile);
    degrade->add_option("--mask", mask)->required()->check(CLI::ExistingFile);
    degrade->add_option("--depth", depth)->required()->check(CLI::ExistingFile);
    degrade->add_option("--id", id, "Image id for seeding (default: file stem)");
    degrade->add_option("--output", output, "Degraded PNG path")->required();
    degrade->add_option("--stages", stages, "Directory for intermediate images");

    std::string manifest, root, predictions, split_name = "test";
    std::vector<std::string> externals;
    bool as_json = false;
    auto* metrics = app.add_subcommand("metrics", "SSIM and external metric table");
    metrics->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    metrics->add_option("--root", root, "Dataset root (default: manifest dir)");
    metrics->add_option("--predictions", predictions, "Directory of <image_id>.png predictions");
    metrics->add_option("--external", externals, "name=path sidecar of per-image values");
    metrics->add_option("--split", split_name, "train|val|test|all");
    metrics->add_flag("--json", as_json);

    std::size_t count = 8;
    std::uint64_t preview_seed = 0;
    int tile = 128, pattern_size = 256;
    std::string patterns_dir;
    auto* preview = app.add_subcommand("preview", "Contact sheet of sampled triplets");
    preview->add_option("--manifest", manifest)->check(CLI::ExistingFile);
    preview->add_option("--root", root, "Dataset root (default: manifest dir)");
    preview->add_option("--count", count);
    preview->add_option("--seed", preview_seed);
    preview->add_option("--tile", tile)->check(CLI::Range(16, 2048));
    preview->add_option("--output", output, "Contact sheet PNG");
    preview->add_option("--patterns", patterns_dir, "Also dump one raw pattern PNG per generator here");
    preview->add_option("--pattern-size", pattern_size)->check(CLI::Range(16, 4096));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*filter) return cmd_filter(config, seed, output);
        if (*run) return cmd_run(config, seed, workers, resume, output);
        if (*degrade) return cmd_degrade(config, seed, image, mask, depth, id, output, stages);
        if (*metrics) return cmd_metrics(manifest, root, predictions, externals, split_name, as_json);
        if (*preview) {
            if (manifest.empty() && patterns_dir.empty())
                throw Error(ErrorKind::InvalidArgument, "preview needs --manifest or --patterns");
            if (!manifest.empty() && output.empty()) throw Error(ErrorKind::InvalidArgument, "preview needs --output");
            return cmd_preview(manifest, root, count, preview_seed, tile, output, patterns_dir, pattern_size);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "relight: %s error: %s\n", std::string(to_string(e.kind())).c_str(), e.what());
        return 2;
    } catch (const StageFailure& e) {
        std::fprintf(stderr, "relight: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "relight: %s\n", e.what());
        return 2;
    }
    return 0;
}
