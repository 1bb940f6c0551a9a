#pragma once

// SSIM and mean/std aggregation of per-image metric values.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relight/blur.hpp"
#include "relight/image.hpp"

namespace relight {

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Normalized 2-D Gaussian window as the outer product of a 1-D kernel.
inline std::vector<double> ssim_window_1d(const SsimParams& p) {
    std::vector<double> k(p.window);
    const int r = p.window / 2;
    double sum = 0.0;
    for (int i = 0; i < p.window; ++i) {
        k[i] = std::exp(-static_cast<double>((i - r) * (i - r)) / (2.0 * p.sigma * p.sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

inline std::vector<double> luma_plane(const ImageRGB& img) {
    std::vector<double> out(img.pixel_count());
    auto d = img.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = 0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2];
    return out;
}

/// Single-scale SSIM on Rec.601 luma: Gaussian 11x11 window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, L = 1, averaged over the window positions that
/// fit entirely inside the image.
inline double ssim(const ImageRGB& a, const ImageRGB& b, const SsimParams& p = {}) {
    require_same_size(a, b, "ssim");
    const int w = a.width(), h = a.height();
    if (w < p.window || h < p.window)
        throw Error(ErrorKind::DegenerateSize, "ssim needs images at least as large as the window");
    const auto x = luma_plane(a);
    const auto y = luma_plane(b);
    const auto k = ssim_window_1d(p);
    const int ow = w - p.window + 1, oh = h - p.window + 1;

    // Valid-mode separable filtering of x, y, x^2, y^2, xy.
    auto filter = [&](auto&& value) {
        std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < ow; ++c) {
                double s = 0.0;
                for (int t = 0; t < p.window; ++t) s += k[t] * value(static_cast<std::size_t>(r) * w + c + t);
                tmp[static_cast<std::size_t>(r) * ow + c] = s;
            }
        std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
        for (int r = 0; r < oh; ++r)
            for (int c = 0; c < ow; ++c) {
                double s = 0.0;
                for (int t = 0; t < p.window; ++t) s += k[t] * tmp[static_cast<std::size_t>(r + t) * ow + c];
                out[static_cast<std::size_t>(r) * ow + c] = s;
            }
        return out;
    };
    const auto mx = filter([&](std::size_t i) { return x[i]; });
    const auto my = filter([&](std::size_t i) { return y[i]; });
    const auto sxx = filter([&](std::size_t i) { return x[i] * x[i]; });
    const auto syy = filter([&](std::size_t i) { return y[i] * y[i]; });
    const auto sxy = filter([&](std::size_t i) { return x[i] * y[i]; });

    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

enum class MetricDirection { higher_better, lower_better };

struct MetricReport {
    std::string name;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t n = 0;
    MetricDirection direction = MetricDirection::higher_better;

    /// "mean ± std" with four decimals.
    std::string formatted() const {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.4f ± %.4f", mean, std);
        return buf;
    }
};

inline MetricReport aggregate(std::span<const double> values, std::string name, MetricDirection direction) {
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "cannot aggregate an empty metric list");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {std::move(name), mean, std::sqrt(ss / static_cast<double>(values.size())), values.size(), direction};
}

struct MetricValue {
    std::string image_id;
    double value = 0.0;
    friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

/// Reads an external metric sidecar ({"image_id", "value"} per line) and
/// checks every id against `known_ids`.
inline std::vector<MetricValue> collect_external(const std::filesystem::path& path,
                                                 const std::set<std::string>& known_ids) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileNotFound, path.string());
    std::vector<MetricValue> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto row = nlohmann::json::parse(line, nullptr, false);
        const std::string where = path.string() + ":" + std::to_string(n);
        if (row.is_discarded() || !row.is_object() || !row.contains("image_id") || !row["image_id"].is_string() ||
            !row.contains("value") || !row["value"].is_number())
            throw Error(ErrorKind::MalformedRow, where + ": expected {\"image_id\": string, \"value\": number}");
        MetricValue v{row["image_id"].get<std::string>(), row["value"].get<double>()};
        if (!std::isfinite(v.value)) throw Error(ErrorKind::MalformedRow, where + ": non-finite value");
        if (!known_ids.contains(v.image_id))
            throw Error(ErrorKind::UnknownId, where + ": image id '" + v.image_id + "' is not in the manifest");
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace relight
