#pragma once

// Multi-Scale Retinex albedo estimation on the masked foreground.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "relight/blur.hpp"
#include "relight/image.hpp"
#include "relight/random.hpp"

namespace relight {

struct MsrConfig {
    std::vector<double> scales{15.0, 80.0, 250.0};
    std::vector<double> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double epsilon = 1e-4;
    std::pair<double, double> norm_percentiles{1.0, 99.0};
    std::pair<double, double> blend_range{0.15, 0.25};

    void validate() const {
        if (scales.empty() || scales.size() != weights.size())
            throw Error(ErrorKind::InvalidArgument, "msr scales and weights must be non-empty and equal length");
        double sum = 0.0;
        for (double w : weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-9)
            throw Error(ErrorKind::InvalidArgument, "msr weights must sum to 1");
        for (double s : scales)
            if (!(s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "msr scale must be >= 0");
        if (!(epsilon >= 0.0)) throw Error(ErrorKind::InvalidArgument, "msr epsilon must be >= 0");
        auto [lo, hi] = norm_percentiles;
        if (!(0.0 <= lo && lo < hi && hi <= 100.0))
            throw Error(ErrorKind::InvalidArgument, "percentiles must satisfy 0 <= low < high <= 100");
        auto [blo, bhi] = blend_range;
        if (!(0.0 <= blo && blo <= bhi && bhi <= 1.0))
            throw Error(ErrorKind::InvalidArgument, "blend range must satisfy 0 <= lo <= hi <= 1");
    }
};

/// Log-domain reflectance R_c = sum_i w_i (log(F_c + eps) - log(G_i * F_c + eps))
/// where F = img * mask. The result is unbounded.
inline ImageRGB msr_reflectance(const ImageRGB& img, const Mask& mask, const MsrConfig& cfg) {
    require_same_size(img, mask, "msr_reflectance");
    cfg.validate();
    const std::size_t n = img.pixel_count();
    const int w = img.width(), h = img.height();

    std::vector<float> fg(n * 3);
    {
        auto src = img.data();
        auto m = mask.data();
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) fg[c * n + i] = src[3 * i + c] * m[i];
    }
    // Each scale contributes log of the ratio rather than a difference of
    // logs, so scaling the input by a power of two cancels bit-exactly. With
    // equal weights the ratios are multiplied first and a single log taken.
    const bool equal_weights =
        std::all_of(cfg.weights.begin(), cfg.weights.end(), [&](double v) { return v == cfg.weights[0]; });
    std::vector<double> acc(n * 3, equal_weights ? 1.0 : 0.0);
    std::vector<float> blurred;
    for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
        blurred = fg;
        detail::blur_planes(blurred, w, h, 3, gaussian_kernel(cfg.scales[s]));
        const double wt = cfg.weights[s];
        for (std::size_t i = 0; i < blurred.size(); ++i) {
            const double ratio =
                (static_cast<double>(fg[i]) + cfg.epsilon) / (static_cast<double>(blurred[i]) + cfg.epsilon);
            if (equal_weights)
                acc[i] *= ratio;
            else
                acc[i] += wt * std::log(ratio);
        }
    }
    if (equal_weights)
        for (auto& v : acc) v = cfg.weights[0] * std::log(v);

    ImageRGB out(w, h);
    detail::from_planes(acc, out);
    return out;
}

namespace detail {
/// Linear-interpolated percentile (the "linear" rule, position p/100*(n-1)).
/// Reorders `v`.
inline double percentile(std::vector<double>& v, double p) {
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (frac == 0.0 || lo + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + frac * (b - a);
}
} // namespace detail

/// Per-channel affine map of [p_low, p_high] (over masked pixels) onto [0,1],
/// clamped. A channel whose percentile spread is below 1e-6 becomes 0.5 on
/// the mask. Background pixels are 0.
inline ImageRGB color_normalize(const ImageRGB& r, const Mask& mask, std::pair<double, double> percentiles) {
    require_same_size(r, mask, "color_normalize");
    auto [plo, phi] = percentiles;
    if (!(0.0 <= plo && plo < phi && phi <= 100.0))
        throw Error(ErrorKind::InvalidArgument, "percentiles must satisfy 0 <= low < high <= 100");
    const std::size_t n = r.pixel_count();
    auto m = mask.data();
    auto src = r.data();
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < n; ++i)
        if (in_mask(m[i])) inside.push_back(i);
    if (inside.empty()) throw Error(ErrorKind::EmptyMask, "color_normalize needs at least one masked pixel");

    ImageRGB out(r.width(), r.height(), 0.0f);
    auto dst = out.data();
    std::vector<double> values(inside.size());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < inside.size(); ++k) values[k] = src[3 * inside[k] + c];
        const double lo = detail::percentile(values, plo);
        const double hi = detail::percentile(values, phi);
        const double span = hi - lo;
        for (std::size_t i : inside) {
            if (span < 1e-6) {
                dst[3 * i + c] = 0.5f;
            } else {
                dst[3 * i + c] = static_cast<float>(std::clamp((src[3 * i + c] - lo) / span, 0.0, 1.0));
            }
        }
    }
    return out;
}

/// alpha weights the original: out = alpha*original + (1-alpha)*albedo.
inline ImageRGB blend_albedo(const ImageRGB& albedo, const ImageRGB& original, double alpha) {
    require_same_size(albedo, original, "blend_albedo");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be in [0,1]");
    ImageRGB out(albedo.width(), albedo.height());
    auto a = albedo.data();
    auto o = original.data();
    auto d = out.data();
    const float fa = static_cast<float>(alpha);
    const float fb = static_cast<float>(1.0 - alpha);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::clamp(fa * o[i] + fb * a[i], 0.0f, 1.0f);
    return out;
}

struct AlbedoResult {
    ImageRGB albedo;
    double alpha = 0.0;
};

/// msr_reflectance -> color_normalize -> blend_albedo, with alpha drawn from
/// cfg.blend_range. The blend partner is the masked foreground, and
/// background pixels are zero in the result.
inline AlbedoResult extract_albedo(const ImageRGB& img, const Mask& mask, const MsrConfig& cfg, Rng& rng) {
    cfg.validate();
    const double alpha = rng.uniform(cfg.blend_range.first, cfg.blend_range.second);
    const ImageRGB reflectance = msr_reflectance(img, mask, cfg);
    const ImageRGB normalized = color_normalize(reflectance, mask, cfg.norm_percentiles);

    ImageRGB foreground = img;
    auto fg = foreground.data();
    auto m = mask.data();
    for (std::size_t i = 0; i < foreground.pixel_count(); ++i)
        for (int c = 0; c < 3; ++c) fg[3 * i + c] *= m[i];

    AlbedoResult res{blend_albedo(normalized, foreground, alpha), alpha};
    auto d = res.albedo.data();
    for (std::size_t i = 0; i < res.albedo.pixel_count(); ++i)
        if (!in_mask(m[i]))
            for (int c = 0; c < 3; ++c) d[3 * i + c] = 0.0f;
    return res;
}

} // namespace relight
