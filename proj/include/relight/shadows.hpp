#pragma once

// Procedural cast-shadow patterns and their compositing onto the shaded
// subject. Pattern fields use 1 for fully occluded.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relight/blur.hpp"
#include "relight/image.hpp"
#include "relight/noise.hpp"
#include "relight/random.hpp"

namespace relight {

enum class PatternKind {
    VenetianBlinds,
    WindowFrame,
    FoliageFbm,
    Branches,
    Curtains,
    Fence,
    ArchScreen,
    // Engine additions beyond the seven published generators.
    Lattice,
    PalmFronds,
    CloudNoise,
};

inline constexpr std::size_t pattern_kind_count = 10;

inline constexpr std::array<PatternKind, pattern_kind_count> all_pattern_kinds{
    PatternKind::VenetianBlinds, PatternKind::WindowFrame, PatternKind::FoliageFbm, PatternKind::Branches,
    PatternKind::Curtains,       PatternKind::Fence,       PatternKind::ArchScreen, PatternKind::Lattice,
    PatternKind::PalmFronds,     PatternKind::CloudNoise,
};

inline constexpr std::string_view to_string(PatternKind k) {
    constexpr std::array<std::string_view, pattern_kind_count> names{
        "venetian_blinds", "window_frame", "foliage_fbm", "branches",    "curtains",
        "fence",           "arch_screen",  "lattice",     "palm_fronds", "cloud_noise",
    };
    return names[static_cast<std::size_t>(k)];
}

inline std::optional<PatternKind> parse_pattern_kind(std::string_view name) {
    for (auto k : all_pattern_kinds)
        if (to_string(k) == name) return k;
    return std::nullopt;
}

/// True for the three generators that are not among the published seven.
inline constexpr bool is_engine_addition(PatternKind k) {
    return k == PatternKind::Lattice || k == PatternKind::PalmFronds || k == PatternKind::CloudNoise;
}

using PatternWeights = std::array<double, pattern_kind_count>;

inline constexpr PatternWeights uniform_pattern_weights() {
    PatternWeights w{};
    w.fill(0.1);
    return w;
}

struct ShadowParams {
    PatternKind kind = PatternKind::VenetianBlinds;
    double opacity = 0.5;
    double blur_sigma = 0.0;
    std::uint64_t pattern_seed = 0;
};

inline constexpr std::pair<double, double> default_opacity_range{0.35, 0.6};
/// Blur range at 512x512; scaled linearly with resolution.
inline constexpr std::pair<double, double> default_shadow_blur_range{2.0, 8.0};

namespace patterns {

inline double frac(double v) { return v - std::floor(v); }

/// Evaluates an occupancy function on an ss x ss subgrid per pixel.
template <class F>
PatternField supersample(int w, int h, int ss, F&& occupied) {
    PatternField out(w, h);
    const double step = 1.0 / ss;
    const float norm = 1.0f / static_cast<float>(ss * ss);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int hits = 0;
            for (int j = 0; j < ss; ++j)
                for (int i = 0; i < ss; ++i)
                    if (occupied(x + (i + 0.5) * step, y + (j + 0.5) * step)) ++hits;
            out.at(x, y) = static_cast<float>(hits) * norm;
        }
    return out;
}

inline double quantile(std::vector<float> v, double q) {
    const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

inline double mean(const PatternField& f) {
    double s = 0.0;
    for (float v : f.data()) s += v;
    return s / static_cast<double>(f.pixel_count());
}

struct BlindsShape {
    double period = 16.0;  // pixels between slat starts
    double angle = 0.0;    // radians; 0 = horizontal slats
    double duty = 0.5;     // occluded fraction of each period
    double phase = 0.0;
};

/// Rotated periodic stripes.
inline PatternField venetian_blinds(int w, int h, const BlindsShape& b) {
    const double sn = std::sin(b.angle), cs = std::cos(b.angle);
    return supersample(w, h, 2, [&](double px, double py) {
        return frac((-px * sn + py * cs) / b.period + b.phase) < b.duty;
    });
}

inline PatternField window_frame(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    const double angle = rng.uniform(-0.25, 0.25);
    const double left = w * rng.uniform(0.05, 0.3), right = w * rng.uniform(0.7, 0.95);
    const double top = h * rng.uniform(0.05, 0.3), bottom = h * rng.uniform(0.7, 0.95);
    const int panes = 2 + static_cast<int>(rng.below(3));
    int cols = 2, rows = 2;
    if (panes != 4) {
        const bool horizontal = rng.below(2) == 0;
        cols = horizontal ? panes : 1;
        rows = horizontal ? 1 : panes;
    }
    const double bar = s * rng.uniform(0.04, 0.08);
    const double cx = w * 0.5, cy = h * 0.5;
    const double sn = std::sin(-angle), cs = std::cos(-angle);
    return supersample(w, h, 2, [&](double px, double py) {
        const double u = cs * (px - cx) - sn * (py - cy) + cx;
        const double v = sn * (px - cx) + cs * (py - cy) + cy;
        if (u < left || u > right || v < top || v > bottom) return true;
        if (u - left < bar || right - u < bar || v - top < bar || bottom - v < bar) return true;
        for (int i = 1; i < cols; ++i)
            if (std::abs(u - (left + (right - left) * i / cols)) < bar * 0.5) return true;
        for (int j = 1; j < rows; ++j)
            if (std::abs(v - (top + (bottom - top) * j / rows)) < bar * 0.5) return true;
        return false;
    });
}

/// Samples normalized fbm on the pixel grid.
inline std::vector<float> fbm_field(int w, int h, double scale, int octaves, Rng& rng) {
    const std::uint64_t seed = rng();
    const double ox = rng.uniform(0.0, 1024.0), oy = rng.uniform(0.0, 1024.0);
    const double amp = fbm_amplitude(octaves, 0.5);
    std::vector<float> f(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            f[static_cast<std::size_t>(y) * w + x] =
                static_cast<float>(fbm((x + 0.5) / scale + ox, (y + 0.5) / scale + oy, octaves, 2.0, 0.5, seed) / amp);
    return f;
}

/// Occluded where fbm exceeds a threshold. The threshold is the field
/// quantile matching a sampled canopy coverage, so small crops neither
/// vanish nor saturate.
inline PatternField foliage(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    const double scale = s * rng.uniform(0.12, 0.3);
    const double coverage = rng.uniform(0.3, 0.7);
    const auto f = fbm_field(w, h, scale, 5, rng);
    const double t = quantile(f, 1.0 - coverage);
    PatternField out(w, h);
    auto d = out.data();
    for (std::size_t i = 0; i < f.size(); ++i) d[i] = f[i] > t ? 1.0f : 0.0f;
    return out;
}

/// Soft-threshold fbm with a wide transition band.
inline PatternField cloud_noise(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    const double scale = s * rng.uniform(0.25, 0.5);
    const double coverage = rng.uniform(0.35, 0.65);
    const double width = rng.uniform(0.5, 1.0);
    const auto f = fbm_field(w, h, scale, 4, rng);
    double m = 0.0, m2 = 0.0;
    for (float v : f) {
        m += v;
        m2 += static_cast<double>(v) * v;
    }
    m /= static_cast<double>(f.size());
    const double sd = std::sqrt(std::max(0.0, m2 / static_cast<double>(f.size()) - m * m));
    const double t = quantile(f, 1.0 - coverage);
    const double band = std::max(width * sd, 1e-6);
    PatternField out(w, h);
    auto d = out.data();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double e = std::clamp((f[i] - (t - band)) / (2.0 * band), 0.0, 1.0);
        d[i] = static_cast<float>(e * e * (3.0 - 2.0 * e));
    }
    return out;
}

/// Draws a tapered capsule (radius r0 at a, r1 at b) with a one-pixel
/// antialiased rim, max-combined into the field.
inline void stroke(PatternField& f, double ax, double ay, double bx, double by, double r0, double r1) {
    const double rmax = std::max(r0, r1) + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - rmax)));
    const int x1 = std::min(f.width() - 1, static_cast<int>(std::ceil(std::max(ax, bx) + rmax)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - rmax)));
    const int y1 = std::min(f.height() - 1, static_cast<int>(std::ceil(std::max(ay, by) + rmax)));
    const double dx = bx - ax, dy = by - ay;
    const double len2 = std::max(dx * dx + dy * dy, 1e-12);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double px = x + 0.5 - ax, py = y + 0.5 - ay;
            const double t = std::clamp((px * dx + py * dy) / len2, 0.0, 1.0);
            const double ex = px - t * dx, ey = py - t * dy;
            const double r = r0 + t * (r1 - r0);
            const double cov = std::clamp(r - std::sqrt(ex * ex + ey * ey) + 0.5, 0.0, 1.0);
            float& v = f.at(x, y);
            v = std::max(v, static_cast<float>(cov));
        }
}

/// Random-walk polylines from the image border, tapering, with side twigs.
inline PatternField branches(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    PatternField out(w, h, 0.0f);
    auto grow = [&](double x, double y, double heading, double length, double width, bool twigs) {
        const double step = s * 0.02;
        const int steps = std::max(2, static_cast<int>(length / step));
        for (int i = 0; i < steps; ++i) {
            const double r0 = width * (1.0 - 0.75 * i / steps);
            const double r1 = width * (1.0 - 0.75 * (i + 1) / steps);
            heading += rng.uniform(-0.25, 0.25);
            const double nx = x + step * std::cos(heading), ny = y + step * std::sin(heading);
            stroke(out, x, y, nx, ny, r0, r1);
            if (twigs && rng.uniform() < 0.15) {
                // A twig is a shorter, thinner walk that does not branch again.
                const double side = rng.below(2) == 0 ? -1.0 : 1.0;
                const double twig_len = length * rng.uniform(0.3, 0.5) * (1.0 - static_cast<double>(i) / steps);
                double tx = nx, ty = ny, th = heading + side * rng.uniform(0.4, 1.0);
                const int tsteps = std::max(1, static_cast<int>(twig_len / step));
                for (int k = 0; k < tsteps; ++k) {
                    const double tr0 = r1 * 0.6 * (1.0 - 0.7 * k / tsteps);
                    const double tr1 = r1 * 0.6 * (1.0 - 0.7 * (k + 1) / tsteps);
                    th += rng.uniform(-0.25, 0.25);
                    const double ux = tx + step * std::cos(th), uy = ty + step * std::sin(th);
                    stroke(out, tx, ty, ux, uy, tr0, tr1);
                    tx = ux;
                    ty = uy;
                }
            }
            x = nx;
            y = ny;
        }
    };
    auto add_branch = [&] {
        const int side = static_cast<int>(rng.below(4));
        const double t = rng.uniform(0.1, 0.9);
        double x = 0, y = 0, inward = 0;
        switch (side) {
        case 0: x = t * w; y = -2.0; inward = std::numbers::pi / 2; break;
        case 1: x = w + 2.0; y = t * h; inward = std::numbers::pi; break;
        case 2: x = t * w; y = h + 2.0; inward = -std::numbers::pi / 2; break;
        default: x = -2.0; y = t * h; inward = 0.0; break;
        }
        grow(x, y, inward + rng.uniform(-0.6, 0.6), s * rng.uniform(0.5, 1.1), s * rng.uniform(0.025, 0.05), true);
    };
    const int initial = 2 + static_cast<int>(rng.below(3));
    for (int i = 0; i < initial; ++i) add_branch();
    for (int extra = 0; extra < 12 && mean(out) < 0.12; ++extra) add_branch();
    return out;
}

/// Low-frequency vertical sinusoidal folds with a slight sway.
inline PatternField curtains(int w, int h, Rng& rng) {
    const double base = rng.uniform(0.4, 0.6);
    const double amp = rng.uniform(0.3, 0.45);
    const double k1 = 2.0 + static_cast<double>(rng.below(3));
    const double k2 = k1 * rng.uniform(1.7, 2.6);
    const double p1 = rng.uniform(0.0, 2.0 * std::numbers::pi), p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double sway = w * rng.uniform(0.0, 0.04);
    const double sway_freq = rng.uniform(0.5, 1.5);
    const double p3 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    PatternField out(w, h);
    for (int y = 0; y < h; ++y) {
        const double shift = sway * std::sin(2.0 * std::numbers::pi * sway_freq * (y + 0.5) / h + p3);
        for (int x = 0; x < w; ++x) {
            const double xs = (x + 0.5 + shift) / w;
            const double v = base + amp * (0.65 * std::sin(2.0 * std::numbers::pi * k1 * xs + p1) +
                                           0.35 * std::sin(2.0 * std::numbers::pi * k2 * xs + p2));
            out.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

/// Vertical slats plus one or two horizontal rails.
inline PatternField fence(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    const double period = s * rng.uniform(0.08, 0.16);
    const double duty = rng.uniform(0.35, 0.6);
    const double phase = rng.uniform();
    const double shear = std::tan(rng.uniform(-0.15, 0.15));
    const int rails = 1 + static_cast<int>(rng.below(2));
    std::array<double, 2> rail_y{}, rail_half{};
    for (int i = 0; i < rails; ++i) {
        rail_y[i] = h * rng.uniform(0.15, 0.85);
        rail_half[i] = 0.5 * s * rng.uniform(0.04, 0.08);
    }
    return supersample(w, h, 2, [&](double px, double py) {
        if (frac((px + shear * py) / period + phase) < duty) return true;
        for (int i = 0; i < rails; ++i)
            if (std::abs(py - rail_y[i]) < rail_half[i]) return true;
        return false;
    });
}

/// Tiled screen with an arch, circle or diamond opening per tile.
inline PatternField arch_screen(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    const double tile = s * rng.uniform(0.1, 0.2);
    const int motif = static_cast<int>(rng.below(3));
    const double open = rng.uniform(0.5, 0.8);
    const double ox = rng.uniform(), oy = rng.uniform();
    return supersample(w, h, 2, [&](double px, double py) {
        const double u = frac(px / tile + ox) - 0.5, v = frac(py / tile + oy) - 0.5;
        bool opening = false;
        if (motif == 0) {
            const double half = 0.4 * open;
            const double spring = -0.35 + half;  // centre of the arch's round top
            if (std::abs(u) <= half && v <= 0.4) {
                opening = v >= spring || (u * u + (v - spring) * (v - spring) <= half * half);
            }
        } else if (motif == 1) {
            opening = u * u + v * v <= 0.25 * open * open;
        } else {
            opening = std::abs(u) + std::abs(v) <= 0.6 * open;
        }
        return !opening;
    });
}

/// Two crossed stripe families.
inline PatternField lattice(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    const double base = rng.uniform(-0.3, 0.3);
    const double half_angle = rng.uniform(0.55, 1.0);
    const double period = s * rng.uniform(0.08, 0.16);
    const double duty = rng.uniform(0.15, 0.3);
    const double pa = rng.uniform(), pb = rng.uniform();
    const double a1 = base + half_angle, a2 = base - half_angle;
    const double s1 = std::sin(a1), c1 = std::cos(a1), s2 = std::sin(a2), c2 = std::cos(a2);
    return supersample(w, h, 2, [&](double px, double py) {
        return frac((-px * s1 + py * c1) / period + pa) < duty || frac((-px * s2 + py * c2) / period + pb) < duty;
    });
}

/// Serrated leaf-shaped strokes radiating from a point near the border.
inline PatternField palm_fronds(int w, int h, Rng& rng) {
    const double s = std::min(w, h);
    const int side = static_cast<int>(rng.below(4));
    const double t = rng.uniform(0.1, 0.9);
    const double out_by = s * rng.uniform(0.0, 0.15);
    double cx = 0, cy = 0, inward = 0;
    switch (side) {
    case 0: cx = t * w; cy = -out_by; inward = std::numbers::pi / 2; break;
    case 1: cx = w + out_by; cy = t * h; inward = std::numbers::pi; break;
    case 2: cx = t * w; cy = h + out_by; inward = -std::numbers::pi / 2; break;
    default: cx = -out_by; cy = t * h; inward = 0.0; break;
    }
    struct Frond {
        double ux, uy, length, half_width, leaflets;
    };
    std::vector<Frond> fronds;
    auto add = [&] {
        const double a = inward + rng.uniform(-1.1, 1.1);
        fronds.push_back({std::cos(a), std::sin(a), s * rng.uniform(0.5, 1.0), s * rng.uniform(0.04, 0.08),
                          rng.uniform(10.0, 18.0)});
    };
    const double rachis = std::max(0.5, s * 0.008);
    auto render = [&] {
        return supersample(w, h, 2, [&](double px, double py) {
            const double dx = px - cx, dy = py - cy;
            for (const auto& f : fronds) {
                const double along = dx * f.ux + dy * f.uy;
                if (along <= 0.0 || along >= f.length) continue;
                const double across = std::abs(-dx * f.uy + dy * f.ux);
                if (across > f.half_width) continue;
                if (across <= rachis) return true;
                const double tt = along / f.length;
                const double hw = f.half_width * std::sin(std::numbers::pi * tt) *
                                  (0.55 + 0.45 * std::abs(std::sin(std::numbers::pi * f.leaflets * tt)));
                if (across <= hw) return true;
            }
            return false;
        });
    };
    const int initial = 5 + static_cast<int>(rng.below(5));
    for (int i = 0; i < initial; ++i) add();
    PatternField field = render();
    for (int extra = 0; extra < 8 && mean(field) < 0.08; ++extra) {
        add();
        field = render();
    }
    return field;
}

} // namespace patterns

/// Deterministic in (kind, w, h, seed).
inline PatternField generate_pattern(PatternKind kind, int w, int h, std::uint64_t seed) {
    if (w < 16 || h < 16) throw Error(ErrorKind::DegenerateSize, "pattern fields need at least 16x16 pixels");
    Rng rng(mix64(seed ^ (0x51ed270b27f2a3c5ULL * (static_cast<std::uint64_t>(kind) + 1))));
    const double s = std::min(w, h);
    switch (kind) {
    case PatternKind::VenetianBlinds: {
        patterns::BlindsShape b;
        b.period = s * rng.uniform(0.05, 0.14);
        b.angle = rng.uniform(-0.4, 0.4);
        b.duty = rng.uniform(0.35, 0.65);
        b.phase = rng.uniform();
        return patterns::venetian_blinds(w, h, b);
    }
    case PatternKind::WindowFrame: return patterns::window_frame(w, h, rng);
    case PatternKind::FoliageFbm: return patterns::foliage(w, h, rng);
    case PatternKind::Branches: return patterns::branches(w, h, rng);
    case PatternKind::Curtains: return patterns::curtains(w, h, rng);
    case PatternKind::Fence: return patterns::fence(w, h, rng);
    case PatternKind::ArchScreen: return patterns::arch_screen(w, h, rng);
    case PatternKind::Lattice: return patterns::lattice(w, h, rng);
    case PatternKind::PalmFronds: return patterns::palm_fronds(w, h, rng);
    case PatternKind::CloudNoise: return patterns::cloud_noise(w, h, rng);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown pattern kind");
}

/// Categorical draw proportional to `weights`.
inline PatternKind select_pattern(const PatternWeights& weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorKind::InvalidArgument, "pattern weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "pattern weights are all zero");
    const double u = rng.uniform() * total;
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last = i;
        cum += weights[i];
        if (u < cum) return all_pattern_kinds[i];
    }
    return all_pattern_kinds[last];
}

/// out = img * (1 - opacity * blur(pattern)) on masked pixels.
inline ImageRGB composite_shadow(const ImageRGB& img, const PatternField& pattern, const Mask& mask,
                                 const ShadowParams& params) {
    require_same_size(img, pattern, "composite_shadow pattern");
    require_same_size(img, mask, "composite_shadow mask");
    if (!(params.opacity >= 0.0 && params.opacity <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "shadow opacity must be in [0,1]");
    const PatternField soft = gaussian_blur(pattern, params.blur_sigma);
    const float opacity = static_cast<float>(params.opacity);
    ImageRGB out = img;
    auto m = mask.data();
    auto p = soft.data();
    auto d = out.data();
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        if (!in_mask(m[i])) continue;
        const float mult = 1.0f - opacity * std::clamp(p[i], 0.0f, 1.0f);
        for (int c = 0; c < 3; ++c) d[3 * i + c] *= mult;
    }
    return out;
}

/// Soft-mask blend onto a uniform gray: out = m*img + (1-m)*gray.
inline ImageRGB place_on_gray(const ImageRGB& img, const Mask& mask, double gray = 0.5) {
    require_same_size(img, mask, "place_on_gray");
    if (!(gray >= 0.0 && gray <= 1.0)) throw Error(ErrorKind::InvalidArgument, "gray level must be in [0,1]");
    ImageRGB out(img.width(), img.height());
    auto m = mask.data();
    auto s = img.data();
    auto d = out.data();
    const float g = static_cast<float>(gray);
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        const float mv = std::clamp(m[i], 0.0f, 1.0f);
        for (int c = 0; c < 3; ++c) d[3 * i + c] = mv * s[3 * i + c] + (1.0f - mv) * g;
    }
    return out;
}

} // namespace relight
