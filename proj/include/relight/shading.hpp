#pragma once

// Depth-gradient normals, hemisphere light sampling and Lambertian shading.

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "relight/image.hpp"
#include "relight/random.hpp"

namespace relight {

using Vec3 = std::array<double, 3>;

struct LightSample {
    Vec3 direction{0.0, 0.0, 1.0};
    double ambient = 0.35;
};

inline constexpr std::pair<double, double> default_ambient_range{0.25, 0.45};
inline constexpr double default_gradient_scale = 4.0;

/// Central differences with clamped neighbours, n = normalize(-k*dx, -k*dy, 1).
inline NormalMap depth_to_normals(const DepthMap& depth, double gradient_scale) {
    const int w = depth.width(), h = depth.height();
    if (w < 2 || h < 2)
        throw Error(ErrorKind::DegenerateSize, "depth_to_normals needs at least 2x2 pixels");
    if (!(gradient_scale > 0.0) || !std::isfinite(gradient_scale))
        throw Error(ErrorKind::InvalidArgument, "gradient_scale must be > 0");
    NormalMap out(w, h);
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            const double dx = (static_cast<double>(depth.at(xp, y)) - depth.at(xm, y)) * 0.5;
            const double dy = (static_cast<double>(depth.at(x, yp)) - depth.at(x, ym)) * 0.5;
            const double nx = -gradient_scale * dx, ny = -gradient_scale * dy;
            const double inv = 1.0 / std::sqrt(nx * nx + ny * ny + 1.0);
            out.at(x, y, 0) = static_cast<float>(nx * inv);
            out.at(x, y, 1) = static_cast<float>(ny * inv);
            out.at(x, y, 2) = static_cast<float>(inv);
        }
    }
    return out;
}

/// Area-uniform upper-hemisphere direction: z = u1, phi = 2*pi*u2.
inline Vec3 hemisphere_direction(double u1, double u2) {
    const double z = std::clamp(u1, 0.0, 1.0);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

/// Draws u1, u2 for the direction, then the ambient level, in that order.
inline LightSample sample_light(Rng& rng, std::pair<double, double> ambient_range = default_ambient_range) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    LightSample s;
    s.direction = hemisphere_direction(u1, u2);
    s.ambient = rng.uniform(ambient_range.first, ambient_range.second);
    return s;
}

/// S = a + (1 - a) * max(0, n.l), kept inside [a, 1].
inline double shading_factor(const Vec3& normal, const LightSample& light) {
    const double ndotl = normal[0] * light.direction[0] + normal[1] * light.direction[1] +
                         normal[2] * light.direction[2];
    const double a = light.ambient;
    return std::clamp(a + (1.0 - a) * std::max(0.0, ndotl), a, 1.0);
}

/// Multiplies masked pixels by the shading factor; background passes through.
inline ImageRGB lambertian_shade(const ImageRGB& albedo, const NormalMap& normals, const LightSample& light,
                                 const Mask& mask) {
    require_same_size(albedo, normals, "lambertian_shade normals");
    require_same_size(albedo, mask, "lambertian_shade mask");
    if (!(light.ambient >= 0.0 && light.ambient <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "ambient must be in [0,1]");
    ImageRGB out = albedo;
    for (int y = 0; y < albedo.height(); ++y)
        for (int x = 0; x < albedo.width(); ++x) {
            if (!in_mask(mask.at(x, y))) continue;
            const Vec3 n{normals.at(x, y, 0), normals.at(x, y, 1), normals.at(x, y, 2)};
            const float s = static_cast<float>(shading_factor(n, light));
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = albedo.at(x, y, c) * s;
        }
    return out;
}

} // namespace relight
