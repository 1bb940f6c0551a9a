#pragma once

#include <cmath>
#include <cstdint>

#include "relight/random.hpp"

namespace relight {

/// Hash-lattice value in [-1, 1]. Stateless, so safe from any thread.
inline double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) noexcept {
    std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL ^
                                         static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL));
    return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

/// 2-D value noise with quintic fade, range [-1, 1].
inline double value_noise(double x, double y, std::uint64_t seed) noexcept {
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx0), iy = static_cast<std::int64_t>(fy0);
    const double tx = x - fx0, ty = y - fy0;
    const double u = tx * tx * tx * (tx * (tx * 6.0 - 15.0) + 10.0);
    const double v = ty * ty * ty * (ty * (ty * 6.0 - 15.0) + 10.0);
    const double a = lattice_value(ix, iy, seed), b = lattice_value(ix + 1, iy, seed);
    const double c = lattice_value(ix, iy + 1, seed), d = lattice_value(ix + 1, iy + 1, seed);
    const double top = a + u * (b - a);
    const double bottom = c + u * (d - c);
    return top + v * (bottom - top);
}

/// Fractal Brownian motion: sum_i gain^i * noise(x*lac^i, y*lac^i, seed ^ i).
/// |fbm| <= sum_i gain^i.
inline double fbm(double x, double y, int octaves, double lacunarity, double gain, std::uint64_t seed) noexcept {
    double sum = 0.0, amp = 1.0, freq = 1.0;
    for (int i = 0; i < octaves; ++i) {
        sum += amp * value_noise(x * freq, y * freq, seed ^ static_cast<std::uint64_t>(i));
        amp *= gain;
        freq *= lacunarity;
    }
    return sum;
}

inline double fbm_amplitude(int octaves, double gain) noexcept {
    double a = 0.0, g = 1.0;
    for (int i = 0; i < octaves; ++i, g *= gain) a += g;
    return a;
}

} // namespace relight
