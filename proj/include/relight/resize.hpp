#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "relight/image.hpp"

namespace relight {

/// Bilinear resampling with pixel-center alignment. Interpolation is written
/// as a + t*(b - a) so constant regions reproduce exactly.
template <int C, class Tag>
Raster<C, Tag> resize(const Raster<C, Tag>& src, int width, int height) {
    if (width < 1 || height < 1)
        throw Error(ErrorKind::InvalidArgument, "resize target dimensions must be >= 1");
    if (src.empty())
        throw Error(ErrorKind::EmptyInput, "cannot resize an empty raster");
    if (width == src.width() && height == src.height()) return src;

    struct Tap {
        int i0, i1;
        float t;
    };
    auto taps = [](int dst_n, int src_n) {
        std::vector<Tap> out(dst_n);
        const double scale = static_cast<double>(src_n) / dst_n;
        for (int i = 0; i < dst_n; ++i) {
            double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src_n - 1));
            const int i0 = static_cast<int>(std::floor(s));
            const int i1 = std::min(i0 + 1, src_n - 1);
            out[i] = {i0, i1, static_cast<float>(s - i0)};
        }
        return out;
    };
    const auto xs = taps(width, src.width());
    const auto ys = taps(height, src.height());

    Raster<C, Tag> out(width, height);
    for (int y = 0; y < height; ++y) {
        const Tap ty = ys[y];
        for (int x = 0; x < width; ++x) {
            const Tap tx = xs[x];
            for (int c = 0; c < C; ++c) {
                const float a = src.at(tx.i0, ty.i0, c), b = src.at(tx.i1, ty.i0, c);
                const float d = src.at(tx.i0, ty.i1, c), e = src.at(tx.i1, ty.i1, c);
                const float top = a + tx.t * (b - a);
                const float bottom = d + tx.t * (e - d);
                out.at(x, y, c) = top + ty.t * (bottom - top);
            }
        }
    }
    return out;
}

} // namespace relight
