#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relight/error.hpp"

namespace relight {

/// Row-major interleaved float raster. `Tag` keeps images, masks, depth maps
/// and pattern fields from being mixed up at compile time.
template <int Channels, class Tag>
class Raster {
public:
    static constexpr int channels = Channels;

    Raster() = default;
    Raster(int width, int height, float fill = 0.0f)
        : width_(width), height_(height),
          data_(checked_size(width, height), fill) {}
    Raster(int width, int height, std::vector<float> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_size(width, height))
            throw Error(ErrorKind::InvalidArgument, "raster data length does not match dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const noexcept { return data_.empty(); }

    float& at(int x, int y, int c = 0) noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
    }
    float at(int x, int y, int c = 0) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    std::vector<float>& storage() noexcept { return data_; }

    template <class OtherTag>
    bool same_size(const Raster<1, OtherTag>& o) const noexcept {
        return width_ == o.width() && height_ == o.height();
    }
    template <class OtherTag>
    bool same_size(const Raster<3, OtherTag>& o) const noexcept {
        return width_ == o.width() && height_ == o.height();
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
    }

    void clamp01() noexcept {
        for (auto& v : data_) v = std::clamp(v, 0.0f, 1.0f);
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static std::size_t checked_size(int w, int h) {
        if (w < 0 || h < 0)
            throw Error(ErrorKind::InvalidArgument, "negative raster dimension");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * Channels;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

struct RgbTag {};
struct MaskTag {};
struct DepthTag {};
struct NormalTag {};
struct PatternTag {};

using ImageRGB = Raster<3, RgbTag>;
/// 1 = subject, 0 = background.
using Mask = Raster<1, MaskTag>;
/// Relative (inverse) depth, producer-normalized to [0,1].
using DepthMap = Raster<1, DepthTag>;
using NormalMap = Raster<3, NormalTag>;
/// 1 = fully occluded.
using PatternField = Raster<1, PatternTag>;

/// A pixel counts as foreground when its mask sample is at least one half.
inline bool in_mask(float m) noexcept { return m >= 0.5f; }

template <class A, class B>
void require_same_size(const A& a, const B& b, const char* what) {
    if (!a.same_size(b))
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a.width()) + "x" +
                        std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                        std::to_string(b.height()));
}

/// Rec.601 luma, the same weights the SSIM metric uses.
inline float luma(const ImageRGB& img, int x, int y) noexcept {
    return 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) + 0.114f * img.at(x, y, 2);
}

} // namespace relight
