#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "relight/image.hpp"

namespace relight {

/// Sampled Gaussian truncated at radius ceil(3*sigma) and renormalized to
/// sum 1. Index i holds the weight for offset i - radius.
inline std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw Error(ErrorKind::InvalidArgument, "gaussian sigma must be finite and >= 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1, 0.0);
    if (radius == 0) {
        k[0] = 1.0;
        return k;
    }
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

namespace detail {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x n matrix of the replicate-edge convolution along one axis: row x holds
/// the weight each source sample j contributes to output x, with the clamped
/// tail mass folded onto the two edge samples.
template <class T>
RowMatrix<T> clamped_operator(const std::vector<double>& kernel, int n) {
    const int radius = static_cast<int>(kernel.size() / 2);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int x = 0; x < n; ++x)
        for (int k = -radius; k <= radius; ++k)
            m(x, std::clamp(x + k, 0, n - 1)) += kernel[k + radius];
    return m.cast<T>();
}

/// Dense clamped operator, stored as left * right when its numerical rank
/// (singular values above 1e-12 of the largest) is small. Wide kernels on
/// short lines are nearly constant, so this is the common case for the
/// largest Retinex scale.
template <class T>
struct LineOperator {
    bool factored = false;
    RowMatrix<T> full;   // n x n
    RowMatrix<T> left;   // n x k, singular values folded in
    RowMatrix<T> right;  // k x n
};

template <class T>
std::shared_ptr<const LineOperator<T>> line_operator(const std::vector<double>& kernel, int n) {
    static std::mutex mutex;
    static std::map<std::pair<int, std::vector<double>>, std::shared_ptr<const LineOperator<T>>> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_pair(n, kernel);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    auto op = std::make_shared<LineOperator<T>>();
    const Eigen::MatrixXd m = clamped_operator<double>(kernel, n);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-12 * sv(0)) ++rank;
    if (rank > 0 && rank <= n / 8) {
        op->factored = true;
        op->left = (svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal()).cast<T>();
        op->right = svd.matrixV().leftCols(rank).transpose().cast<T>();
    } else {
        op->full = m.cast<T>();
    }
    cache.emplace(std::move(key), op);
    return op;
}

// The dense operator wins once the kernel is a sizeable fraction of the line:
// a GEMM does roughly four times the useful work per cycle of the tap loop.
inline bool prefer_dense(int radius, int n) { return 2 * radius + 1 > n / 4; }

/// line[x] = sum_k wk[k] * src[x + k*stride], summed in k order.
template <class T>
void accumulate_taps(T* __restrict line, const T* __restrict src, int stride, const T* wk, int taps, int w) {
    std::fill(line, line + w, T(0));
    for (int k = 0; k < taps; ++k) {
        const T wt = wk[k];
        const T* __restrict s = src + static_cast<std::ptrdiff_t>(k) * stride;
        for (int x = 0; x < w; ++x) line[x] += wt * s[x];
    }
}

/// Blurs `count` planes of size w x h laid out back to back.
template <class T>
void blur_planes(std::vector<T>& planes, int w, int h, int count, const std::vector<double>& kernel) {
    const int radius = static_cast<int>(kernel.size() / 2);
    if (radius == 0 || w == 0 || h == 0) return;
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    const std::vector<T> wk(kernel.begin(), kernel.end());

    // Horizontal pass.
    if (prefer_dense(radius, w)) {
        const auto op = line_operator<T>(kernel, w);
        Eigen::Map<RowMatrix<T>> all(planes.data(), static_cast<Eigen::Index>(h) * count, w);
        if (op->factored) {
            const RowMatrix<T> tmp = all * op->right.transpose();
            all.noalias() = tmp * op->left.transpose();
        } else {
            const RowMatrix<T> out = all * op->full.transpose();
            all = out;
        }
    } else {
        std::vector<T> padded(w + 2 * radius);
        for (std::size_t row = 0; row < static_cast<std::size_t>(h) * count; ++row) {
            T* line = planes.data() + row * w;
            for (int i = 0; i < w + 2 * radius; ++i) padded[i] = line[std::clamp(i - radius, 0, w - 1)];
            detail::accumulate_taps(line, padded.data(), 1, wk.data(), 2 * radius + 1, w);
        }
    }

    // Vertical pass.
    if (prefer_dense(radius, h)) {
        const auto op = line_operator<T>(kernel, h);
        for (int p = 0; p < count; ++p) {
            Eigen::Map<RowMatrix<T>> m(planes.data() + p * plane, h, w);
            if (op->factored) {
                const RowMatrix<T> tmp = op->right * m;
                m.noalias() = op->left * tmp;
            } else {
                const RowMatrix<T> out = op->full * m;
                m = out;
            }
        }
    } else {
        std::vector<T> column_src(plane);
        for (int p = 0; p < count; ++p) {
            T* base = planes.data() + p * plane;
            std::copy(base, base + plane, column_src.begin());
            for (int y = 0; y < h; ++y) {
                T* __restrict out = base + static_cast<std::size_t>(y) * w;
                std::fill(out, out + w, T(0));
                for (int k = -radius; k <= radius; ++k) {
                    const T wt = wk[k + radius];
                    const T* __restrict src = column_src.data() + static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w;
                    for (int x = 0; x < w; ++x) out[x] += wt * src[x];
                }
            }
        }
    }
}

template <class T = float, int C, class Tag>
std::vector<T> to_planes(const Raster<C, Tag>& r) {
    const std::size_t n = r.pixel_count();
    std::vector<T> planes(n * C);
    auto src = r.data();
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c) planes[c * n + i] = src[i * C + c];
    return planes;
}

template <class T, int C, class Tag>
void from_planes(const std::vector<T>& planes, Raster<C, Tag>& r) {
    const std::size_t n = r.pixel_count();
    auto dst = r.data();
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c) dst[i * C + c] = static_cast<float>(planes[c * n + i]);
}

} // namespace detail

/// Separable Gaussian blur with clamp-to-edge boundaries; sigma = 0 is the
/// identity.
template <int C, class Tag>
Raster<C, Tag> gaussian_blur(const Raster<C, Tag>& src, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    if (kernel.size() == 1) return src;
    auto planes = detail::to_planes(src);
    detail::blur_planes(planes, src.width(), src.height(), C, kernel);
    Raster<C, Tag> out(src.width(), src.height());
    detail::from_planes(planes, out);
    return out;
}

} // namespace relight
