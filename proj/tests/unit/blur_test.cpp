#include <gtest/gtest.h>

#include <cmath>

#include "relight/blur.hpp"
#include "test_util.hpp"

using namespace relight;
using relight::testing::random_image;

namespace {

// Dense 2-D convolution with the outer-product kernel, sampling the input at
// clamped coordinates. Written independently of the separable code.
ImageRGB dense_blur_oracle(const ImageRGB& src, double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> g(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += g[i + r] = std::exp(-i * i / (2.0 * sigma * sigma));
    for (auto& v : g) v /= sum;
    const int w = src.width(), h = src.height();
    ImageRGB out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int j = -r; j <= r; ++j)
                    for (int i = -r; i <= r; ++i)
                        acc += g[i + r] * g[j + r] *
                               src.at(std::clamp(x + i, 0, w - 1), std::clamp(y + j, 0, h - 1), c);
                out.at(x, y, c) = static_cast<float>(acc);
            }
    return out;
}

} // namespace

TEST(Blur, KernelShape) {
    const auto k = gaussian_kernel(2.0);
    ASSERT_EQ(k.size(), 13u);  // radius ceil(3*2) = 6
    double sum = 0.0;
    for (double v : k) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-15);
    for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
    EXPECT_EQ(gaussian_kernel(0.5).size(), 5u);
    EXPECT_EQ(gaussian_kernel(0.0), std::vector<double>{1.0});
    EXPECT_THROW(gaussian_kernel(-1.0), Error);
    EXPECT_THROW(gaussian_kernel(std::nan("")), Error);
}

class BlurOracle : public ::testing::TestWithParam<double> {};

TEST_P(BlurOracle, MatchesDenseConvolution) {
    Rng rng(5);
    const ImageRGB img = random_image(23, 17, rng);
    const ImageRGB got = gaussian_blur(img, GetParam());
    const ImageRGB want = dense_blur_oracle(img, GetParam());
    for (std::size_t i = 0; i < got.data().size(); ++i) ASSERT_NEAR(got.data()[i], want.data()[i], 2e-6);
}

// Small sigmas take the tap loop, large ones the dense operator.
INSTANTIATE_TEST_SUITE_P(Sigmas, BlurOracle, ::testing::Values(0.6, 1.0, 2.5, 4.0, 15.0, 40.0));

TEST(Blur, DoublePlanesMatchOracleTightly) {
    Rng rng(9);
    const ImageRGB img = random_image(20, 20, rng);
    for (double sigma : {1.5, 80.0}) {
        auto planes = detail::to_planes<double>(img);
        detail::blur_planes(planes, 20, 20, 3, gaussian_kernel(sigma));
        const ImageRGB want = dense_blur_oracle(img, sigma);
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 400; ++i) ASSERT_NEAR(planes[c * 400 + i], want.data()[3 * i + c], 1e-7);
    }
}

TEST(Blur, ConstantImageIsPreserved) {
    ImageRGB img(31, 12, 0.37f);
    for (double sigma : {1.0, 10.0, 250.0}) {
        const auto out = gaussian_blur(img, sigma);
        for (float v : out.data()) ASSERT_NEAR(v, 0.37f, 1e-6);
    }
}

TEST(Blur, ZeroSigmaIsIdentity) {
    Rng rng(3);
    const ImageRGB img = random_image(8, 8, rng);
    EXPECT_EQ(gaussian_blur(img, 0.0), img);
}

TEST(Blur, PreservesMassAwayFromEdgesAndStaysInRange) {
    Rng rng(21);
    const ImageRGB img = random_image(40, 40, rng);
    const auto out = gaussian_blur(img, 3.0);
    for (float v : out.data()) {
        ASSERT_GE(v, -1e-6f);
        ASSERT_LE(v, 1.0f + 1e-6f);
    }
}

TEST(Blur, DensePathChoice) {
    EXPECT_FALSE(detail::prefer_dense(45, 512));
    EXPECT_TRUE(detail::prefer_dense(240, 512));
    EXPECT_TRUE(detail::prefer_dense(750, 32));
}

TEST(Blur, LineOperatorFactorsOnlyWhenRankIsLow) {
    EXPECT_TRUE(detail::line_operator<float>(gaussian_kernel(250.0), 512)->factored);
    EXPECT_FALSE(detail::line_operator<float>(gaussian_kernel(80.0), 512)->factored);
    // Cached: the same object comes back.
    EXPECT_EQ(detail::line_operator<float>(gaussian_kernel(250.0), 512),
              detail::line_operator<float>(gaussian_kernel(250.0), 512));
}

TEST(Blur, FactoredOperatorMatchesExactOperator) {
    Rng rng(71);
    const int n = 200;
    const auto kernel = gaussian_kernel(250.0);
    ASSERT_TRUE(detail::line_operator<double>(kernel, n)->factored);
    std::vector<double> planes(n * n);
    for (auto& v : planes) v = rng.uniform();
    const auto exact_op = detail::clamped_operator<double>(kernel, n);
    Eigen::Map<const detail::RowMatrix<double>> m(planes.data(), n, n);
    const detail::RowMatrix<double> want = exact_op * m * exact_op.transpose();
    detail::blur_planes(planes, n, n, 1, kernel);
    for (int i = 0; i < n * n; ++i) ASSERT_NEAR(planes[i], want.data()[i], 1e-9);
}
