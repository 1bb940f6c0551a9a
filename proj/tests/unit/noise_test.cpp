#include <gtest/gtest.h>

#include <cmath>

#include "relight/noise.hpp"

using namespace relight;

TEST(Noise, LatticeRangeAndDeterminism) {
    for (int i = -50; i < 50; ++i)
        for (int j = -5; j < 5; ++j) {
            const double v = lattice_value(i, j, 9);
            ASSERT_GE(v, -1.0);
            ASSERT_LE(v, 1.0);
            ASSERT_EQ(v, lattice_value(i, j, 9));
        }
    EXPECT_NE(lattice_value(3, 4, 1), lattice_value(3, 4, 2));
}

TEST(Noise, ValueNoiseInterpolatesLattice) {
    EXPECT_DOUBLE_EQ(value_noise(3.0, -2.0, 5), lattice_value(3, -2, 5));
    // Quintic fade at t = 0.5 is exactly 0.5.
    const double mid = value_noise(3.5, -2.0, 5);
    EXPECT_NEAR(mid, 0.5 * (lattice_value(3, -2, 5) + lattice_value(4, -2, 5)), 1e-15);
}

TEST(Noise, FbmMatchesTermByTermSum) {
    const double x = 1.37, y = -4.2;
    const int octaves = 5;
    const double lac = 2.0, gain = 0.5;
    double want = 0.0;
    for (int i = 0; i < octaves; ++i)
        want += std::pow(gain, i) * value_noise(x * std::pow(lac, i), y * std::pow(lac, i), 77 ^ i);
    EXPECT_NEAR(fbm(x, y, octaves, lac, gain, 77), want, 1e-14);
}

TEST(Noise, FbmBoundedByAmplitude) {
    const double amp = fbm_amplitude(4, 0.6);
    EXPECT_NEAR(amp, 1 + 0.6 + 0.36 + 0.216, 1e-15);
    for (int i = 0; i < 2000; ++i) {
        const double v = fbm(i * 0.173, i * 0.091, 4, 2.0, 0.6, 3);
        ASSERT_LE(std::abs(v), amp);
    }
}
