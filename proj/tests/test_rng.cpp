#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qdet/rng.hpp"

using namespace qdet;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    auto z = Philox4x32::block(0u, 0u, {0u, 0u, 0u, 0u});
    CHECK(z[0] == 0x6627e8d5u);
    CHECK(z[1] == 0xe169c58du);
    CHECK(z[2] == 0xbc57ac4cu);
    CHECK(z[3] == 0x9b00dbd8u);

    auto f = Philox4x32::block(0xffffffffu, 0xffffffffu,
                               {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
    CHECK(f[0] == 0x408f276du);
    CHECK(f[1] == 0x41c83b0eu);
    CHECK(f[2] == 0xa20bc7c6u);
    CHECK(f[3] == 0x6d5451fdu);

    auto pi = Philox4x32::block(0xa4093822u, 0x299f31d0u,
                                {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
    CHECK(pi[0] == 0xd16cfe09u);
    CHECK(pi[1] == 0x94fdccebu);
    CHECK(pi[2] == 0x5001e420u);
    CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(42, 7), b(42, 7), c(42, 8);
    bool all_equal = true, any_equal_cross = false;
    for (int i = 0; i < 64; ++i) {
        auto x = a.next_u32(), y = b.next_u32(), z = c.next_u32();
        all_equal &= (x == y);
        any_equal_cross |= (x == z);
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_cross);
}

TEST_CASE("uniform01 lies in (0, 1]") {
    RngStream r(1, 0);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform01();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("normal draws pass a KS test at the 1% level") {
    RngStream r(2024, 3);
    std::vector<double> sample(100000);
    for (auto& x : sample) x = r.normal();
    double d = oracle::ks_statistic(sample, [](double x) { return normal_cdf(x); });
    CHECK(d < 1.63 / std::sqrt(100000.0));
}

TEST_CASE("exponential draws have the right mean") {
    RngStream r(5, 11);
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s += r.exponential(0.5);
    double mean = s / n;
    CHECK(std::fabs(mean - 2.0) < 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
}
