#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "rips/spectral.hpp"

using namespace rips::special;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("I0 against its power series and the library function", "[spectral]") {
    CHECK(bessel_i0(0.0) == 1.0);
    CHECK_THAT(bessel_i0(1.0), WithinRel(oracle::i0_series(1.0), 1e-14));
    CHECK_THAT(bessel_i0(1.0), WithinAbs(1.2660658778, 1e-10));
    for (double x = 0.0; x <= 30.0; x += 0.173) CHECK_THAT(bessel_i0(x), WithinRel(oracle::i0_series(x), 1e-10));
    for (double x = 0.5; x <= 700.0; x *= 1.37) CHECK_THAT(bessel_i0(x), WithinRel(oracle::i0(x), 1e-10));
}

TEST_CASE("scaled I0 stays finite", "[spectral]") {
    const double v = bessel_i0e(500.0);
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(std::isfinite(bessel_i0e(1e6)));
    CHECK_THAT(bessel_i0e(1e6) * std::sqrt(2.0 * std::numbers::pi * 1e6), WithinRel(1.0, 1e-6));
    for (double x = 0.1; x < 700.0; x *= 1.9) CHECK_THAT(bessel_i0e(x), WithinRel(oracle::i0(x) * std::exp(-x), 1e-10));
    CHECK_THROWS(bessel_i0(-1.0));
}

TEST_CASE("scaled Bessel sequence", "[spectral]") {
    for (double x : {0.3, 5.0, 40.0, 250.0}) {
        const auto seq = bessel_ie_sequence(x, 30);
        for (int k = 0; k <= 30; ++k) {
            const double ref = std::cyl_bessel_i(static_cast<double>(k), x) * std::exp(-x);
            if (ref > 1e-280) CHECK_THAT(seq[static_cast<std::size_t>(k)], WithinRel(ref, 1e-9));
        }
    }
}

TEST_CASE("Marcum Q1 identities", "[spectral]") {
    for (double a : {0.0, 0.5, 3.0, 17.0}) CHECK(marcum_q1(a, 0.0) == 1.0);
    for (double b : {0.0, 0.5, 2.0, 6.0, 12.0}) CHECK_THAT(marcum_q1(0.0, b), WithinAbs(std::exp(-0.5 * b * b), 1e-15));
    CHECK_THAT(marcum_q1(1.0, 2.0), WithinAbs(oracle::marcum_q1(1.0, 2.0), 1e-8));
    CHECK_THAT(marcum_q1(1.0, 2.0), WithinAbs(0.27, 0.005));
}

TEST_CASE("Marcum Q1 against quadrature on a 20x20 grid", "[spectral]") {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const double a = 10.0 * i / 19.0;
            const double b = 10.0 * j / 19.0;
            worst = std::max(worst, std::abs(marcum_q1(a, b) - oracle::marcum_q1(a, b)));
        }
    CHECK(worst < 1e-8);
}

TEST_CASE("Marcum Q1 bounds, monotonicity and symmetry relation", "[spectral]") {
    for (double a = 0.0; a <= 20.0; a += 0.7)
        for (double b = 0.0; b <= 20.0; b += 0.7) {
            const double q = marcum_q1(a, b);
            CHECK(q >= 0.0);
            CHECK(q <= 1.0);
            CHECK(marcum_q1(a, b + 0.3) <= q + 1e-15);
            CHECK(marcum_q1(a + 0.3, b) >= q - 1e-15);
            const double rhs = 1.0 + bessel_i0e(a * b) * std::exp(-0.5 * (a - b) * (a - b));
            CHECK_THAT(q + marcum_q1(b, a), WithinAbs(rhs, 1e-8));
        }
}

TEST_CASE("equal-argument half identity", "[spectral]") {
    CHECK(half_symmetric_q(0.0) == 0.5);
    for (double a : {0.0, 3.0, 30.0, 100.0}) {
        const double via_q = marcum_q1(a, a) - 0.5 * bessel_i0e(a * a);
        CHECK_THAT(via_q, WithinAbs(0.5, 1e-8));
        CHECK_THAT(marcum_difference(a, a, 0.5), WithinAbs(0.5, 1e-12));
    }
    CHECK_THAT(oracle::marcum_q1(3.0, 3.0) - 0.5 * oracle::i0(9.0) * std::exp(-9.0), WithinAbs(0.5, 1e-8));
}

TEST_CASE("Marcum difference keeps tiny values", "[spectral]") {
    for (double a : {0.5, 2.0, 8.0})
        for (double b : {a + 1.0, a + 4.0, a + 9.0})
            for (double w : {0.0, 0.25, 0.5}) {
                const double direct = oracle::marcum_q1(a, b) - w * oracle::i0(a * b) * std::exp(-0.5 * (a * a + b * b));
                CHECK_THAT(marcum_difference(a, b, w), WithinAbs(direct, 1e-12));
                if (direct > 1e-12) CHECK_THAT(marcum_difference(a, b, w), WithinRel(direct, 1e-6));
            }
    // Far tail: the closed form is positive where 1 - (1 - tiny) would cancel to zero.
    const double tail = marcum_difference(10.0, 40.0, 0.5);
    CHECK(tail > 0.0);
    CHECK(tail < 1e-190);
}
