#include <cmath>
#include <set>

#include "catch_amalgamated.hpp"
#include "ctrw/rng.hpp"

using namespace ctrw;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::set<std::uint64_t> firsts;
    for (int i = 0; i < 100; ++i) {
        const auto va = a();
        CHECK(va == b());
        firsts.insert(va);
        CHECK(va != c());
        CHECK(va != d());
    }
    CHECK(firsts.size() == 100);
}

TEST_CASE("uniform draws lie strictly inside (0,1) and have the right moments") {
    RngStream r(1, 0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // 5 sigma bands
    CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(var - 1.0 / 12.0) < 5.0 * std::sqrt(1.0 / 180.0 / n));
}

TEST_CASE("exponential draws have unit mean") {
    RngStream r(9, 3);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += r.exponential();
    CHECK(std::abs(sum / n - 1.0) < 5.0 / std::sqrt(n));
}

TEST_CASE("substreams differ from the parent and from each other") {
    RngStream base(5, 0);
    auto s0 = base.substream(0), s1 = base.substream(1);
    CHECK(s0.stream() != s1.stream());
    CHECK(s0() != s1());
    CHECK(base.substream(0)() == base.substream(0)());
}
