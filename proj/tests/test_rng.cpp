#include <cmath>

#include "doctest.h"
#include "videdit/rng.hpp"

using namespace videdit;

TEST_CASE("equal seeds produce equal streams") {
    SeededRng a(42, 7);
    SeededRng b(42, 7);
    for (int i = 0; i < 1'000'000; ++i) {
        REQUIRE(a.next_u32() == b.next_u32());
    }
}

TEST_CASE("distinct streams differ") {
    SeededRng a(42, 0);
    SeededRng b(42, 1);
    int same = 0;
    for (int i = 0; i < 1000; ++i) {
        if (a.next_u32() == b.next_u32()) ++same;
    }
    CHECK(same < 5);
}

TEST_CASE("uniform moments") {
    SeededRng rng(7);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.005);
    CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal moments") {
    SeededRng rng(11);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("uniform_int covers range evenly") {
    SeededRng rng(3);
    std::array<int, 8> counts{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const int v = rng.uniform_int(5, 12);
        REQUIRE(v >= 5);
        REQUIRE(v <= 12);
        ++counts[v - 5];
    }
    for (int c : counts) {
        CHECK(std::abs(c - n / 8) < n * 0.02);
    }
}

TEST_CASE("stream values are frozen") {
    // regression anchor: these must never change across platforms or releases
    SeededRng rng(0, 0);
    CHECK(rng.next_u32() == 0x6627e8d5u);
    CHECK(rng.next_u32() == 0xe169c58du);
    CHECK(rng.next_u32() == 0xbc57ac4cu);
    CHECK(rng.next_u32() == 0x9b00dbd8u);
}
