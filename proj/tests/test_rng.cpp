#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cornersim/rng.hpp"

using namespace cornersim;

TEST_CASE("streams are reproducible") {
    RandomStream a = stream_for(42, "traffic");
    RandomStream b = stream_for(42, "traffic");
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("labelled streams are independent of each other") {
    // Drawing from one consumer's stream must not shift another's.
    RandomStream traffic1 = stream_for(7, "traffic");
    std::vector<std::uint64_t> expected;
    for (int i = 0; i < 64; ++i) expected.push_back(traffic1.next_u64());

    RandomStream sensor = stream_for(7, "sensor");
    for (int i = 0; i < 999; ++i) sensor.next_u64();

    RandomStream traffic2 = stream_for(7, "traffic");
    for (int i = 0; i < 64; ++i) {
        REQUIRE(traffic2.next_u64() == expected[static_cast<size_t>(i)]);
    }
}

TEST_CASE("different seeds give different streams") {
    RandomStream a = stream_for(1, "traffic");
    RandomStream b = stream_for(2, "traffic");
    int same = 0;
    for (int i = 0; i < 64; ++i) {
        if (a.next_u64() == b.next_u64()) ++same;
    }
    REQUIRE(same == 0);
}

TEST_CASE("uniform stays in [0,1) and normal is roughly standard") {
    RandomStream rng(123);
    double sum = 0.0;
    double sum_sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    for (int i = 0; i < n; ++i) {
        const double z = rng.next_normal();
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.03);
    REQUIRE(var == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("next_below is bounded") {
    RandomStream rng(5);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(rng.next_below(7) < 7);
    }
    REQUIRE(rng.next_below(0) == 0);
}
