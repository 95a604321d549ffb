#include <doctest.h>

#include <cmath>
#include <vector>

#include "rnr/rng.hpp"

using rnr::Rng;

TEST_CASE("identical (seed, stream) gives identical sequences") {
    Rng a(1234, 7), b(1234, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds and streams give different sequences") {
    Rng a(1, 0), b(2, 0), c(1, 1);
    bool ab_differ = false, ac_differ = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        if (va != b.next_u64()) ab_differ = true;
        if (va != c.next_u64()) ac_differ = true;
    }
    CHECK(ab_differ);
    CHECK(ac_differ);
}

TEST_CASE("fork yields independent reproducible streams") {
    Rng root(99);
    Rng f1 = root.fork(3);
    Rng f2 = root.fork(3);
    Rng other = root.fork(4);
    CHECK(f1.next_u64() == f2.next_u64());
    CHECK(f1.next_u64() != other.next_u64());
    // Forking does not advance the parent.
    Rng fresh(99);
    CHECK(root.next_u64() == fresh.next_u64());
}

TEST_CASE("resume continues exactly where a generator left off") {
    Rng a(5, 2);
    for (int i = 0; i < 17; ++i) a.next_u64();
    Rng b = Rng::resume(a.seed(), a.stream(), a.counter());
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
    Rng rng(11);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("normal draws match a standard Gaussian within 3 standard errors") {
    Rng rng(21);
    const int n = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    // var(sample variance) ~= 2/n for a Gaussian
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}
