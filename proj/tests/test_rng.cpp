#include <doctest.h>

#include <cmath>

#include "timebin/rng.hpp"

using timebin::RngStream;

TEST_CASE("identical stream keys reproduce the same sequence") {
    RngStream a(42, 3, 1000);
    RngStream b(42, 3, 1000);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream keys decorrelate") {
    RngStream a(42, 3, 1000);
    RngStream b(42, 3, 1001);
    RngStream c(42, 4, 1000);
    RngStream d(43, 3, 1000);
    int equal = 0;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        if (va == b.next_u64()) ++equal;
        if (va == c.next_u64()) ++equal;
        if (va == d.next_u64()) ++equal;
    }
    CHECK(equal == 0);
}

TEST_CASE("uniform moments") {
    RngStream rng(7, 0, 0);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sumsq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("normal moments") {
    RngStream rng(11, 0, 0);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson moments") {
    RngStream rng(13, 0, 0);
    const double mean = 2.5;
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const int k = rng.poisson(mean);
        CHECK(k >= 0);
        sum += k;
        sumsq += static_cast<double>(k) * k;
    }
    const double m = sum / n;
    CHECK(m == doctest::Approx(mean).epsilon(0.01));
    CHECK(sumsq / n - m * m == doctest::Approx(mean).epsilon(0.03));
}

TEST_CASE("poisson with precomputed factor matches plain variant") {
    RngStream a(17, 1, 2);
    RngStream b(17, 1, 2);
    const double mean = 0.37;
    const double e = std::exp(-mean);
    for (int i = 0; i < 1000; ++i) CHECK(a.poisson(mean) == b.poisson(mean, e));
}
