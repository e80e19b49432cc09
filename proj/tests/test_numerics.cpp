#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "cltta/numerics.hpp"

using namespace cltta;

TEST_CASE("softmax of a constant row is uniform") {
    const ProbMatrix probs = softmax(Matrix::from_rows({{0.0, 0.0, 0.0}}));
    for (std::size_t j = 0; j < 3; ++j) CHECK(probs(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax closed form") {
    const ProbMatrix probs = softmax(Matrix::from_rows({{std::log(2.0), 0.0}}));
    CHECK(probs(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(probs(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax saturates without overflow") {
    const ProbMatrix probs = softmax(Matrix::from_rows({{1000.0, 0.0}}));
    CHECK(probs(0, 0) == doctest::Approx(1.0));
    CHECK(probs(0, 1) == doctest::Approx(0.0));
    CHECK(probs.all_finite());

    const ProbMatrix big = softmax(Matrix::from_rows({{1e4, -1e4}}));
    CHECK(big.all_finite());
}

TEST_CASE("softmax rejects non-finite input") {
    Matrix logits(1, 2);
    logits(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(softmax(logits), std::invalid_argument);
    logits(0, 0) = std::nan("");
    CHECK_THROWS_AS(softmax(logits), std::invalid_argument);
}

TEST_CASE("softmax rows sum to one for large logit magnitudes") {
    Rng rng(42);
    Matrix logits(50, 7);
    for (double& v : logits.data()) v = rng.uniform(-100.0, 100.0);
    const ProbMatrix probs = softmax(logits);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols(); ++j) sum += probs(i, j);
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("clamped_log") {
    CHECK(clamped_log(1.0, 1e-12) == 0.0);
    CHECK(clamped_log(0.0, 1e-12) == doctest::Approx(-27.631021115928547).epsilon(1e-12));
    CHECK(clamped_log(0.5, 1e-12) == doctest::Approx(-0.6931471805599453).epsilon(1e-12));
    CHECK_THROWS_AS(clamped_log(-0.1, 1e-12), std::invalid_argument);
    CHECK_THROWS_AS(clamped_log(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("percentile pinned examples") {
    const std::vector<double> values{0.1, 0.2, 0.3, 0.4};
    CHECK(percentile(values, 75.0) == doctest::Approx(0.325).epsilon(1e-12));
    CHECK(percentile(values, 0.0) == 0.1);
    CHECK(percentile(values, 100.0) == 0.4);
    CHECK_THROWS_AS(percentile(std::vector<double>{}, 50.0), std::invalid_argument);
    CHECK_THROWS_AS(percentile(values, 101.0), std::invalid_argument);
}

TEST_CASE("percentile stays within data range") {
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + rng.index(20);
        std::vector<double> values(n);
        double lo = 1e300, hi = -1e300;
        for (double& v : values) {
            v = rng.uniform(-5.0, 5.0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double t = rng.uniform(0.0, 100.0);
        const double p = percentile(values, t);
        CHECK(p >= lo);
        CHECK(p <= hi);
    }
}

TEST_CASE("rng determinism and stream separation") {
    Rng a(12345);
    Rng b(12345);
    for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

    Rng c(12345);
    Rng d(54321);
    bool differs = false;
    for (int k = 0; k < 10; ++k) {
        if (c.next_u64() != d.next_u64()) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("rng seed zero is valid") {
    Rng rng(0);
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}

TEST_CASE("rng uniforms land in range and normals are finite") {
    Rng rng(99);
    for (int k = 0; k < 1000; ++k) {
        const double u = rng.uniform(-2.0, 3.0);
        CHECK(u >= -2.0);
        CHECK(u < 3.0);
        CHECK(std::isfinite(rng.normal()));
    }
}

TEST_CASE("validate_prob_matrix catches bad rows") {
    CHECK_NOTHROW(validate_prob_matrix(Matrix::from_rows({{0.3, 0.7}})));
    CHECK_THROWS_AS(validate_prob_matrix(Matrix::from_rows({{0.5, 0.6}})), std::invalid_argument);
    CHECK_THROWS_AS(validate_prob_matrix(Matrix::from_rows({{1.1, -0.1}})), std::invalid_argument);
}
