// Copyright 2026 the diffsim authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "diffsim/similarity.hpp"

using namespace diffsim;

TEST_CASE("cosine similarity matches hand values and flags zero vectors") {
    CHECK(cosine({1.0, 0.0}, {0.0, 1.0}) == Catch::Approx(0.0).margin(1e-15));
    CHECK(cosine({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == Catch::Approx(1.0));
    CHECK(cosine({1.0, 0.0}, {-1.0, 0.0}) == Catch::Approx(-1.0));
    CHECK(cosine({1.0, 1.0}, {1.0, 0.0}) == Catch::Approx(1.0 / std::sqrt(2.0)));
    CHECK_THROWS_WITH(cosine({0.0, 0.0}, {1.0, 2.0}),
                      Catch::Matchers::ContainsSubstring("undefined cosine"));
    CHECK_THROWS(cosine({1.0}, {1.0, 2.0}));  // length mismatch
}

TEST_CASE("pearson correlation matches hand values and flags constant input") {
    CHECK(pearson({1.0, 2.0, 3.0}, {10.0, 20.0, 30.0}) == Catch::Approx(1.0));
    CHECK(pearson({1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}) == Catch::Approx(-1.0));
    // An affine shift changes cosine but not correlation.
    CHECK(pearson({1.0, 2.0, 4.0}, {101.0, 102.0, 104.0}) == Catch::Approx(1.0));
    CHECK_THROWS_WITH(pearson({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}),
                      Catch::Matchers::ContainsSubstring("undefined correlation"));
    CHECK_THROWS(pearson({1.0}, {2.0}));  // needs at least two samples
}

TEST_CASE("rmse matches hand values") {
    CHECK(rmse({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK(rmse({0.0, 0.0, 0.0, 0.0}, {2.0, 2.0, 2.0, 2.0}) == Catch::Approx(2.0));
    CHECK(rmse({1.0, 0.0}, {0.0, 1.0}) == Catch::Approx(1.0));
    CHECK(metric_higher_is_better(MetricKind::Rmse) == false);
    CHECK(metric_higher_is_better(MetricKind::Cosine) == true);
}

TEST_CASE("multi_axis_score averages per-channel scores") {
    TimeWindow a, b;
    a.sample_rate_hz = b.sample_rate_hz = 50.0;
    a.data = {{1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}};
    b.data = {{1.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}};

    MetricParams params;
    params.kind = MetricKind::Cosine;
    params.domain = ScoreDomain::Time;
    // channel 0: cosine 1; channel 1: cosine 0 -> average 0.5
    CHECK(multi_axis_score(a, b, params) == Catch::Approx(0.5));
}

TEST_CASE("score_matrix computes row statistics and contextualizes errors") {
    const std::vector<std::vector<double>> rows = {{1.0, 0.0}, {0.0, 1.0}};
    const std::vector<std::vector<double>> cols = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};

    const auto m = score_matrix(rows, cols,
                                [](const auto& x, const auto& y) { return cosine(x, y); });
    REQUIRE(m.values.size() == 2);
    REQUIRE(m.values[0].size() == 3);
    CHECK(m.values[0][0] == Catch::Approx(1.0));
    CHECK(m.values[0][1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.row_max(0) == Catch::Approx(1.0));
    CHECK(m.row_mean(0) == Catch::Approx((1.0 + 0.0 + 1.0 / std::sqrt(2.0)) / 3.0));
    CHECK(m.mean() == Catch::Approx((m.row_mean(0) + m.row_mean(1)) / 2.0));

    const std::vector<std::vector<double>> bad = {{1.0, 1.0}, {0.0, 0.0}};
    try {
        score_matrix(bad, cols, [](const auto& x, const auto& y) { return cosine(x, y); });
        FAIL("expected error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("i=1") != std::string::npos);
    }
}
