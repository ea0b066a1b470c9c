#include <doctest.h>

#include <cmath>
#include <set>

#include "fusedann/bench.hpp"
#include "fusedann/hybrid_index.hpp"
#include "test_support.hpp"

using namespace fusedann;
using fusedann::testing::gaussian_vec;
using fusedann::testing::ZipfSampler;

namespace {

// The worked 2-d dataset: two attribute groups on a circle of radius 5.
struct ToySet {
    std::vector<Vec> contents{{5.00, 0.00}, {-2.20, 4.33}, {-2.50, -4.33},
                              {2.50, 4.33}, {-5.00, 0.00}, {2.50, -4.33},
                              {3.54, 3.54}};
    std::vector<Vec> attrs{{-3.0}, {-3.0}, {-3.0}, {3.0}, {3.0}, {3.0}, {3.0}};
};

HybridIndex build_toy() {
    ToySet toy;
    HybridIndex::Config cfg;
    cfg.alpha_override = 3.0;
    cfg.beta_override = 1.5;
    return HybridIndex::build(toy.contents, toy.attrs, cfg);
}

struct ZipfDataset {
    std::vector<Vec> contents;
    std::vector<Vec> attrs;
    std::vector<Vec> values;
};

ZipfDataset make_zipf_dataset(std::size_t n, int d, int m, int classes, Real s,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ZipfDataset ds;
    for (int c = 0; c < classes; ++c)
        ds.values.push_back(fusedann::testing::random_vec(rng, m, -3, 3));
    ZipfSampler zipf(classes, s);
    for (std::size_t i = 0; i < n; ++i) {
        ds.contents.push_back(gaussian_vec(rng, d));
        ds.attrs.push_back(ds.values[zipf(rng)]);
    }
    return ds;
}

} // namespace

TEST_SUITE("hybrid-index") {

TEST_CASE("toy dataset reproduces the worked fused points and neighbours") {
    const HybridIndex idx = build_toy();
    CHECK(idx.params().alpha == 3.0);
    CHECK(idx.params().beta == 1.5);

    const auto& fused = idx.backend().points();
    CHECK(fused[0][0] == doctest::Approx(9.3333).epsilon(1e-4));
    CHECK(fused[0][1] == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(fused[4][0] == doctest::Approx(-9.3333).epsilon(1e-4)); // opposite group
    CHECK(fused[4][1] == doctest::Approx(-6.0).epsilon(1e-9));

    // In raw space the nearest neighbours of P1 cross groups; the fused
    // space keeps its own group in front.
    const QueryResult res = idx.query({5.0, 0.0}, {-3.0}, 3, 0.05, false);
    REQUIRE(res.hits.size() == 3);
    CHECK(res.hits[0].id == 0); // the query point itself
    std::set<std::int64_t> rest{res.hits[1].id, res.hits[2].id};
    CHECK(rest == std::set<std::int64_t>{1, 2});

    const auto top = idx.backend().search(fused[0], 3);
    CHECK(top[1].distance == doctest::Approx(5.60).epsilon(2e-3));
    CHECK(top[2].distance == doctest::Approx(5.77).epsilon(2e-3));
}

TEST_CASE("single record builds an index with N=1 and zero radius") {
    const HybridIndex idx = HybridIndex::build({{1.0, 2.0}}, {{0.5}}, {});
    CHECK(idx.size() == 1);
    CHECK(idx.stats().geometry(0).radius == 0.0);
    const QueryResult res = idx.query({1.0, 2.0}, {0.5}, 1, 0.05, false);
    REQUIRE(res.hits.size() == 1);
    CHECK(res.hits[0].score == 0.0);
}

TEST_CASE("single attribute class falls back to the alpha floor") {
    const HybridIndex idx = HybridIndex::build({{0.0, 0.0}, {1.0, 1.0}}, {{2.0}, {2.0}}, {});
    CHECK(idx.params().alpha == doctest::Approx(1.0 + kFloorMargin));
    CHECK(std::isinf(idx.params().sigma_min));
}

TEST_CASE("query validation and unknown attributes") {
    const HybridIndex idx = build_toy();
    CHECK_THROWS_AS(idx.query({0.0, 0.0}, {-3.0}, 0, 0.05, false), InvalidArgumentError);
    CHECK_THROWS_AS(idx.query({0.0}, {-3.0}, 1, 0.05, false), InvalidDimensionError);
    // Unknown attribute with exact filtering: empty result, not an error.
    const QueryResult res = idx.query({0.0, 0.0}, {7.5}, 2, 0.05, false);
    CHECK(res.hits.empty());
    CHECK(res.truncated);
    // With approximation it falls back to semantically nearest records.
    const QueryResult relaxed = idx.query({0.0, 0.0}, {7.5}, 2, 0.05, true);
    CHECK(relaxed.hits.size() == 2);
}

TEST_CASE("score is monotone in content distance when attributes match") {
    const HybridIndex idx = build_toy();
    const QueryResult res = idx.query({5.0, 0.0}, {-3.0}, 3, 0.05, false);
    for (std::size_t i = 1; i < res.hits.size(); ++i) {
        CHECK(res.hits[i - 1].attribute_distance == 0.0);
        CHECK(res.hits[i - 1].content_distance <= res.hits[i].content_distance);
        CHECK(res.hits[i - 1].score <= res.hits[i].score);
    }
}

TEST_CASE("exact filtering matches the brute-force filtered oracle on Zipf data") {
    const auto ds = make_zipf_dataset(2000, 12, 3, 8, 1.0, 61);
    const HybridIndex idx = HybridIndex::build(ds.contents, ds.attrs, {});

    std::mt19937_64 rng(67);
    std::uniform_int_distribution<int> pick_class(0, 7);
    int agree = 0;
    const int trials = 100;
    for (int it = 0; it < trials; ++it) {
        const Vec q = gaussian_vec(rng, 12);
        const Vec attr = ds.values[pick_class(rng)];
        const QueryResult res = idx.query(q, attr, 10, 0.05, false);
        const auto truth = oracle_exact_match(ds.contents, ds.attrs, q, attr, 10);
        std::vector<std::int64_t> got;
        for (const QueryHit& h : res.hits)
            got.push_back(h.id);
        if (got == truth)
            ++agree;
    }
    CHECK(agree >= static_cast<int>(trials * 0.95));
}

TEST_CASE("in-class ordering equals content ordering with an exhaustive budget") {
    const auto ds = make_zipf_dataset(500, 8, 2, 4, 0.0, 71);
    const HybridIndex idx = HybridIndex::build(ds.contents, ds.attrs, {});
    std::mt19937_64 rng(73);
    for (int it = 0; it < 20; ++it) {
        const Vec q = gaussian_vec(rng, 8);
        const Vec attr = ds.values[it % 4];
        // k = N forces the budget past the class size, so the result is the
        // full class ranked by content distance.
        const QueryResult res = idx.query(q, attr, 500, 1.0, false);
        const auto truth = oracle_exact_match(ds.contents, ds.attrs, q, attr, 500);
        REQUIRE(res.hits.size() == truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i)
            CHECK(res.hits[i].id == truth[i]);
    }
}

TEST_CASE("candidate budget keeps the true filtered top-k with rate 1 - eps") {
    const auto ds = make_zipf_dataset(5000, 16, 2, 8, 1.0, 79);
    const HybridIndex idx = HybridIndex::build(ds.contents, ds.attrs, {});
    std::mt19937_64 rng(83);
    ZipfSampler zipf(8, 1.0);
    const Real eps = 0.05;
    int covered = 0;
    const int trials = 200;
    for (int it = 0; it < trials; ++it) {
        const Vec q = gaussian_vec(rng, 16);
        const Vec attr = ds.values[zipf(rng)];
        const std::int64_t budget = idx.candidate_budget(attr, 10, eps);
        const auto candidates = idx.backend().search(fuse(q, attr, idx.params()), budget);
        std::set<std::int64_t> got;
        for (const auto& h : candidates)
            got.insert(h.id);
        const auto truth = oracle_exact_match(ds.contents, ds.attrs, q, attr, 10);
        bool all = true;
        for (std::int64_t id : truth)
            all = all && got.count(id) > 0;
        covered += all ? 1 : 0;
    }
    CHECK(static_cast<Real>(covered) / trials >= 1.0 - eps);
}

} // TEST_SUITE
