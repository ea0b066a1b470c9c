#include <doctest.h>

#include <cmath>
#include <limits>

#include "fusedann/cluster_stats.hpp"
#include "test_support.hpp"

using namespace fusedann;
using fusedann::testing::gaussian_vec;

namespace {

// Builds stats with explicit knobs for formula tests, bypassing geometry.
ClusterStats synthetic_stats(std::vector<ClassGeometry> classes, std::int64_t total) {
    const std::size_t n = classes.size();
    std::vector<Real> d_min(n * n, std::numeric_limits<Real>::infinity());
    return ClusterStats::from_parts(std::move(classes), std::move(d_min), total);
}

ClassGeometry make_class(std::int64_t count, Real gamma, Real radius = 1.0) {
    ClassGeometry g;
    g.count = count;
    g.radius = radius;
    g.gamma = gamma;
    g.degenerate = (count == 1 || radius == 0.0);
    return g;
}

} // namespace

TEST_SUITE("cluster-stats") {

TEST_CASE("coincident points give zero radius") {
    const std::vector<Vec> fused{{1.0, 2.0}, {1.0, 2.0}};
    const std::vector<ClassId> classes{0, 0};
    const auto stats = ClusterStats::compute(fused, classes);
    CHECK(stats.geometry(0).radius == 0.0);
    CHECK(stats.geometry(0).count == 2);
    CHECK(stats.geometry(0).degenerate);
}

TEST_CASE("singleton classes flag gamma as undefined") {
    const std::vector<Vec> fused{{0.0, 0.0}, {3.0, 4.0}};
    const std::vector<ClassId> classes{0, 1};
    const auto stats = ClusterStats::compute(fused, classes);
    CHECK(stats.min_cross_distance(0, 1) == doctest::Approx(5.0));
    CHECK(stats.geometry(0).degenerate);
    CHECK(std::isinf(stats.geometry(0).gamma));
}

TEST_CASE("radius and cross distances match the exhaustive oracle") {
    std::mt19937_64 rng(31);
    const std::size_t n = 500;
    const int num_classes = 5;
    std::vector<Vec> fused;
    std::vector<ClassId> classes;
    std::uniform_int_distribution<int> cls(0, num_classes - 1);
    for (std::size_t i = 0; i < n; ++i) {
        fused.push_back(gaussian_vec(rng, 6));
        classes.push_back(static_cast<ClassId>(cls(rng)));
    }
    const auto stats = ClusterStats::compute(fused, classes);

    std::int64_t total = 0;
    for (int a = 0; a < num_classes; ++a)
        total += stats.geometry(a).count;
    CHECK(total == static_cast<std::int64_t>(n));

    for (int a = 0; a < num_classes; ++a) {
        Vec centroid(6, 0.0);
        std::int64_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (classes[i] != static_cast<ClassId>(a))
                continue;
            for (int h = 0; h < 6; ++h)
                centroid[h] += fused[i][h];
            ++count;
        }
        for (Real& x : centroid)
            x /= static_cast<Real>(count);
        Real radius = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (classes[i] == static_cast<ClassId>(a))
                radius = std::max(radius, euclidean_distance(fused[i], centroid));
        CHECK(stats.geometry(a).radius == doctest::Approx(radius).epsilon(1e-12));

        for (int b = 0; b < num_classes; ++b) {
            if (a == b)
                continue;
            Real want = std::numeric_limits<Real>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (classes[i] == static_cast<ClassId>(a) &&
                        classes[j] == static_cast<ClassId>(b))
                        want = std::min(want, euclidean_distance(fused[i], fused[j]));
            CHECK(stats.min_cross_distance(a, b) == doctest::Approx(want).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(ClusterStats::compute({}, {}), EmptyDatasetError);
}

TEST_CASE("candidate_count formula and branches") {
    SUBCASE("singleton class returns min(k, N_a)") {
        auto stats = synthetic_stats({make_class(1, 0.0, 0.0)}, 100);
        CHECK(candidate_count(10, 0.5, stats, 0) == 1);
    }
    SUBCASE("eps = 1 removes the log term") {
        auto stats = synthetic_stats({make_class(100, 1.0)}, 1000);
        CHECK(candidate_count(10, 1.0, stats, 0) == 10);
    }
    SUBCASE("frozen worked value") {
        // k=10, eps=e^-1 (ln term 1), gamma=1, N=1000, N_a=100:
        // ceil(10 * (1 + 1/1 * 900/100)) = 100.
        auto stats = synthetic_stats({make_class(100, 1.0)}, 1000);
        CHECK(candidate_count(10, std::exp(-1.0), stats, 0) == 100);
    }
    SUBCASE("unknown class") {
        auto stats = synthetic_stats({make_class(100, 1.0)}, 1000);
        CHECK_THROWS_AS(candidate_count(10, 0.5, stats, 7), UnknownAttributeError);
    }
    SUBCASE("zero-radius multi-record class") {
        auto stats = synthetic_stats({make_class(5, 0.0, 0.0)}, 100);
        CHECK(candidate_count(10, 0.5, stats, 0) == 5);
        CHECK(candidate_count(3, 0.5, stats, 0) == 3);
    }
}

TEST_CASE("candidate_count_multi formula and reduction") {
    SUBCASE("frozen worked value with F=2") {
        // ceil(10 * (1 + 1/(1*2) * 900/100)) = ceil(55) = 55.
        auto stats = synthetic_stats({make_class(100, 1.0)}, 1000);
        CHECK(candidate_count_multi(10, std::exp(-1.0), stats, 0, 2) == 55);
    }
    SUBCASE("full-coverage class needs only k") {
        auto stats = synthetic_stats({make_class(1000, 2.0)}, 1000);
        CHECK(candidate_count_multi(10, 0.05, stats, 0, 3) == 10);
    }
    SUBCASE("F=1 reduces to the single-attribute formula exactly") {
        std::mt19937_64 rng(37);
        std::uniform_real_distribution<Real> gamma_dist(0.1, 5.0);
        std::uniform_real_distribution<Real> eps_dist(0.01, 0.99);
        std::uniform_int_distribution<std::int64_t> count_dist(2, 400);
        std::uniform_int_distribution<std::int64_t> k_dist(1, 50);
        for (int it = 0; it < 50; ++it) {
            const std::int64_t n_a = count_dist(rng);
            auto stats = synthetic_stats({make_class(n_a, gamma_dist(rng))}, n_a + count_dist(rng));
            const std::int64_t k = k_dist(rng);
            const Real eps = eps_dist(rng);
            CHECK(candidate_count_multi(k, eps, stats, 0, 1) == candidate_count(k, eps, stats, 0));
        }
    }
}

TEST_CASE("candidate_count is monotone in eps and gamma") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<Real> gamma_dist(0.05, 4.0);
    for (int it = 0; it < 50; ++it) {
        const Real g1 = gamma_dist(rng);
        const Real g2 = g1 + gamma_dist(rng);
        auto stats_lo = synthetic_stats({make_class(50, g1)}, 2000);
        auto stats_hi = synthetic_stats({make_class(50, g2)}, 2000);
        std::int64_t prev = std::numeric_limits<std::int64_t>::max();
        for (Real eps : {0.01, 0.05, 0.2, 0.5, 0.9, 1.0}) {
            const std::int64_t cur = candidate_count(10, eps, stats_lo, 0);
            CHECK(cur <= prev);
            prev = cur;
            // Larger separation never needs more candidates.
            CHECK(candidate_count(10, eps, stats_hi, 0) <= cur);
        }
    }
    // gamma -> infinity drives k' down to k.
    auto stats = synthetic_stats({make_class(50, 1e9)}, 100000);
    CHECK(candidate_count(10, 0.01, stats, 0) == 10);
}

TEST_CASE("expected_candidate_count") {
    SUBCASE("single class carries all mass") {
        auto stats = synthetic_stats({make_class(100, 1.0)}, 1000);
        const Real expect = static_cast<Real>(candidate_count(10, 0.05, stats, 0));
        CHECK(expected_candidate_count(10, 0.05, stats, {{0, 1.0}}) == doctest::Approx(expect));
    }
    SUBCASE("constant mixture") {
        auto stats = synthetic_stats({make_class(100, 1.0), make_class(100, 1.0)}, 1000);
        const Real c = static_cast<Real>(candidate_count(10, 0.05, stats, 0));
        CHECK(expected_candidate_count(10, 0.05, stats, {{0, 0.5}, {1, 0.5}}) ==
              doctest::Approx(c));
    }
    SUBCASE("Zipf mixture matches a direct weighted sum") {
        std::vector<ClassGeometry> classes;
        std::int64_t total = 0;
        for (int r = 0; r < 5; ++r) {
            const std::int64_t count = 50 * (r + 1);
            classes.push_back(make_class(count, 0.5 + 0.3 * r));
            total += count;
        }
        auto stats = synthetic_stats(std::move(classes), total);
        Real h = 0.0;
        for (int r = 1; r <= 5; ++r)
            h += 1.0 / r;
        std::map<ClassId, Real> probs;
        Real direct = 0.0;
        for (int r = 0; r < 5; ++r) {
            probs[r] = (1.0 / (r + 1)) / h;
            direct += probs[r] * static_cast<Real>(candidate_count(10, 0.05, stats, r));
        }
        CHECK(expected_candidate_count(10, 0.05, stats, probs) ==
              doctest::Approx(direct).epsilon(1e-12));
    }
    SUBCASE("bad probability mass") {
        auto stats = synthetic_stats({make_class(100, 1.0)}, 1000);
        CHECK_THROWS_AS(expected_candidate_count(10, 0.05, stats, {{0, 0.7}}),
                        InvalidArgumentError);
        CHECK_THROWS_AS(expected_candidate_count(10, 0.05, stats, {{3, 1.0}}),
                        UnknownAttributeError);
    }
}

} // TEST_SUITE
