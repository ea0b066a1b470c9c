#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "fusedann/bench.hpp"
#include "fusedann/range_index.hpp"
#include "test_support.hpp"

using namespace fusedann;
using fusedann::testing::gaussian_vec;
using fusedann::testing::random_vec;

namespace {

FusionParams pinned_params(int d, int m) {
    FusionParams p;
    p.alpha = 10.0;
    p.beta = 2.0;
    p.epsilon_f = 1.0;
    p.sigma_min = std::numeric_limits<Real>::infinity();
    p.d = d;
    p.m = m;
    return p;
}

struct NumericDataset {
    std::vector<Vec> contents;
    std::vector<Vec> attrs;
    std::vector<Vec> fused;
};

NumericDataset make_numeric(std::size_t n, int d, const FusionParams& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NumericDataset ds;
    std::uniform_real_distribution<Real> attr(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        ds.contents.push_back(gaussian_vec(rng, d));
        ds.attrs.push_back({attr(rng)});
        ds.fused.push_back(fuse(ds.contents.back(), ds.attrs.back(), p));
    }
    return ds;
}

RangeIndexConfig small_config() {
    RangeIndexConfig cfg;
    cfg.alpha_override = 10.0;
    cfg.beta_override = 2.0;
    cfg.radius_k = 40;
    cfg.max_lines = 400;
    cfg.heldout_queries = 100;
    return cfg;
}

} // namespace

TEST_SUITE("range-engine") {

TEST_CASE("estimate_distributions") {
    SUBCASE("centroid count is ceil(sqrt(n))") {
        std::vector<Vec> contents{{0, 0}, {0, 1}, {5, 5}, {5, 6}};
        std::vector<Vec> attrs{{0.1}, {0.2}, {0.3}, {0.4}};
        const auto dist = estimate_distributions(contents, attrs, 7);
        CHECK(dist.query_samples.size() == 2);
        std::int64_t mass = 0;
        for (const auto& s : dist.query_samples)
            mass += s.weight;
        CHECK(mass == 4);
    }
    SUBCASE("constant attribute collapses the endpoint grid to a point") {
        std::vector<Vec> contents{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
        std::vector<Vec> attrs(4, Vec{2.5});
        const auto dist = estimate_distributions(contents, attrs, 7);
        REQUIRE(dist.endpoint_pairs.size() == 1);
        CHECK(dist.endpoint_pairs[0].l == Vec{2.5});
        CHECK(dist.endpoint_pairs[0].u == Vec{2.5});
    }
    SUBCASE("seeded rerun reproduces the centroids") {
        std::mt19937_64 rng(211);
        std::vector<Vec> contents;
        std::vector<Vec> attrs;
        for (int i = 0; i < 1000; ++i) {
            contents.push_back(gaussian_vec(rng, 2));
            attrs.push_back({contents.back()[0]});
        }
        const auto d1 = estimate_distributions(contents, attrs, 99);
        const auto d2 = estimate_distributions(contents, attrs, 99);
        REQUIRE(d1.query_samples.size() == d2.query_samples.size());
        for (std::size_t i = 0; i < d1.query_samples.size(); ++i) {
            CHECK(d1.query_samples[i].weight == d2.query_samples[i].weight);
            CHECK(d1.query_samples[i].center == d2.query_samples[i].center);
        }
    }
}

TEST_CASE("sample_range_lines") {
    const FusionParams p = pinned_params(8, 1);
    const auto ds = make_numeric(600, 8, p, 223);

    SUBCASE("single attribute value degenerates to one point-line per query sample") {
        std::vector<Vec> const_attrs(ds.contents.size(), Vec{0.5});
        std::vector<Vec> fused;
        for (std::size_t i = 0; i < ds.contents.size(); ++i)
            fused.push_back(fuse(ds.contents[i], const_attrs[i], p));
        const auto lines =
            sample_range_lines(ds.contents, const_attrs, fused, 1.0, 0.05, p, 20, 400, 5);
        REQUIRE_FALSE(lines.empty());
        for (const auto& line : lines)
            CHECK(line.segment.degenerate());
    }
    SUBCASE("doubling the coverage target never increases the line count") {
        const auto fine =
            sample_range_lines(ds.contents, ds.attrs, ds.fused, 0.4, 0.05, p, 20, 4000, 5);
        const auto coarse =
            sample_range_lines(ds.contents, ds.attrs, ds.fused, 0.8, 0.05, p, 20, 4000, 5);
        CHECK(coarse.size() <= fine.size());
    }
    SUBCASE("sampled lines agree with range_to_line on their sources") {
        const auto lines =
            sample_range_lines(ds.contents, ds.attrs, ds.fused, 0.5, 0.05, p, 20, 400, 5);
        REQUIRE_FALSE(lines.empty());
        for (const auto& line : lines) {
            const LineSegment want =
                range_to_line({line.source_q, line.source_l, line.source_u}, p);
            CHECK(euclidean_distance(want.a, line.segment.a) == doctest::Approx(0.0));
            CHECK(euclidean_distance(want.b, line.segment.b) == doctest::Approx(0.0));
        }
    }
    SUBCASE("empty dataset rejected") {
        CHECK_THROWS_AS(sample_range_lines({}, {}, {}, 0.5, 0.05, p, 20, 400, 5),
                        EmptyDatasetError);
    }
}

TEST_CASE("hierarchical line index") {
    std::mt19937_64 rng(227);
    std::vector<IndexedLine> lines;
    for (int i = 0; i < 100; ++i) {
        IndexedLine line;
        line.segment = {gaussian_vec(rng, 6), gaussian_vec(rng, 6)};
        line.base_radius = 1.0;
        lines.push_back(line);
    }
    const Real nu = 0.017453292519943295;
    const HierarchicalLineIndex index(lines, nu);
    const LineSimWeights weights;

    SUBCASE("one line occupies one cell") {
        const HierarchicalLineIndex single({lines[0]}, nu);
        CHECK(single.num_cells() == 1);
    }
    SUBCASE("antipodal directions share a cell") {
        IndexedLine fwd, bwd;
        fwd.segment = {Vec{0, 0, 0}, Vec{1, 2, 3}};
        bwd.segment = {Vec{1, 2, 3}, Vec{0, 0, 0}}; // same carrier, flipped
        const HierarchicalLineIndex two({fwd, bwd}, nu);
        CHECK(two.num_cells() == 1);
    }
    SUBCASE("every line is retrievable through its own cell") {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto members = index.cell_lines(lines[i].segment);
            CHECK(std::find(members.begin(), members.end(), i) != members.end());
            const std::size_t got = index.find_nearest(lines, lines[i].segment, 0.95, 2.0,
                                                       weights, 50.0);
            CHECK(got == i);
        }
    }
    SUBCASE("identical query returns similarity-1 line and perturbed copies lose") {
        // Add a perturbed copy of line 0; the original must win for the
        // original's own geometry.
        std::vector<IndexedLine> with_copy = lines;
        IndexedLine copy = lines[0];
        for (Real& x : copy.segment.b)
            x += 1e-3;
        with_copy.push_back(copy);
        const HierarchicalLineIndex idx2(with_copy, nu);
        // Exhaustive-similarity oracle.
        std::size_t best = 0;
        Real best_sim = -1.0;
        for (std::size_t i = 0; i < with_copy.size(); ++i) {
            const Real sim = line_similarity(lines[0].segment, with_copy[i].segment, 0.4, 0.4,
                                             0.2, 50.0);
            if (sim > best_sim) {
                best_sim = sim;
                best = i;
            }
        }
        CHECK(best == 0);
        CHECK(idx2.find_nearest(with_copy, lines[0].segment, 2.0, 2.0, weights, 50.0) == 0);
    }
    SUBCASE("single-line index matches everything") {
        const HierarchicalLineIndex single({lines[3]}, nu);
        const std::vector<IndexedLine> one{lines[3]};
        CHECK(single.find_nearest(one, lines[7].segment, 0.95, 2.0, weights, 50.0) == 0);
    }
}

TEST_CASE("cylindrical index") {
    std::mt19937_64 rng(229);

    SUBCASE("section count is ceil(length / radius)") {
        const LineSegment L{{0, 0}, {10, 0}};
        const std::vector<Vec> no_points;
        const CylindricalIndex cyl(L, no_points, 2.0);
        CHECK(cyl.num_sections() == 5);
        CHECK(cyl.stored_points() == 0);
    }
    SUBCASE("membership equals brute-force tube membership") {
        std::vector<Vec> points;
        for (int i = 0; i < 1000; ++i)
            points.push_back(gaussian_vec(rng, 4, 3.0));
        const LineSegment L{gaussian_vec(rng, 4), gaussian_vec(rng, 4)};
        const Real R = 3.5;
        const CylindricalIndex cyl(L, points, R);
        std::set<std::int32_t> stored;
        for (const auto& section : cyl.sections())
            for (const auto& e : section)
                stored.insert(e.id);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const bool inside = point_segment_distance(points[i], L) <= R;
            CHECK(stored.count(static_cast<std::int32_t>(i)) == (inside ? 1 : 0));
        }
    }
    SUBCASE("degenerate line keeps a single-section ball") {
        std::vector<Vec> points{{0.0, 0.0}, {0.5, 0.0}, {3.0, 0.0}};
        const CylindricalIndex cyl(LineSegment{{0, 0}, {0, 0}}, points, 1.0);
        CHECK(cyl.num_sections() == 1);
        CHECK(cyl.stored_points() == 2);
    }
    SUBCASE("search equals the brute-force tube filter") {
        std::vector<Vec> points;
        for (int i = 0; i < 2000; ++i)
            points.push_back(gaussian_vec(rng, 4, 2.0));
        const LineSegment L{Vec{-2, 0, 0, 0}, Vec{2, 0.5, 0, 0}};
        const Real max_r = 4.0;
        const CylindricalIndex cyl(L, points, max_r);
        for (int it = 0; it < 40; ++it) {
            LineSegment probe{gaussian_vec(rng, 4, 0.4), gaussian_vec(rng, 4, 0.4)};
            for (int h = 0; h < 4; ++h) {
                probe.a[h] += L.a[h];
                probe.b[h] += L.b[h];
            }
            const Real gap = hausdorff_distance(L, probe);
            const Real r_q = std::max<Real>(0.05, max_r - gap - 0.5);
            if (r_q + gap > max_r)
                continue;
            const auto got = cyl.search(points, probe, r_q);
            std::vector<std::int64_t> want;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (point_segment_distance(points[i], probe) <= r_q &&
                    point_segment_distance(points[i], L) <= max_r)
                    want.push_back(static_cast<std::int64_t>(i));
            }
            CHECK(got == want);
        }
    }
    SUBCASE("search_nearest equals the truncated exhaustive search") {
        std::vector<Vec> points;
        for (int i = 0; i < 1500; ++i)
            points.push_back(gaussian_vec(rng, 4, 2.0));
        const LineSegment L{Vec{-1, 0, 0, 0}, Vec{2, 1, 0, 0}};
        const CylindricalIndex cyl(L, points, 5.0);
        for (int it = 0; it < 25; ++it) {
            LineSegment probe{gaussian_vec(rng, 4, 0.3), gaussian_vec(rng, 4, 0.3)};
            for (int h = 0; h < 4; ++h) {
                probe.a[h] += L.a[h];
                probe.b[h] += L.b[h];
            }
            const Real gap = hausdorff_distance(L, probe);
            const Real r_q = 5.0 - gap - 0.25;
            if (r_q <= 0.1)
                continue;
            const std::int64_t limit = 1 + it * 3;
            const auto fast = cyl.search_nearest(points, probe, r_q, limit);
            auto full = cyl.search(points, probe, r_q);
            std::vector<std::pair<Real, std::int64_t>> want;
            for (std::int64_t id : full)
                want.emplace_back(point_segment_distance(points[id], probe), id);
            std::sort(want.begin(), want.end());
            if (want.size() > static_cast<std::size_t>(limit))
                want.resize(static_cast<std::size_t>(limit));
            REQUIRE(fast.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                CHECK(fast[i].second == want[i].second);
                CHECK(fast[i].first == want[i].first);
            }
        }
    }
    SUBCASE("radius overflow is an error") {
        std::vector<Vec> points{{0.0, 0.0}};
        const CylindricalIndex cyl(LineSegment{{0, 0}, {1, 0}}, points, 1.0);
        CHECK_THROWS_AS(cyl.search(points, LineSegment{{0, 5}, {1, 5}}, 1.0),
                        RadiusTooLargeError);
    }
    SUBCASE("query on the indexed line returns exactly the r <= R_Q prefix") {
        std::vector<Vec> points;
        for (int i = 0; i < 500; ++i)
            points.push_back(gaussian_vec(rng, 3, 1.5));
        const LineSegment L{Vec{0, 0, 0}, Vec{3, 0, 0}};
        const CylindricalIndex cyl(L, points, 3.0);
        const auto got = cyl.search(points, L, 1.25);
        std::vector<std::int64_t> want;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (point_segment_distance(points[i], L) <= 1.25)
                want.push_back(static_cast<std::int64_t>(i));
        CHECK(got == want);
    }
}

TEST_CASE("range index end to end") {
    const auto cfg = small_config();
    const FusionParams p = pinned_params(8, 1);
    const auto ds = make_numeric(1500, 8, p, 233);
    const RangeIndex rix = RangeIndex::build(ds.contents, ds.attrs, cfg);

    std::mt19937_64 rng(239);

    SUBCASE("full-span range matches the unfiltered flat top-k") {
        int matches = 0;
        const int trials = 40;
        for (int it = 0; it < trials; ++it) {
            const Vec q = gaussian_vec(rng, 8);
            std::vector<std::int64_t> got;
            try {
                const auto res = rix.query(q, {0.0}, {1.0}, 10, 0.01);
                for (const auto& h : res.hits)
                    got.push_back(h.id);
            } catch (const RadiusTooLargeError&) {
                continue; // counts as a miss
            }
            const auto truth = oracle_range(ds.contents, ds.attrs, q, {0.0}, {1.0}, 10);
            matches += got == truth ? 1 : 0;
        }
        CHECK(matches >= static_cast<int>(trials * 0.9));
    }
    SUBCASE("colocated query with an in-range record returns it at distance 0") {
        const std::size_t target = 42;
        const Real a = ds.attrs[target][0];
        const auto res =
            rix.query(ds.contents[target], {a - 0.05}, {a + 0.05}, 1, 0.01);
        REQUIRE_FALSE(res.hits.empty());
        CHECK(res.hits[0].id == static_cast<std::int64_t>(target));
        CHECK(res.hits[0].content_distance == doctest::Approx(0.0));
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(rix.query(gaussian_vec(rng, 8), {0.5}, {0.4}, 5, 0.01),
                        InvalidRangeError);
        CHECK_THROWS_AS(rix.query(gaussian_vec(rng, 8), {0.1}, {0.9}, 0, 0.01),
                        InvalidArgumentError);
    }
    SUBCASE("a range holding no records yields an empty result") {
        // A sliver inside the attribute span: the line is well covered but
        // no record passes the exact filter.
        Real lo = 0.42, hi = 0.42;
        bool occupied = true;
        while (occupied) {
            occupied = false;
            for (const Vec& a : ds.attrs)
                occupied = occupied || (a[0] >= lo && a[0] <= hi);
            if (occupied) {
                lo += 1e-7;
                hi = lo;
            }
        }
        const auto res = rix.query(gaussian_vec(rng, 8), {lo}, {hi}, 5, 0.01);
        CHECK(res.hits.empty());
        CHECK(res.truncated);
    }
    SUBCASE("a far out-of-span range fails with guidance") {
        CHECK_THROWS_AS(rix.query(gaussian_vec(rng, 8), {5.0}, {5.1}, 5, 0.01),
                        RadiusTooLargeError);
    }
    SUBCASE("angular resolution must lie in (0, pi]") {
        CHECK_THROWS_AS(HierarchicalLineIndex(rix.lines(), 0.0), InvalidArgumentError);
        CHECK_THROWS_AS(HierarchicalLineIndex(rix.lines(), 4.0), InvalidArgumentError);
    }
}

TEST_CASE("coverage of the sampled distribution stays within the pinned factor") {
    const auto cfg = small_config();
    const FusionParams p = pinned_params(6, 1);
    const auto ds = make_numeric(800, 6, p, 241);
    const Real eps_cover = 1.0;
    const auto lines =
        sample_range_lines(ds.contents, ds.attrs, ds.fused, eps_cover, 0.05, p, 20, 2000, 5);
    const HierarchicalLineIndex index(lines, cfg.nu);

    // Queries drawn from the estimated distributions themselves.
    const auto dist = estimate_distributions(ds.contents, ds.attrs, 5);
    std::mt19937_64 rng(251);
    std::uniform_int_distribution<std::size_t> pick_q(0, dist.query_samples.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_r(0, dist.endpoint_pairs.size() - 1);
    Real worst = 0.0;
    for (int it = 0; it < 100; ++it) {
        const auto& qs = dist.query_samples[pick_q(rng)];
        const auto& ep = dist.endpoint_pairs[pick_r(rng)];
        const LineSegment lq = range_to_line({qs.center, ep.l, ep.u}, p);
        const std::size_t near = index.find_nearest(lines, lq, cfg.tau, cfg.kappa, cfg.weights,
                                                    50.0);
        worst = std::max(worst, hausdorff_distance(lq, lines[near].segment));
    }
    // lambda_emp measured once against this configuration and pinned
    // (observed worst 4.66 at eps_cover 1.0: thinning both sample sets and
    // greedy pruning each contribute a covering step, and the similarity
    // argmax need not be the Hausdorff argmin).
    const Real lambda_emp = 6.0;
    CHECK(worst <= lambda_emp * eps_cover);
}

TEST_CASE("query latency grows sublinearly in the dataset size") {
    // Clustered contents, the regime embedding workloads live in. With
    // isotropic noise-only data every point is equidistant from every line
    // and no index can beat a scan, so that is not what we measure here.
    const int d = 8, centers = 50;
    std::mt19937_64 crng(999);
    std::vector<Vec> center_pts;
    for (int c = 0; c < centers; ++c)
        center_pts.push_back(gaussian_vec(crng, d, 2.0));

    RangeIndexConfig cfg = small_config();
    cfg.max_lines = 600;
    cfg.heldout_queries = 60;
    cfg.radius_k = 20;
    cfg.eps_cover = 0.3;

    std::vector<double> medians;
    for (const std::size_t n : {std::size_t(1000), std::size_t(10000), std::size_t(100000)}) {
        std::mt19937_64 rng(257);
        std::uniform_int_distribution<int> pick(0, centers - 1);
        std::vector<Vec> contents, attrs;
        std::uniform_real_distribution<Real> attr(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            Vec v = center_pts[pick(rng)];
            const Vec noise = gaussian_vec(rng, d, 0.15);
            for (int h = 0; h < d; ++h)
                v[h] += noise[h];
            contents.push_back(std::move(v));
            attrs.push_back({attr(rng)});
        }
        const RangeIndex rix = RangeIndex::build(contents, attrs, cfg);
        std::mt19937_64 qrng(263);
        std::vector<double> times;
        for (int it = 0; it < 60; ++it) {
            Vec q = center_pts[pick(qrng)];
            const Vec noise = gaussian_vec(qrng, d, 0.15);
            for (int h = 0; h < d; ++h)
                q[h] += noise[h];
            std::uniform_real_distribution<Real> centre(0.1, 0.9);
            const Real c = centre(qrng);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                (void)rix.query(q, {c - 0.1}, {c + 0.1}, 10, 0.01);
            } catch (const RadiusTooLargeError&) {
                continue;
            }
            times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count());
        }
        REQUIRE_FALSE(times.empty());
        std::sort(times.begin(), times.end());
        medians.push_back(times[times.size() / 2]);
    }
    // Sub-linear growth over the measured span: 100x more data must cost
    // much less than 100x per query (observed ~2x then ~15x, ~31x total).
    CHECK(medians[1] <= medians[0] * 9.0 + 5e-5);
    CHECK(medians[2] <= medians[0] * 90.0 + 5e-4);
}

} // TEST_SUITE
