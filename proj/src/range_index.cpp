#include "fusedann/range_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>

namespace fusedann {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

struct KMeansResult {
    std::vector<Vec> centroids;
    std::vector<std::int64_t> sizes;
};

// Lloyd iterations with seeded index initialization; ties and empty-cluster
// reseeding are resolved deterministically so reruns reproduce the result.
KMeansResult kmeans(std::span<const Vec> points, std::size_t k, std::uint64_t seed,
                    int iterations = 25) {
    const std::size_t n = points.size();
    k = std::min(k, n);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    KMeansResult result;
    result.centroids.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        result.centroids.push_back(points[order[i]]);

    const std::size_t dim = points[0].size();
    std::vector<std::size_t> assign(n, 0);
    for (int it = 0; it < iterations; ++it) {
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            Real best = kInf;
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < result.centroids.size(); ++c) {
                const Real d = squared_distance(points[i], result.centroids[c]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            if (assign[i] != best_c) {
                assign[i] = best_c;
                moved = true;
            }
        }
        std::vector<Vec> sums(result.centroids.size(), Vec(dim, 0.0));
        std::vector<std::int64_t> counts(result.centroids.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t h = 0; h < dim; ++h)
                sums[assign[i]][h] += points[i][h];
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < sums.size(); ++c) {
            if (counts[c] == 0) {
                // Reseed an empty cluster with the point farthest from its
                // current centroid.
                Real far_d = -1.0;
                std::size_t far_i = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const Real d = squared_distance(points[i], result.centroids[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                result.centroids[c] = points[far_i];
                assign[far_i] = c;
                moved = true;
                continue;
            }
            for (std::size_t h = 0; h < dim; ++h)
                sums[c][h] /= static_cast<Real>(counts[c]);
            result.centroids[c] = std::move(sums[c]);
        }
        if (!moved && it > 0)
            break;
    }

    result.sizes.assign(result.centroids.size(), 0);
    for (std::size_t i = 0; i < n; ++i)
        ++result.sizes[assign[i]];
    return result;
}

} // namespace

SampledDistributions estimate_distributions(std::span<const Vec> contents,
                                            std::span<const Vec> attrs, std::uint64_t seed,
                                            Real c) {
    if (contents.empty() || attrs.empty())
        throw EmptyDatasetError("estimate_distributions: empty dataset");
    SampledDistributions out;

    const std::size_t k =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<Real>(contents.size()))));
    const KMeansResult km = kmeans(contents, k, seed);
    for (std::size_t i = 0; i < km.centroids.size(); ++i) {
        if (km.sizes[i] > 0)
            out.query_samples.push_back({km.centroids[i], km.sizes[i]});
    }
    std::stable_sort(out.query_samples.begin(), out.query_samples.end(),
                     [](const QuerySample& a, const QuerySample& b) { return a.weight > b.weight; });

    const std::size_t m = attrs[0].size();
    Vec mu(m, 0.0), sigma(m, 0.0);
    for (const Vec& a : attrs)
        for (std::size_t h = 0; h < m; ++h)
            mu[h] += a[h];
    for (Real& x : mu)
        x /= static_cast<Real>(attrs.size());
    for (const Vec& a : attrs)
        for (std::size_t h = 0; h < m; ++h)
            sigma[h] += (a[h] - mu[h]) * (a[h] - mu[h]);
    for (Real& x : sigma)
        x = std::sqrt(x / static_cast<Real>(attrs.size()));

    // Endpoint grid over the Gaussian model: lower bounds centred at
    // mu - c*sigma, upper at mu + c*sigma, spread sigma/sqrt(2), one shared
    // z-offset across dimensions per sample.
    static constexpr Real kZ[] = {-3.0, -1.5, 0.0, 1.5, 3.0};
    const Real spread = 1.0 / std::sqrt(2.0);
    std::set<std::pair<Vec, Vec>> seen;
    for (Real zl : kZ) {
        for (Real zu : kZ) {
            Vec l(m), u(m);
            bool valid = true;
            for (std::size_t h = 0; h < m; ++h) {
                l[h] = mu[h] - c * sigma[h] + zl * spread * sigma[h];
                u[h] = mu[h] + c * sigma[h] + zu * spread * sigma[h];
                if (l[h] > u[h])
                    valid = false;
            }
            if (valid && seen.emplace(l, u).second)
                out.endpoint_pairs.push_back({std::move(l), std::move(u)});
        }
    }
    return out;
}

std::vector<IndexedLine> sample_range_lines(std::span<const Vec> contents,
                                            std::span<const Vec> attrs,
                                            std::span<const Vec> fused, Real eps_cover, Real delta,
                                            const FusionParams& params, std::int64_t radius_k,
                                            std::size_t max_lines, std::uint64_t seed) {
    if (contents.empty())
        throw EmptyDatasetError("sample_range_lines: empty dataset");
    if (!(eps_cover > 0.0))
        throw InvalidArgumentError("sample_range_lines: eps_cover must be positive");

    const SampledDistributions dist = estimate_distributions(contents, attrs, seed);

    // Query samples thinned to resolution beta*eps, endpoints to
    // beta*eps/alpha; both greedy covers keep the heavier samples first.
    const Real r_q = params.beta * eps_cover;
    const Real r_r = params.beta * eps_cover / params.alpha;

    std::vector<const QuerySample*> kept_queries;
    for (const QuerySample& s : dist.query_samples) {
        bool covered = false;
        for (const QuerySample* q : kept_queries) {
            if (euclidean_distance(q->center, s.center) <= r_q) {
                covered = true;
                break;
            }
        }
        if (!covered)
            kept_queries.push_back(&s);
    }
    std::vector<const EndpointPair*> kept_pairs;
    for (const EndpointPair& p : dist.endpoint_pairs) {
        bool covered = false;
        for (const EndpointPair* q : kept_pairs) {
            const Real gap = std::max(euclidean_distance(q->l, p.l), euclidean_distance(q->u, p.u));
            if (gap <= r_r) {
                covered = true;
                break;
            }
        }
        if (!covered)
            kept_pairs.push_back(&p);
    }

    struct Candidate {
        LineSegment segment;
        const QuerySample* q;
        const EndpointPair* range;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(kept_queries.size() * kept_pairs.size());
    for (const QuerySample* q : kept_queries) {
        for (const EndpointPair* p : kept_pairs) {
            RangeQuery rq{q->center, p->l, p->u};
            candidates.push_back({range_to_line(rq, params), q, p});
        }
    }

    // Farthest-first traversal over Hausdorff distance: the visit order is
    // independent of eps_cover, so a looser cover can only keep fewer lines.
    std::vector<std::size_t> kept;
    std::vector<Real> min_gap(candidates.size(), kInf);
    kept.push_back(0);
    min_gap[0] = 0.0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        min_gap[i] = hausdorff_distance(candidates[i].segment, candidates[0].segment);
    while (kept.size() < std::min(max_lines, candidates.size())) {
        std::size_t far_i = 0;
        Real far_d = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (min_gap[i] > far_d) {
                far_d = min_gap[i];
                far_i = i;
            }
        }
        if (far_d <= eps_cover)
            break;
        kept.push_back(far_i);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (min_gap[i] > 0.0)
                min_gap[i] = std::min(
                    min_gap[i], hausdorff_distance(candidates[i].segment, candidates[far_i].segment));
        }
    }
    std::sort(kept.begin(), kept.end());

    // Radius statistics per distinct sampled query: content-space top-k
    // distances at the sample point.
    const std::int64_t n = static_cast<std::int64_t>(contents.size());
    std::map<const QuerySample*, RadiusParams> radius_cache;
    for (std::size_t ki : kept) {
        const QuerySample* q = candidates[ki].q;
        if (radius_cache.count(q))
            continue;
        std::vector<Real> dists;
        dists.reserve(contents.size());
        for (const Vec& v : contents)
            dists.push_back(euclidean_distance(v, q->center));
        const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(radius_k), dists.size());
        std::partial_sort(dists.begin(), dists.begin() + kk, dists.end());
        dists.resize(kk);
        Real mean = 0.0;
        for (Real d : dists)
            mean += d;
        mean /= static_cast<Real>(kk);
        Real var = 0.0;
        for (Real d : dists)
            var += (d - mean) * (d - mean);
        RadiusParams rp;
        rp.d_k = dists.back();
        rp.n = n;
        rp.sigma = std::sqrt(var / static_cast<Real>(kk));
        rp.delta = delta;
        radius_cache[q] = rp;
    }

    std::vector<IndexedLine> lines;
    lines.reserve(kept.size());
    for (std::size_t ki : kept) {
        const Candidate& c = candidates[ki];
        IndexedLine line;
        line.segment = c.segment;
        line.base_radius = optimal_radius(radius_cache[c.q], params.beta);
        line.eta = 0.0;
        if (!line.segment.degenerate() && line.base_radius > 0.0)
            line.eta = local_density(line.segment, fused, line.base_radius);
        line.source_q = c.q->center;
        line.source_l = c.range->l;
        line.source_u = c.range->u;
        lines.push_back(std::move(line));
    }
    return lines;
}

// ---------------------------------------------------------------------------
// HierarchicalLineIndex

Vec HierarchicalLineIndex::canonical_direction(const LineSegment& segment) {
    Vec dir = segment.direction();
    for (Real x : dir) {
        if (std::abs(x) > 1e-12) {
            if (x < 0.0)
                for (Real& y : dir)
                    y = -y;
            break;
        }
    }
    return dir;
}

std::vector<std::int32_t> HierarchicalLineIndex::quantize(const Vec& direction) const {
    std::vector<std::int32_t> key(direction.size());
    for (std::size_t i = 0; i < direction.size(); ++i)
        key[i] = static_cast<std::int32_t>(std::floor(direction[i] / quantum_));
    return key;
}

HierarchicalLineIndex::HierarchicalLineIndex(const std::vector<IndexedLine>& lines, Real nu) {
    if (lines.empty())
        throw EmptyDatasetError("HierarchicalLineIndex: no lines");
    if (!(nu > 0.0) || nu > 3.14159265358979323846)
        throw InvalidArgumentError("HierarchicalLineIndex: nu must lie in (0, pi]");
    nu_ = nu;
    const std::size_t dim = lines[0].segment.a.size();
    // Same-cell directions then differ by at most ~nu in chord length.
    quantum_ = nu / std::sqrt(static_cast<Real>(dim));

    for (std::uint32_t i = 0; i < lines.size(); ++i) {
        if (lines[i].segment.degenerate()) {
            point_cell_.push_back(i);
            continue;
        }
        const Vec dir = canonical_direction(lines[i].segment);
        const auto key = quantize(dir);
        auto [it, inserted] = cell_of_key_.emplace(key, cells_.size());
        if (inserted)
            cells_.push_back({});
        Cell& cell = cells_[it->second];
        if (cell.representative.empty())
            cell.representative.assign(dim, 0.0);
        for (std::size_t h = 0; h < dim; ++h)
            cell.representative[h] += dir[h];
        cell.members.push_back(i);
        cell.midpoints.push_back(lines[i].segment.midpoint());
    }
    for (Cell& cell : cells_) {
        const Real len = norm(cell.representative);
        if (len > 0.0)
            for (Real& x : cell.representative)
                x /= len;
        std::vector<std::uint32_t> ids(cell.members.size());
        std::iota(ids.begin(), ids.end(), 0);
        build_tree(cell, std::move(ids), 0);
    }
}

std::int32_t HierarchicalLineIndex::build_tree(Cell& cell, std::vector<std::uint32_t> ids,
                                               int depth) {
    if (ids.empty())
        return -1;
    const std::int32_t node_id = static_cast<std::int32_t>(cell.tree.size());
    cell.tree.emplace_back();
    if (ids.size() <= 8) {
        cell.tree[node_id].bucket = std::move(ids);
        return node_id;
    }
    const int axis = depth % static_cast<int>(cell.midpoints[ids[0]].size());
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
        const Real xa = cell.midpoints[a][axis];
        const Real xb = cell.midpoints[b][axis];
        return xa != xb ? xa < xb : a < b;
    });
    const std::size_t mid = ids.size() / 2;
    const Real split = cell.midpoints[ids[mid]][axis];
    std::vector<std::uint32_t> left(ids.begin(), ids.begin() + mid);
    std::vector<std::uint32_t> right(ids.begin() + mid, ids.end());
    cell.tree[node_id].axis = axis;
    cell.tree[node_id].split = split;
    const std::int32_t l = build_tree(cell, std::move(left), depth + 1);
    const std::int32_t r = build_tree(cell, std::move(right), depth + 1);
    cell.tree[node_id].left = l;
    cell.tree[node_id].right = r;
    return node_id;
}

void HierarchicalLineIndex::radius_query(const Cell& cell, std::int32_t node, const Vec& center,
                                         Real radius, std::vector<std::uint32_t>& out) const {
    if (node < 0)
        return;
    const KdNode& kd = cell.tree[node];
    if (kd.axis < 0) {
        for (std::uint32_t local : kd.bucket)
            if (euclidean_distance(cell.midpoints[local], center) <= radius)
                out.push_back(cell.members[local]);
        return;
    }
    if (center[kd.axis] - radius <= kd.split)
        radius_query(cell, kd.left, center, radius, out);
    if (center[kd.axis] + radius >= kd.split)
        radius_query(cell, kd.right, center, radius, out);
}

std::vector<std::size_t> HierarchicalLineIndex::cell_lines(const LineSegment& query) const {
    if (query.degenerate())
        return {point_cell_.begin(), point_cell_.end()};
    const auto key = quantize(canonical_direction(query));
    auto it = cell_of_key_.find(key);
    if (it == cell_of_key_.end())
        return {};
    const Cell& cell = cells_[it->second];
    return {cell.members.begin(), cell.members.end()};
}

namespace {

// Similarity that tolerates degenerate segments: matching a point against a
// proper line keeps only the position term.
Real similarity_guarded(const LineSegment& a, const LineSegment& b, const LineSimWeights& w,
                        Real d_max) {
    if (!a.degenerate() && !b.degenerate())
        return line_similarity(a, b, w.direction, w.position, w.length, d_max);
    const Real mid = euclidean_distance(a.midpoint(), b.midpoint());
    const Real position = std::max<Real>(0.0, 1.0 - mid / d_max);
    const bool both = a.degenerate() && b.degenerate();
    return w.position * position + (both ? w.direction + w.length : 0.0);
}

} // namespace

std::size_t HierarchicalLineIndex::find_nearest(const std::vector<IndexedLine>& lines,
                                                const LineSegment& query, Real tau, Real kappa,
                                                const LineSimWeights& weights, Real d_max) const {
    if (lines.empty())
        throw EmptyDatasetError("find_nearest: no indexed lines");

    if (query.degenerate()) {
        // No direction to hash on; fall back to the closest line by
        // Hausdorff distance over everything.
        std::size_t best = 0;
        Real best_d = kInf;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const Real d = hausdorff_distance(query, lines[i].segment);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    const Vec dir = canonical_direction(query);
    Vec anti(dir.size());
    for (std::size_t i = 0; i < dir.size(); ++i)
        anti[i] = -dir[i];

    // A cell is a neighbour when its representative direction sits within
    // the 1-ring of the query's cell (checked on both orientations since
    // canonicalization is discontinuous near the sign boundary).
    const Real ring = 2.5 * nu_;
    std::vector<std::size_t> near_cells;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const Real chord = std::min(euclidean_distance(cells_[c].representative, dir),
                                    euclidean_distance(cells_[c].representative, anti));
        if (chord <= ring)
            near_cells.push_back(c);
    }

    const Vec mid = query.midpoint();
    const Real radius = kappa * query.length();
    std::vector<std::uint32_t> candidates;
    for (std::size_t c : near_cells)
        radius_query(cells_[c], cells_[c].tree.empty() ? -1 : 0, mid, radius, candidates);

    if (candidates.empty()) {
        // Widen to every line in the neighbouring cells, then to all cells.
        for (std::size_t c : near_cells)
            candidates.insert(candidates.end(), cells_[c].members.begin(),
                              cells_[c].members.end());
    }
    if (candidates.empty()) {
        candidates.resize(lines.size());
        std::iota(candidates.begin(), candidates.end(), 0);
    } else {
        candidates.insert(candidates.end(), point_cell_.begin(), point_cell_.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::size_t best = candidates.front();
    Real best_sim = -1.0;
    for (std::uint32_t id : candidates) {
        const Real sim = similarity_guarded(query, lines[id].segment, weights, d_max);
        if (sim > best_sim) {
            best_sim = sim;
            best = id;
        }
        if (best_sim > tau)
            break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// CylindricalIndex

CylindricalIndex::CylindricalIndex(LineSegment line, std::span<const Vec> points, Real max_radius)
    : line_(std::move(line)), max_radius_(max_radius) {
    if (!(max_radius > 0.0))
        throw InvalidArgumentError("CylindricalIndex: max_radius must be positive");
    int num_sections = 1;
    if (!line_.degenerate())
        num_sections = std::max<int>(1, static_cast<int>(std::ceil(line_.length() / max_radius_)));
    sections_.assign(num_sections, {});
    for (std::size_t i = 0; i < points.size(); ++i) {
        const CylCoords c = line_.degenerate()
                                ? CylCoords{0.0, euclidean_distance(points[i], line_.a)}
                                : cylindrical_coords(points[i], line_);
        if (c.r > max_radius_)
            continue;
        const int section = std::min<int>(static_cast<int>(c.t * num_sections), num_sections - 1);
        sections_[section].push_back({static_cast<std::int32_t>(i), c.r});
    }
    for (auto& section : sections_) {
        std::sort(section.begin(), section.end(), [](const Entry& a, const Entry& b) {
            return a.r != b.r ? a.r < b.r : a.id < b.id;
        });
    }
}

CylindricalIndex CylindricalIndex::from_parts(LineSegment line, Real max_radius,
                                              std::vector<std::vector<Entry>> sections) {
    CylindricalIndex c;
    c.line_ = std::move(line);
    c.max_radius_ = max_radius;
    c.sections_ = std::move(sections);
    return c;
}

std::int64_t CylindricalIndex::stored_points() const {
    std::int64_t total = 0;
    for (const auto& s : sections_)
        total += static_cast<std::int64_t>(s.size());
    return total;
}

std::vector<std::int64_t> CylindricalIndex::search(std::span<const Vec> points,
                                                   const LineSegment& query, Real radius) const {
    if (!(radius > 0.0))
        throw InvalidArgumentError("CylindricalIndex::search: radius must be positive");
    const Real gap = hausdorff_distance(line_, query);
    const Real adjusted = radius + gap;
    if (adjusted > max_radius_)
        throw RadiusTooLargeError(
            "CylindricalIndex::search: adjusted radius " + std::to_string(adjusted) +
            " exceeds indexed max " + std::to_string(max_radius_) +
            "; rebuild the index with a larger Hausdorff slack or use a smaller radius");

    const int num_sections = static_cast<int>(sections_.size());
    std::vector<std::int64_t> out;
    for (int s = 0; s < num_sections; ++s) {
        if (sections_[s].empty())
            continue;
        if (!line_.degenerate()) {
            const Real t0 = static_cast<Real>(s) / num_sections;
            const Real t1 = static_cast<Real>(s + 1) / num_sections;
            const Real closest = segment_segment_distance(query, line_.subsegment(t0, t1));
            // Points sit within `adjusted` of the subsegment and within
            // `radius` of the query only if the segments themselves come
            // within adjusted + radius.
            if (closest > adjusted + radius)
                continue;
        }
        const auto& entries = sections_[s];
        const auto end = std::upper_bound(entries.begin(), entries.end(), adjusted,
                                          [](Real r, const Entry& e) { return r < e.r; });
        for (auto it = entries.begin(); it != end; ++it) {
            if (point_segment_distance(points[it->id], query) <= radius)
                out.push_back(it->id);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<Real, std::int64_t>> CylindricalIndex::search_nearest(
    std::span<const Vec> points, const LineSegment& query, Real radius,
    std::int64_t limit) const {
    if (!(radius > 0.0))
        throw InvalidArgumentError("CylindricalIndex::search_nearest: radius must be positive");
    if (limit < 1)
        throw InvalidArgumentError("CylindricalIndex::search_nearest: limit must be >= 1");
    const Real gap = hausdorff_distance(line_, query);
    const Real adjusted = radius + gap;
    if (adjusted > max_radius_)
        throw RadiusTooLargeError(
            "CylindricalIndex::search_nearest: adjusted radius " + std::to_string(adjusted) +
            " exceeds indexed max " + std::to_string(max_radius_) +
            "; rebuild the index with a larger Hausdorff slack or use a smaller radius");

    const int num_sections = static_cast<int>(sections_.size());
    std::vector<char> usable(num_sections, 1);
    for (int s = 0; s < num_sections && !line_.degenerate(); ++s) {
        if (sections_[s].empty())
            continue;
        const Real t0 = static_cast<Real>(s) / num_sections;
        const Real t1 = static_cast<Real>(s + 1) / num_sections;
        if (segment_segment_distance(query, line_.subsegment(t0, t1)) > adjusted + radius)
            usable[s] = 0;
    }

    // Merge sections in increasing stored radius. dist(p, query) >= r - gap,
    // so once r - gap exceeds the current limit-th best distance nothing
    // further can qualify.
    using Cursor = std::pair<Real, std::int32_t>; // (entry r, section)
    std::priority_queue<Cursor, std::vector<Cursor>, std::greater<>> merge;
    std::vector<std::size_t> pos(num_sections, 0);
    for (int s = 0; s < num_sections; ++s)
        if (usable[s] && !sections_[s].empty())
            merge.emplace(sections_[s][0].r, s);

    const auto better = [](const std::pair<Real, std::int64_t>& a,
                           const std::pair<Real, std::int64_t>& b) { return a < b; };
    std::priority_queue<std::pair<Real, std::int64_t>, std::vector<std::pair<Real, std::int64_t>>,
                        decltype(better)>
        best(better); // max-heap over (distance, id)

    while (!merge.empty()) {
        const auto [r, s] = merge.top();
        merge.pop();
        if (r > adjusted)
            break;
        if (best.size() == static_cast<std::size_t>(limit) && r - gap > best.top().first)
            break;
        const Entry& entry = sections_[s][pos[s]];
        if (++pos[s] < sections_[s].size())
            merge.emplace(sections_[s][pos[s]].r, s);

        const Real dist = point_segment_distance(points[entry.id], query);
        if (dist > radius)
            continue;
        const std::pair<Real, std::int64_t> hit{dist, entry.id};
        if (best.size() < static_cast<std::size_t>(limit))
            best.push(hit);
        else if (hit < best.top()) {
            best.pop();
            best.push(hit);
        }
    }

    std::vector<std::pair<Real, std::int64_t>> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// RangeIndex

RangeIndex RangeIndex::build(std::vector<Vec> contents, std::vector<Vec> attributes,
                             const RangeIndexConfig& cfg) {
    if (contents.empty())
        throw EmptyDatasetError("RangeIndex::build: no records");
    if (contents.size() != attributes.size())
        throw InvalidArgumentError("RangeIndex::build: contents/attributes size mismatch");

    RangeIndex rix;
    rix.config_ = cfg;
    rix.contents_ = std::move(contents);
    rix.attributes_ = std::move(attributes);

    const int d = static_cast<int>(rix.contents_[0].size());
    const int m = static_cast<int>(rix.attributes_[0].size());
    if (cfg.alpha_override && cfg.beta_override) {
        // Continuous attributes make the computed alpha explode (distinct
        // values can sit arbitrarily close); explicit parameters avoid the
        // quadratic extremes scan entirely.
        FusionParams p;
        p.alpha = *cfg.alpha_override;
        p.beta = *cfg.beta_override;
        p.epsilon_f = cfg.epsilon_f;
        p.delta_max = 0.0;
        p.sigma_min = std::numeric_limits<Real>::infinity();
        p.d = d;
        p.m = m;
        p.validate_basic();
        rix.params_ = p;
    } else {
        const auto ext = estimate_extremes(rix.contents_, rix.attributes_);
        rix.params_ = select_fusion_params(ext.delta_max, ext.sigma_min, d, m, cfg.epsilon_f);
        if (cfg.alpha_override)
            rix.params_.alpha = *cfg.alpha_override;
        if (cfg.beta_override)
            rix.params_.beta = *cfg.beta_override;
        rix.params_.validate_basic();
    }

    rix.fused_.reserve(rix.contents_.size());
    for (std::size_t i = 0; i < rix.contents_.size(); ++i)
        rix.fused_.push_back(fuse(rix.contents_[i], rix.attributes_[i], rix.params_));

    Vec lo = rix.fused_[0], hi = rix.fused_[0];
    for (const Vec& p : rix.fused_) {
        for (std::size_t h = 0; h < p.size(); ++h) {
            lo[h] = std::min(lo[h], p[h]);
            hi[h] = std::max(hi[h], p[h]);
        }
    }
    rix.fused_diameter_ = std::max(euclidean_distance(lo, hi), 1e-12);

    const Real eps_cover =
        cfg.eps_cover > 0.0 ? cfg.eps_cover : 0.05 * rix.fused_diameter_;
    rix.lines_ = sample_range_lines(rix.contents_, rix.attributes_, rix.fused_, eps_cover,
                                    cfg.delta, rix.params_, cfg.radius_k, cfg.max_lines, cfg.seed);
    rix.line_index_ = HierarchicalLineIndex(rix.lines_, cfg.nu);

    // Held-out probe of how much slack real queries consume. Each query
    // widens its cylinder by the line gap twice (once in the query radius,
    // once inside the cylinder search), so the consumed slack is 2*d_H.
    // Every fifth probe uses the full attribute span so whole-range queries
    // are covered too.
    Vec attr_lo = rix.attributes_[0], attr_hi = rix.attributes_[0];
    for (const Vec& a : rix.attributes_) {
        for (int h = 0; h < m; ++h) {
            attr_lo[h] = std::min(attr_lo[h], a[h]);
            attr_hi[h] = std::max(attr_hi[h], a[h]);
        }
    }
    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, rix.contents_.size() - 1);
    std::vector<Real> consumed;
    consumed.reserve(cfg.heldout_queries);
    for (std::size_t i = 0; i < cfg.heldout_queries; ++i) {
        const Vec& q = rix.contents_[pick(rng)];
        Vec l, u;
        if (i % 5 == 0) {
            l = attr_lo;
            u = attr_hi;
        } else if (i % 5 == 1 || i % 5 == 2) {
            // Narrow ranges around data values: the worst case for line
            // coverage, since sampled endpoints concentrate on wide pairs.
            const Vec& centre = rix.attributes_[pick(rng)];
            const Real rel = i % 5 == 1 ? 0.02 : 0.06;
            l.resize(m);
            u.resize(m);
            for (int h = 0; h < m; ++h) {
                const Real margin = rel * (attr_hi[h] - attr_lo[h]);
                l[h] = std::max(attr_lo[h], centre[h] - margin);
                u[h] = std::min(attr_hi[h], centre[h] + margin);
            }
        } else {
            const Vec& a1 = rix.attributes_[pick(rng)];
            const Vec& a2 = rix.attributes_[pick(rng)];
            l.resize(m);
            u.resize(m);
            for (int h = 0; h < m; ++h) {
                l[h] = std::min(a1[h], a2[h]);
                u[h] = std::max(a1[h], a2[h]);
            }
        }
        const LineSegment lq = range_to_line({q, l, u}, rix.params_);
        const std::size_t near = rix.line_index_.find_nearest(rix.lines_, lq, cfg.tau, cfg.kappa,
                                                              cfg.weights, rix.fused_diameter_);
        consumed.push_back(2.0 * hausdorff_distance(lq, rix.lines_[near].segment));
    }
    // The cylinders must support the maximum consumed slack, not a
    // percentile of it: every query beyond the stored radius hard-fails
    // with RadiusTooLargeError. A 25% margin absorbs sampling noise.
    if (!consumed.empty())
        rix.hausdorff_slack_ = 1.25 * *std::max_element(consumed.begin(), consumed.end());

    rix.finalize();
    return rix;
}

void RangeIndex::finalize() {
    cylinders_.clear();
    cylinders_.reserve(lines_.size());
    for (const IndexedLine& line : lines_) {
        const Real total = std::max(line.base_radius + hausdorff_slack_, 1e-12);
        cylinders_.emplace_back(line.segment, fused_, total);
    }
}

RangeIndex RangeIndex::restore(std::vector<Vec> contents, std::vector<Vec> attributes,
                               FusionParams params, RangeIndexConfig cfg,
                               std::vector<IndexedLine> lines, Real hausdorff_slack) {
    RangeIndex rix;
    rix.config_ = cfg;
    rix.params_ = params;
    rix.contents_ = std::move(contents);
    rix.attributes_ = std::move(attributes);
    rix.lines_ = std::move(lines);
    rix.hausdorff_slack_ = hausdorff_slack;
    rix.fused_.reserve(rix.contents_.size());
    for (std::size_t i = 0; i < rix.contents_.size(); ++i)
        rix.fused_.push_back(fuse(rix.contents_[i], rix.attributes_[i], rix.params_));
    Vec lo = rix.fused_[0], hi = rix.fused_[0];
    for (const Vec& p : rix.fused_) {
        for (std::size_t h = 0; h < p.size(); ++h) {
            lo[h] = std::min(lo[h], p[h]);
            hi[h] = std::max(hi[h], p[h]);
        }
    }
    rix.fused_diameter_ = std::max(euclidean_distance(lo, hi), 1e-12);
    rix.line_index_ = HierarchicalLineIndex(rix.lines_, cfg.nu);
    rix.finalize();
    return rix;
}

std::size_t RangeIndex::nearest_line(const LineSegment& query) const {
    return line_index_.find_nearest(lines_, query, config_.tau, config_.kappa, config_.weights,
                                    fused_diameter_);
}

QueryResult RangeIndex::query(const Vec& q, const Vec& l, const Vec& u, std::int64_t k,
                              Real eps) const {
    if (k < 1)
        throw InvalidArgumentError("RangeIndex::query: k must be >= 1");
    if (static_cast<int>(q.size()) != params_.d || static_cast<int>(l.size()) != params_.m ||
        static_cast<int>(u.size()) != params_.m)
        throw InvalidDimensionError("RangeIndex::query: dimension mismatch");

    const LineSegment lq = range_to_line({q, l, u}, params_);
    const std::size_t near = nearest_line(lq);
    const IndexedLine& line = lines_[near];
    const Real gap = hausdorff_distance(lq, line.segment);
    const Real radius = line.base_radius + gap;
    const std::int64_t budget =
        std::max(adjusted_candidate_count(k, eps, gap, line.eta, config_.compensation_c),
                 std::max(k, config_.min_candidates));

    const auto nearest = cylinders_[near].search_nearest(fused_, lq, radius, budget);

    QueryResult result;
    result.candidates_retrieved = static_cast<std::int64_t>(nearest.size());
    if (nearest.empty())
        return result;
    std::vector<std::int64_t> ids;
    ids.reserve(nearest.size());
    for (const auto& [dist, id] : nearest)
        ids.push_back(id);

    std::vector<QueryHit> hits;
    for (std::int64_t id : ids) {
        const Vec& attr = attributes_[id];
        bool inside = true;
        for (std::size_t h = 0; h < attr.size(); ++h) {
            if (attr[h] < l[h] || attr[h] > u[h]) {
                inside = false;
                break;
            }
        }
        if (!inside)
            continue;
        const Real s_v = euclidean_distance(contents_[id], q);
        hits.push_back({id, s_v, 0.0, s_v});
    }
    std::sort(hits.begin(), hits.end(), [](const QueryHit& a, const QueryHit& b) {
        return a.score != b.score ? a.score < b.score : a.id < b.id;
    });
    if (hits.size() > static_cast<std::size_t>(k))
        hits.resize(static_cast<std::size_t>(k));
    result.truncated = hits.size() < static_cast<std::size_t>(k);
    result.hits = std::move(hits);
    return result;
}

} // namespace fusedann
