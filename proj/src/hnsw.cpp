#include "fusedann/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

namespace fusedann {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Min-heap entries ordered by (distance, id) for reproducible traversal.
struct HeapLess {
    bool operator()(const std::pair<Real, std::int32_t>& a,
                    const std::pair<Real, std::int32_t>& b) const {
        return a > b;
    }
};

} // namespace

HnswBackend::HnswBackend(std::vector<Vec> points, const GraphParams& params)
    : points_(std::move(points)), params_(params) {
    if (points_.empty())
        throw EmptyDatasetError("HnswBackend: no points");
    dim_ = static_cast<int>(points_[0].size());
    for (const Vec& p : points_)
        if (static_cast<int>(p.size()) != dim_)
            throw InvalidDimensionError("HnswBackend: inconsistent dimensions");
    if (params_.M < 2)
        throw InvalidArgumentError("HnswBackend: M must be >= 2");
    level_mult_ = 1.0 / std::log(static_cast<double>(params_.M));

    const std::size_t n = points_.size();
    levels_.resize(n);
    links_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        levels_[i] = node_level(i);
        links_[i].assign(levels_[i] + 1, {});
    }
    for (std::size_t i = 0; i < n; ++i)
        insert(static_cast<std::int32_t>(i));
}

int HnswBackend::node_level(std::size_t i) const {
    const std::uint64_t h = splitmix64(params_.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
    // Map to (0, 1]; 0 is excluded so log stays finite.
    const double u = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
    return static_cast<int>(-std::log(u) * level_mult_);
}

std::int32_t HnswBackend::greedy_descend(const Vec& q, std::int32_t entry, int from_layer,
                                         int to_layer) const {
    std::int32_t cur = entry;
    Real cur_dist = euclidean_distance(points_[cur], q);
    for (int layer = from_layer; layer > to_layer; --layer) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::int32_t nb : links_[cur][layer]) {
                const Real d = euclidean_distance(points_[nb], q);
                if (d < cur_dist || (d == cur_dist && nb < cur)) {
                    cur_dist = d;
                    cur = nb;
                    changed = true;
                }
            }
        }
    }
    return cur;
}

std::vector<std::pair<Real, std::int32_t>> HnswBackend::search_layer(const Vec& q,
                                                                     std::int32_t entry, int layer,
                                                                     std::size_t ef) const {
    std::priority_queue<std::pair<Real, std::int32_t>, std::vector<std::pair<Real, std::int32_t>>,
                        HeapLess>
        candidates;
    // Max-heap of the current best ef results (worst on top).
    std::priority_queue<std::pair<Real, std::int32_t>> best;
    std::unordered_set<std::int32_t> visited;

    const Real d0 = euclidean_distance(points_[entry], q);
    candidates.emplace(d0, entry);
    best.emplace(d0, entry);
    visited.insert(entry);

    while (!candidates.empty()) {
        auto [dist, node] = candidates.top();
        if (dist > best.top().first && best.size() >= ef)
            break;
        candidates.pop();
        for (std::int32_t nb : links_[node][layer]) {
            if (!visited.insert(nb).second)
                continue;
            const Real d = euclidean_distance(points_[nb], q);
            if (best.size() < ef || d < best.top().first) {
                candidates.emplace(d, nb);
                best.emplace(d, nb);
                if (best.size() > ef)
                    best.pop();
            }
        }
    }

    std::vector<std::pair<Real, std::int32_t>> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::int32_t> HnswBackend::select_neighbors(
    const Vec& base, std::vector<std::pair<Real, std::int32_t>> candidates,
    std::size_t max_m) const {
    (void)base;
    std::sort(candidates.begin(), candidates.end());
    // Relative-neighbourhood pruning: keep a candidate only if it is closer
    // to the base than to every already-kept neighbour.
    std::vector<std::int32_t> kept;
    for (const auto& [dist, id] : candidates) {
        if (kept.size() >= max_m)
            break;
        bool dominated = false;
        for (std::int32_t other : kept) {
            if (euclidean_distance(points_[id], points_[other]) < dist) {
                dominated = true;
                break;
            }
        }
        if (!dominated)
            kept.push_back(id);
    }
    // Backfill with nearest remaining candidates if pruning was too eager.
    if (kept.size() < max_m) {
        for (const auto& [dist, id] : candidates) {
            if (kept.size() >= max_m)
                break;
            if (std::find(kept.begin(), kept.end(), id) == kept.end())
                kept.push_back(id);
        }
    }
    return kept;
}

void HnswBackend::insert(std::int32_t id) {
    const int level = levels_[id];
    if (entry_point_ < 0) {
        entry_point_ = id;
        max_level_ = level;
        return;
    }

    const Vec& q = points_[id];
    std::int32_t cur = entry_point_;
    if (max_level_ > level)
        cur = greedy_descend(q, cur, max_level_, level);

    const std::size_t max_m0 = static_cast<std::size_t>(2 * params_.M);
    const std::size_t max_m = static_cast<std::size_t>(params_.M);
    for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
        auto found = search_layer(q, cur, layer, static_cast<std::size_t>(params_.ef_construction));
        cur = found.front().second;
        const std::size_t cap = layer == 0 ? max_m0 : max_m;
        auto neighbors = select_neighbors(q, found, max_m);
        links_[id][layer] = neighbors;
        for (std::int32_t nb : neighbors) {
            auto& back = links_[nb][layer];
            back.push_back(id);
            if (back.size() > cap) {
                std::vector<std::pair<Real, std::int32_t>> cands;
                cands.reserve(back.size());
                for (std::int32_t x : back)
                    cands.emplace_back(euclidean_distance(points_[x], points_[nb]), x);
                back = select_neighbors(points_[nb], std::move(cands), cap);
            }
        }
    }

    if (level > max_level_) {
        max_level_ = level;
        entry_point_ = id;
    }
}

std::vector<SearchHit> HnswBackend::search(const Vec& q, std::int64_t k, std::int64_t ef) const {
    if (k < 1)
        throw InvalidArgumentError("HnswBackend::search: k must be >= 1");
    if (static_cast<int>(q.size()) != dim_)
        throw InvalidDimensionError("HnswBackend::search: query dimension mismatch");
    const std::size_t beam = static_cast<std::size_t>(
        std::max<std::int64_t>({k, ef, params_.ef_search}));
    std::int32_t entry = greedy_descend(q, entry_point_, max_level_, 0);
    auto found = search_layer(q, entry, 0, beam);

    const std::size_t want =
        std::min<std::size_t>(static_cast<std::size_t>(k), points_.size());
    if (found.size() < want) {
        // The beam exhausted a graph component smaller than k (mass
        // duplicates can starve nodes of inbound edges). Top up with an
        // exact pass so min(k, N) hits always come back.
        std::vector<char> seen(points_.size(), 0);
        for (const auto& [dist, id] : found)
            seen[id] = 1;
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (!seen[i])
                found.emplace_back(euclidean_distance(points_[i], q),
                                   static_cast<std::int32_t>(i));
        std::sort(found.begin(), found.end());
    }

    std::vector<SearchHit> hits;
    hits.reserve(want);
    for (const auto& [dist, id] : found) {
        if (hits.size() == want)
            break;
        hits.push_back({id, dist});
    }
    return hits;
}

std::unique_ptr<HnswBackend> HnswBackend::restore(
    std::vector<Vec> points, GraphParams params, std::vector<int> levels,
    std::vector<std::vector<std::vector<std::int32_t>>> links, int entry_point) {
    std::unique_ptr<HnswBackend> b(new HnswBackend());
    b->points_ = std::move(points);
    b->params_ = params;
    b->dim_ = b->points_.empty() ? 0 : static_cast<int>(b->points_[0].size());
    b->level_mult_ = 1.0 / std::log(static_cast<double>(params.M));
    b->levels_ = std::move(levels);
    b->links_ = std::move(links);
    b->entry_point_ = entry_point;
    b->max_level_ = b->levels_.empty() ? -1 : b->levels_[entry_point];
    return b;
}

} // namespace fusedann
