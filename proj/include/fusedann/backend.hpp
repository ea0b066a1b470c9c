#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fusedann/types.hpp"

namespace fusedann {

struct SearchHit {
    std::int64_t id = -1;
    Real distance = 0.0;
};

enum class BackendKind : std::uint8_t { flat = 0, graph = 1 };

/// Layered proximity-graph build/search knobs.
struct GraphParams {
    int M = 16;
    int ef_construction = 200;
    int ef_search = 64;
    std::uint64_t seed = 0x5eed5eedULL;
};

/// k-nearest-neighbour index over fused vectors. Ids are dense 0..N-1 in
/// insertion order; results come back sorted by (distance, id). Searches on
/// a built backend are read-only and safe to run concurrently.
class Backend {
public:
    virtual ~Backend() = default;
    /// Returns min(k, N) hits. `ef` widens the search beam for graph
    /// backends (ignored by flat); the effective beam is max(ef, k).
    virtual std::vector<SearchHit> search(const Vec& q, std::int64_t k, std::int64_t ef = 0) const = 0;
    virtual std::int64_t size() const = 0;
    virtual int dim() const = 0;
    virtual BackendKind kind() const = 0;
    virtual const std::vector<Vec>& points() const = 0;
};

/// Builds a flat exact scan or a seeded graph index over the points.
std::unique_ptr<Backend> build_backend(std::vector<Vec> points, BackendKind kind,
                                       const GraphParams& params = {});

} // namespace fusedann
