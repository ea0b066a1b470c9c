#pragma once

#include <cstdint>
#include <vector>

#include "fusedann/backend.hpp"

namespace fusedann {

/// Hierarchical navigable small-world graph with deterministic, seeded
/// level assignment: node i's level depends only on (seed, i), so two
/// builds over the same points produce identical graphs.
class HnswBackend final : public Backend {
public:
    HnswBackend(std::vector<Vec> points, const GraphParams& params);

    std::vector<SearchHit> search(const Vec& q, std::int64_t k, std::int64_t ef = 0) const override;
    std::int64_t size() const override { return static_cast<std::int64_t>(points_.size()); }
    int dim() const override { return dim_; }
    BackendKind kind() const override { return BackendKind::graph; }
    const std::vector<Vec>& points() const override { return points_; }

    const GraphParams& params() const { return params_; }
    // Serialization access: per-node levels and adjacency, entry point.
    const std::vector<int>& levels() const { return levels_; }
    const std::vector<std::vector<std::vector<std::int32_t>>>& links() const { return links_; }
    int entry_point() const { return entry_point_; }

    /// Reconstructs a backend from persisted state without rebuilding.
    static std::unique_ptr<HnswBackend> restore(std::vector<Vec> points, GraphParams params,
                                                std::vector<int> levels,
                                                std::vector<std::vector<std::vector<std::int32_t>>> links,
                                                int entry_point);

private:
    HnswBackend() = default;

    int node_level(std::size_t i) const;
    void insert(std::int32_t id);
    std::vector<std::pair<Real, std::int32_t>> search_layer(const Vec& q, std::int32_t entry,
                                                            int layer, std::size_t ef) const;
    std::vector<std::int32_t> select_neighbors(const Vec& base,
                                               std::vector<std::pair<Real, std::int32_t>> candidates,
                                               std::size_t max_m) const;
    std::int32_t greedy_descend(const Vec& q, std::int32_t entry, int from_layer,
                                int to_layer) const;

    std::vector<Vec> points_;
    GraphParams params_{};
    int dim_ = 0;
    double level_mult_ = 0.0;
    std::vector<int> levels_;
    // links_[node][layer] holds the neighbour ids at that layer.
    std::vector<std::vector<std::vector<std::int32_t>>> links_;
    int entry_point_ = -1;
    int max_level_ = -1;
};

} // namespace fusedann
