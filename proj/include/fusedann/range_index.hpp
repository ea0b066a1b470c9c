#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "fusedann/hybrid_index.hpp"
#include "fusedann/range_geometry.hpp"
#include "fusedann/types.hpp"

namespace fusedann {

/// A sampled query line with its precomputed cylinder radius and the local
/// point density around it, plus the raw (q, l, u) it was sampled from.
struct IndexedLine {
    LineSegment segment;
    Real base_radius = 0.0;
    Real eta = 0.0;
    Vec source_q;
    Vec source_l;
    Vec source_u;
};

struct LineSimWeights {
    Real direction = 0.4;
    Real position = 0.4;
    Real length = 0.2;
};

/// Weighted representative of the query distribution (cluster centroid and
/// its cluster size).
struct QuerySample {
    Vec center;
    std::int64_t weight = 0;
};

struct EndpointPair {
    Vec l;
    Vec u;
};

/// Query/range sample sets approximating the workload distributions:
/// k-means centroids of the content vectors (k = ceil(sqrt(n))) weighted
/// by cluster size, and a per-attribute Gaussian grid of range endpoints
/// centred at mu -+ c*sigma with spread sigma/sqrt(2).
struct SampledDistributions {
    std::vector<QuerySample> query_samples;
    std::vector<EndpointPair> endpoint_pairs;
};

SampledDistributions estimate_distributions(std::span<const Vec> contents,
                                            std::span<const Vec> attrs, std::uint64_t seed,
                                            Real c = 1.0);

/// Two-level lookup for the most similar indexed line: direction cells on
/// the unit sphere at angular resolution nu, then a per-cell kd-tree over
/// midpoints. Degenerate lines live in a dedicated point cell.
class HierarchicalLineIndex {
public:
    HierarchicalLineIndex() = default;
    HierarchicalLineIndex(const std::vector<IndexedLine>& lines, Real nu);

    /// Most similar line by the composite similarity; scans direction
    /// cells near the query direction, widening to every cell when the
    /// neighbourhood yields no candidate. Early-exits above tau.
    /// Degenerate query segments fall back to nearest Hausdorff distance.
    std::size_t find_nearest(const std::vector<IndexedLine>& lines, const LineSegment& query,
                             Real tau, Real kappa, const LineSimWeights& weights, Real d_max) const;

    std::size_t num_cells() const { return cells_.size(); }
    Real resolution() const { return nu_; }

    /// Lines sharing the query's direction cell (self-lookup diagnostics).
    std::vector<std::size_t> cell_lines(const LineSegment& query) const;

private:
    struct KdNode {
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int32_t axis = -1;
        Real split = 0.0;
        std::vector<std::uint32_t> bucket; // leaf payload: line ids
    };
    struct Cell {
        Vec representative; // mean direction (canonical orientation)
        std::vector<std::uint32_t> members;
        std::vector<Vec> midpoints;
        std::vector<KdNode> tree;
    };

    std::vector<std::int32_t> quantize(const Vec& direction) const;
    static Vec canonical_direction(const LineSegment& segment);
    std::int32_t build_tree(Cell& cell, std::vector<std::uint32_t> ids, int depth);
    void radius_query(const Cell& cell, std::int32_t node, const Vec& center, Real radius,
                      std::vector<std::uint32_t>& out) const;

    Real nu_ = 0.0;
    Real quantum_ = 0.0;
    std::map<std::vector<std::int32_t>, std::size_t> cell_of_key_;
    std::vector<Cell> cells_;
    std::vector<std::uint32_t> point_cell_; // degenerate lines
};

/// Per-line cylinder: points within max_radius of the segment, bucketed
/// into ceil(length/max_radius) sections by projection parameter and
/// sorted by radius inside each section for prefix lookups.
class CylindricalIndex {
public:
    struct Entry {
        std::int32_t id = 0;
        Real r = 0.0;
    };

    CylindricalIndex() = default;
    CylindricalIndex(LineSegment line, std::span<const Vec> points, Real max_radius);

    const LineSegment& line() const { return line_; }
    Real max_radius() const { return max_radius_; }
    int num_sections() const { return static_cast<int>(sections_.size()); }
    const std::vector<std::vector<Entry>>& sections() const { return sections_; }
    std::int64_t stored_points() const;

    /// Ids of stored points within radius of the query segment. The probe
    /// widens by the Hausdorff gap between the lines and fails with
    /// RadiusTooLargeError when that exceeds what was indexed.
    std::vector<std::int64_t> search(std::span<const Vec> points, const LineSegment& query,
                                     Real radius) const;

    /// The `limit` stored points nearest to the query segment among those
    /// within `radius` of it, sorted by (distance, id) — identical to
    /// truncating search() output by distance, but scans the r-ordered
    /// sections in merge order and stops once r - gap can no longer beat
    /// the current limit-th best.
    std::vector<std::pair<Real, std::int64_t>> search_nearest(std::span<const Vec> points,
                                                              const LineSegment& query,
                                                              Real radius,
                                                              std::int64_t limit) const;

    static CylindricalIndex from_parts(LineSegment line, Real max_radius,
                                       std::vector<std::vector<Entry>> sections);

private:
    LineSegment line_;
    Real max_radius_ = 0.0;
    std::vector<std::vector<Entry>> sections_;
};

struct RangeIndexConfig {
    /// Coverage target for line sampling (fused-space units); 0 derives a
    /// default from the fused bounding-box diagonal.
    Real eps_cover = 0.0;
    Real delta = 0.05;          // failure probability for the radius rule
    std::int64_t radius_k = 100; // neighbour count behind each line's radius
    Real nu = 0.017453292519943295; // pi/180
    Real tau = 0.95;
    Real kappa = 2.0;
    Real compensation_c = 2.0;
    /// Floor on retrieved candidates, mirroring the graph backend's beam
    /// floor; the density term underestimates badly in high dimensions.
    std::int64_t min_candidates = 64;
    LineSimWeights weights;
    std::size_t max_lines = 10000;
    std::uint64_t seed = 42;
    std::size_t heldout_queries = 200;
    Real epsilon_f = 1.0;
    std::optional<Real> alpha_override;
    std::optional<Real> beta_override;
};

/// Offline: sample representative range lines, attach radii/densities,
/// prune to an eps_cover Hausdorff net (farthest-first), index them by
/// direction, and build one cylindrical index per line with the measured
/// Hausdorff slack added to each radius.
std::vector<IndexedLine> sample_range_lines(std::span<const Vec> contents,
                                            std::span<const Vec> attrs,
                                            std::span<const Vec> fused, Real eps_cover, Real delta,
                                            const FusionParams& params, std::int64_t radius_k,
                                            std::size_t max_lines, std::uint64_t seed);

class RangeIndex {
public:
    static RangeIndex build(std::vector<Vec> contents, std::vector<Vec> attributes,
                            const RangeIndexConfig& cfg = {});

    /// Full range query: map to a line, borrow the nearest indexed line's
    /// cylinder, compensate radius and candidate count for the line gap,
    /// filter exactly by [l, u] in attribute space and rank by content
    /// distance. RadiusTooLargeError propagates when the query needs a
    /// wider cylinder than was indexed.
    QueryResult query(const Vec& q, const Vec& l, const Vec& u, std::int64_t k, Real eps) const;

    const FusionParams& params() const { return params_; }
    const std::vector<IndexedLine>& lines() const { return lines_; }
    const CylindricalIndex& cylinder(std::size_t i) const { return cylinders_[i]; }
    const HierarchicalLineIndex& line_index() const { return line_index_; }
    Real hausdorff_slack() const { return hausdorff_slack_; }
    Real fused_diameter() const { return fused_diameter_; }
    const std::vector<Vec>& fused_points() const { return fused_; }
    const std::vector<Vec>& contents() const { return contents_; }
    const std::vector<Vec>& attributes() const { return attributes_; }
    const RangeIndexConfig& config() const { return config_; }

    /// Index of the line chosen for a query segment.
    std::size_t nearest_line(const LineSegment& query) const;

    static RangeIndex restore(std::vector<Vec> contents, std::vector<Vec> attributes,
                              FusionParams params, RangeIndexConfig cfg,
                              std::vector<IndexedLine> lines, Real hausdorff_slack);

private:
    RangeIndex() = default;
    void finalize();

    RangeIndexConfig config_{};
    FusionParams params_{};
    std::vector<Vec> contents_;
    std::vector<Vec> attributes_;
    std::vector<Vec> fused_;
    std::vector<IndexedLine> lines_;
    std::vector<CylindricalIndex> cylinders_;
    HierarchicalLineIndex line_index_;
    Real hausdorff_slack_ = 0.0;
    Real fused_diameter_ = 1.0;
};

} // namespace fusedann
