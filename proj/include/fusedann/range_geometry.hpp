#pragma once

#include <cstdint>
#include <span>

#include "fusedann/fusion.hpp"
#include "fusedann/types.hpp"

namespace fusedann {

/// Segment from a (t=0) to b (t=1). a == b is permitted and flagged.
struct LineSegment {
    Vec a;
    Vec b;

    bool degenerate() const { return a == b; }
    Real length() const { return euclidean_distance(a, b); }
    Vec midpoint() const;
    Vec point_at(Real t) const;
    Vec direction() const; // unit vector; throws on degenerate segments
    /// Sub-segment covering parameters [t0, t1] of this segment.
    LineSegment subsegment(Real t0, Real t1) const;
};

/// Content vector with a component-wise attribute interval [l, u].
struct RangeQuery {
    Vec q;
    Vec l;
    Vec u;
};

struct CylCoords {
    Real t = 0.0; // clamped projection parameter in [0, 1]
    Real r = 0.0; // distance to the clamped projection
};

/// Inputs for the cylinder-radius rule: the k-th neighbour content
/// distance, the record count, the spread of those distances and the
/// allowed failure probability.
struct RadiusParams {
    Real d_k = 0.0;
    std::int64_t n = 1;
    Real sigma = 0.0;
    Real delta = 0.05;
};

/// Maps a range query to its carrier segment in the fused space: endpoints
/// are the fusions of q with l and with u, and every f in [l, u] fuses onto
/// the segment at its interpolation parameter.
LineSegment range_to_line(const RangeQuery& query, const FusionParams& params);

/// min over t in [0,1] of ||x - L(t)||, via clamped projection. Degenerate
/// segments reduce to point distance.
Real point_segment_distance(const Vec& x, const LineSegment& L);

/// Exact minimum distance between two segments.
Real segment_segment_distance(const LineSegment& L1, const LineSegment& L2);

/// Exact Hausdorff distance between two segments. Distance-to-segment is
/// convex along a segment, so each directed sup is attained at an endpoint;
/// the four endpoint-to-segment distances decide the value.
Real hausdorff_distance(const LineSegment& L1, const LineSegment& L2);

/// Composite similarity in [0, 1] mixing direction (|cos| of the angle,
/// orientation-free), midpoint proximity (clamped at 0) and length ratio.
/// Weights must be non-negative and sum to 1; segments must be
/// non-degenerate.
Real line_similarity(const LineSegment& L1, const LineSegment& L2, Real w_d, Real w_p, Real w_l,
                     Real D_max);

/// (t, r) of x relative to L; the angular coordinate is not stored since
/// nothing downstream reads it.
CylCoords cylindrical_coords(const Vec& x, const LineSegment& L);

/// r = d_k / beta + sqrt(-ln(delta/2) / (2n)) * sigma.
Real optimal_radius(const RadiusParams& rp, Real beta);

/// Points within distance r of the segment divided by the cylinder volume
/// pi * r^2 * |b - a|.
Real local_density(const LineSegment& L, std::span<const Vec> points, Real r);

/// k' = k + ceil(c * ln(1/eps) * delta_H * eta): extra candidates
/// compensating for approximating a query line by an indexed one.
std::int64_t adjusted_candidate_count(std::int64_t k, Real eps, Real delta_H, Real eta, Real c);

} // namespace fusedann
