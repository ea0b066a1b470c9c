#include "fusedann/range_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fusedann {

namespace {

Real clamp01(Real x) { return std::clamp<Real>(x, 0.0, 1.0); }

} // namespace

Vec LineSegment::midpoint() const {
    Vec m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        m[i] = 0.5 * (a[i] + b[i]);
    return m;
}

Vec LineSegment::point_at(Real t) const {
    Vec p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        p[i] = (1.0 - t) * a[i] + t * b[i];
    return p;
}

Vec LineSegment::direction() const {
    if (degenerate())
        throw DegenerateLineError("LineSegment::direction: zero-length segment");
    Vec dir(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        dir[i] = b[i] - a[i];
    const Real len = norm(dir);
    for (Real& x : dir)
        x /= len;
    return dir;
}

LineSegment LineSegment::subsegment(Real t0, Real t1) const {
    return LineSegment{point_at(t0), point_at(t1)};
}

LineSegment range_to_line(const RangeQuery& query, const FusionParams& params) {
    if (query.l.size() != query.u.size())
        throw InvalidDimensionError("range_to_line: bound dimensions differ");
    for (std::size_t i = 0; i < query.l.size(); ++i)
        if (query.l[i] > query.u[i])
            throw InvalidRangeError("range_to_line: requires l <= u component-wise");
    return LineSegment{fuse(query.q, query.l, params), fuse(query.q, query.u, params)};
}

namespace {

// Shared by point_segment_distance and cylindrical_coords; degenerate
// segments project everything onto the single endpoint. Allocation-free:
// this sits on the hot path of every cylinder scan.
CylCoords project_clamped(const Vec& x, const LineSegment& L) {
    const std::size_t dim = L.a.size();
    Real denom = 0.0;
    Real along = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const Real axis = L.b[i] - L.a[i];
        denom += axis * axis;
        along += (x[i] - L.a[i]) * axis;
    }
    CylCoords c;
    if (denom == 0.0) {
        c.t = 0.0;
        c.r = euclidean_distance(x, L.a);
        return c;
    }
    c.t = clamp01(along / denom);
    Real r2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const Real diff = x[i] - ((1.0 - c.t) * L.a[i] + c.t * L.b[i]);
        r2 += diff * diff;
    }
    c.r = std::sqrt(r2);
    return c;
}

} // namespace

Real point_segment_distance(const Vec& x, const LineSegment& L) {
    if (x.size() != L.a.size())
        throw InvalidDimensionError("point_segment_distance: dimension mismatch");
    return project_clamped(x, L).r;
}

CylCoords cylindrical_coords(const Vec& x, const LineSegment& L) {
    if (L.degenerate())
        throw DegenerateLineError("cylindrical_coords: zero-length segment");
    if (x.size() != L.a.size())
        throw InvalidDimensionError("cylindrical_coords: dimension mismatch");
    return project_clamped(x, L);
}

Real segment_segment_distance(const LineSegment& L1, const LineSegment& L2) {
    if (L1.a.size() != L2.a.size())
        throw InvalidDimensionError("segment_segment_distance: dimension mismatch");
    // Minimize ||(a1 + s*u) - (a2 + t*v)||^2 over the unit square, then
    // clamp; the candidate set covers the interior critical point and the
    // four edges.
    const std::size_t dim = L1.a.size();
    Vec u(dim), v(dim), w(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        u[i] = L1.b[i] - L1.a[i];
        v[i] = L2.b[i] - L2.a[i];
        w[i] = L1.a[i] - L2.a[i];
    }
    const Real a = dot(u, u);
    const Real b = dot(u, v);
    const Real c = dot(v, v);
    const Real d = dot(u, w);
    const Real e = dot(v, w);

    const auto eval = [&](Real s, Real t) {
        Real acc = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const Real diff = w[i] + s * u[i] - t * v[i];
            acc += diff * diff;
        }
        return acc;
    };

    Real best = std::numeric_limits<Real>::infinity();
    const Real denom = a * c - b * b;
    if (denom > 0.0) {
        const Real s = clamp01((b * e - c * d) / denom);
        const Real t = clamp01((a * e - b * d) / denom);
        best = std::min(best, eval(s, t));
    }
    // Edge cases: fix one parameter at an endpoint, optimize the other.
    if (a > 0.0) {
        best = std::min(best, eval(clamp01(-d / a), 0.0));        // t = 0
        best = std::min(best, eval(clamp01((b - d) / a), 1.0));   // t = 1
    } else {
        best = std::min(best, eval(0.0, 0.0));
        best = std::min(best, eval(0.0, 1.0));
    }
    if (c > 0.0) {
        best = std::min(best, eval(0.0, clamp01(e / c)));         // s = 0
        best = std::min(best, eval(1.0, clamp01((e + b) / c)));   // s = 1
    } else {
        best = std::min(best, eval(0.0, 0.0));
        best = std::min(best, eval(1.0, 0.0));
    }
    return std::sqrt(best);
}

Real hausdorff_distance(const LineSegment& L1, const LineSegment& L2) {
    if (L1.a.size() != L2.a.size())
        throw InvalidDimensionError("hausdorff_distance: dimension mismatch");
    const Real h12 = std::max(point_segment_distance(L1.a, L2), point_segment_distance(L1.b, L2));
    const Real h21 = std::max(point_segment_distance(L2.a, L1), point_segment_distance(L2.b, L1));
    return std::max(h12, h21);
}

Real line_similarity(const LineSegment& L1, const LineSegment& L2, Real w_d, Real w_p, Real w_l,
                     Real D_max) {
    if (L1.degenerate() || L2.degenerate())
        throw DegenerateLineError("line_similarity: zero-length segment");
    if (w_d < 0.0 || w_p < 0.0 || w_l < 0.0 || std::abs(w_d + w_p + w_l - 1.0) > 1e-9)
        throw InvalidArgumentError("line_similarity: weights must be non-negative and sum to 1");
    if (!(D_max > 0.0))
        throw InvalidArgumentError("line_similarity: D_max must be positive");

    const Vec d1 = L1.direction();
    const Vec d2 = L2.direction();
    const Real direction = std::min<Real>(std::abs(dot(d1, d2)), 1.0);

    const Real mid_dist = euclidean_distance(L1.midpoint(), L2.midpoint());
    const Real position = std::max<Real>(0.0, 1.0 - mid_dist / D_max);

    const Real len1 = L1.length();
    const Real len2 = L2.length();
    const Real length_ratio = std::min(len1 / len2, len2 / len1);

    return w_d * direction + w_p * position + w_l * length_ratio;
}

Real optimal_radius(const RadiusParams& rp, Real beta) {
    if (!(rp.delta > 0.0) || rp.delta >= 2.0)
        throw InvalidArgumentError("optimal_radius: delta must lie in (0, 2)");
    if (rp.n < 1)
        throw InvalidArgumentError("optimal_radius: n must be >= 1");
    if (!std::isfinite(rp.d_k) || !std::isfinite(rp.sigma))
        throw InvalidArgumentError("optimal_radius: d_k and sigma must be finite");
    if (!(beta > 0.0))
        throw InvalidArgumentError("optimal_radius: beta must be positive");
    const Real tail = std::sqrt(-std::log(rp.delta / 2.0) / (2.0 * static_cast<Real>(rp.n)));
    return rp.d_k / beta + tail * rp.sigma;
}

Real local_density(const LineSegment& L, std::span<const Vec> points, Real r) {
    if (L.degenerate())
        throw DegenerateLineError("local_density: zero-length segment");
    if (!(r > 0.0))
        throw InvalidArgumentError("local_density: radius must be positive");
    std::int64_t inside = 0;
    for (const Vec& p : points)
        if (point_segment_distance(p, L) <= r)
            ++inside;
    const Real volume = std::numbers::pi_v<Real> * r * r * L.length();
    return static_cast<Real>(inside) / volume;
}

std::int64_t adjusted_candidate_count(std::int64_t k, Real eps, Real delta_H, Real eta, Real c) {
    if (k < 1)
        throw InvalidArgumentError("adjusted_candidate_count: k must be >= 1");
    if (!(eps > 0.0) || eps >= 1.0)
        throw InvalidArgumentError("adjusted_candidate_count: eps must lie in (0, 1)");
    if (delta_H < 0.0 || eta < 0.0)
        throw InvalidArgumentError("adjusted_candidate_count: delta_H and eta must be >= 0");
    return k + ceil_snapped(c * std::log(1.0 / eps) * delta_H * eta);
}

} // namespace fusedann
