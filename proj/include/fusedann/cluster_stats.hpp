#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fusedann/types.hpp"

namespace fusedann {

using ClassId = std::uint32_t;

/// Interning table mapping exact attribute values to dense class ids.
/// Identity is bitwise equality of the raw vector bytes; no tolerance.
class ClassTable {
public:
    ClassId intern(const Vec& value);
    std::optional<ClassId> find(const Vec& value) const;
    const Vec& value(ClassId id) const { return values_.at(id); }
    std::size_t size() const { return values_.size(); }
    const std::vector<Vec>& values() const { return values_; }

private:
    std::unordered_map<std::string, ClassId> index_;
    std::vector<Vec> values_;
};

/// Per-class geometry in the fused space. gamma is +infinity for classes
/// where the candidate-count formula branches away before reading it
/// (singletons and zero-radius classes).
struct ClassGeometry {
    Real radius = 0.0;
    std::int64_t count = 0;
    Vec centroid;
    Real gamma = 0.0;
    bool degenerate = false; // count == 1 or radius == 0
};

/// Fused-space statistics per attribute class: enclosing radius around the
/// class centroid, exact minimum cross-class distances, and the separation
/// metric gamma = min_b d_min(a,b)/R_a - 1.
class ClusterStats {
public:
    /// Exhaustive computation over aligned fused points and class ids.
    /// Class ids must be dense (0..num_classes-1).
    static ClusterStats compute(std::span<const Vec> fused, std::span<const ClassId> classes);

    std::int64_t total() const { return total_; }
    std::size_t num_classes() const { return per_class_.size(); }
    const ClassGeometry& geometry(ClassId a) const;
    Real min_cross_distance(ClassId a, ClassId b) const;
    const std::vector<ClassGeometry>& all() const { return per_class_; }

    /// Serialization hooks used by the index file.
    const std::vector<Real>& cross_matrix() const { return d_min_; }
    static ClusterStats from_parts(std::vector<ClassGeometry> per_class, std::vector<Real> d_min,
                                   std::int64_t total);

private:
    std::vector<ClassGeometry> per_class_;
    std::vector<Real> d_min_; // dense num_classes x num_classes, +inf diagonal
    std::int64_t total_ = 0;
};

/// Candidates to retrieve so the true top-k of class `a` survives with
/// probability at least 1 - eps. Degenerate classes need only min(k, N_a);
/// otherwise ceil(k * (1 + ln(1/eps)/gamma^2 * (N-N_a)/N_a)).
std::int64_t candidate_count(std::int64_t k, Real eps, const ClusterStats& stats, ClassId a);

/// Multi-attribute variant: the separation term is divided by gamma^2 * F,
/// reflecting the compounding effect of F filters. With F=1 it reduces to
/// candidate_count exactly.
std::int64_t candidate_count_multi(std::int64_t k, Real eps, const ClusterStats& stats, ClassId combo,
                                   int F);

/// Probability-weighted mean of candidate_count over classes. This is the
/// exact sum; when every class is separated well enough that
/// gamma >= sqrt(ln(N)/eps), it approaches
/// k * (1 + sum_a P(a) * min(eps/N_a, (N-N_a)/N_a)).
Real expected_candidate_count(std::int64_t k, Real eps, const ClusterStats& stats,
                              const std::map<ClassId, Real>& class_probs);

} // namespace fusedann
