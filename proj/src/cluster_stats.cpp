#include "fusedann/cluster_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace fusedann {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

std::string byte_key(const Vec& v) {
    std::string key(v.size() * sizeof(Real), '\0');
    if (!v.empty())
        std::memcpy(key.data(), v.data(), key.size());
    return key;
}

} // namespace

ClassId ClassTable::intern(const Vec& value) {
    auto [it, inserted] = index_.emplace(byte_key(value), static_cast<ClassId>(values_.size()));
    if (inserted)
        values_.push_back(value);
    return it->second;
}

std::optional<ClassId> ClassTable::find(const Vec& value) const {
    auto it = index_.find(byte_key(value));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

ClusterStats ClusterStats::compute(std::span<const Vec> fused, std::span<const ClassId> classes) {
    if (fused.empty())
        throw EmptyDatasetError("ClusterStats: empty dataset");
    if (fused.size() != classes.size())
        throw InvalidArgumentError("ClusterStats: points/classes size mismatch");

    ClassId num_classes = 0;
    for (ClassId c : classes)
        num_classes = std::max(num_classes, static_cast<ClassId>(c + 1));

    ClusterStats s;
    s.total_ = static_cast<std::int64_t>(fused.size());
    s.per_class_.assign(num_classes, ClassGeometry{});
    const std::size_t dim = fused[0].size();

    for (std::size_t i = 0; i < fused.size(); ++i) {
        auto& g = s.per_class_[classes[i]];
        if (g.centroid.empty())
            g.centroid.assign(dim, 0.0);
        for (std::size_t h = 0; h < dim; ++h)
            g.centroid[h] += fused[i][h];
        ++g.count;
    }
    for (auto& g : s.per_class_) {
        if (g.count == 0)
            throw InvalidArgumentError("ClusterStats: class ids must be dense");
        for (Real& x : g.centroid)
            x /= static_cast<Real>(g.count);
    }

    // Enclosing radius approximated as max distance to the class centroid.
    for (std::size_t i = 0; i < fused.size(); ++i) {
        auto& g = s.per_class_[classes[i]];
        g.radius = std::max(g.radius, euclidean_distance(fused[i], g.centroid));
    }

    // Exact minimum cross-class pairwise distances.
    std::vector<Real> min_sq(static_cast<std::size_t>(num_classes) * num_classes, kInf);
    for (std::size_t i = 0; i < fused.size(); ++i) {
        for (std::size_t j = i + 1; j < fused.size(); ++j) {
            if (classes[i] == classes[j])
                continue;
            const Real d2 = squared_distance(fused[i], fused[j]);
            Real& slot = min_sq[static_cast<std::size_t>(classes[i]) * num_classes + classes[j]];
            slot = std::min(slot, d2);
        }
    }
    s.d_min_.assign(min_sq.size(), kInf);
    for (ClassId a = 0; a < num_classes; ++a) {
        for (ClassId b = 0; b < num_classes; ++b) {
            if (a == b)
                continue;
            const Real best = std::min(min_sq[static_cast<std::size_t>(a) * num_classes + b],
                                       min_sq[static_cast<std::size_t>(b) * num_classes + a]);
            s.d_min_[static_cast<std::size_t>(a) * num_classes + b] =
                std::isfinite(best) ? std::sqrt(best) : kInf;
        }
    }

    for (ClassId a = 0; a < num_classes; ++a) {
        auto& g = s.per_class_[a];
        g.degenerate = (g.count == 1 || g.radius == 0.0);
        if (g.degenerate) {
            g.gamma = kInf;
            continue;
        }
        Real min_cross = kInf;
        for (ClassId b = 0; b < num_classes; ++b)
            if (b != a)
                min_cross =
                    std::min(min_cross, s.d_min_[static_cast<std::size_t>(a) * num_classes + b]);
        g.gamma = (min_cross == kInf) ? kInf : min_cross / g.radius - 1.0;
    }
    return s;
}

ClusterStats ClusterStats::from_parts(std::vector<ClassGeometry> per_class, std::vector<Real> d_min,
                                      std::int64_t total) {
    ClusterStats s;
    s.per_class_ = std::move(per_class);
    s.d_min_ = std::move(d_min);
    s.total_ = total;
    return s;
}

const ClassGeometry& ClusterStats::geometry(ClassId a) const {
    if (a >= per_class_.size())
        throw UnknownAttributeError("ClusterStats: unknown class " + std::to_string(a));
    return per_class_[a];
}

Real ClusterStats::min_cross_distance(ClassId a, ClassId b) const {
    if (a >= per_class_.size() || b >= per_class_.size())
        throw UnknownAttributeError("ClusterStats: unknown class pair");
    return d_min_[a * per_class_.size() + b];
}

std::int64_t candidate_count(std::int64_t k, Real eps, const ClusterStats& stats, ClassId a) {
    return candidate_count_multi(k, eps, stats, a, 1);
}

std::int64_t candidate_count_multi(std::int64_t k, Real eps, const ClusterStats& stats,
                                   ClassId combo, int F) {
    if (k < 1)
        throw InvalidArgumentError("candidate_count: k must be >= 1");
    if (!(eps > 0.0) || eps > 1.0)
        throw InvalidArgumentError("candidate_count: eps must lie in (0, 1]");
    if (F < 1)
        throw InvalidArgumentError("candidate_count: F must be >= 1");
    const ClassGeometry& g = stats.geometry(combo);
    const std::int64_t floor_count = std::min<std::int64_t>(k, g.count);
    if (g.degenerate)
        return floor_count;
    const Real n_total = static_cast<Real>(stats.total());
    const Real n_a = static_cast<Real>(g.count);
    const Real log_term = -std::log(eps);
    const Real gamma2 = g.gamma * g.gamma;
    Real inflation = 0.0;
    if (std::isfinite(gamma2) && gamma2 > 0.0)
        inflation = log_term / (gamma2 * static_cast<Real>(F)) * ((n_total - n_a) / n_a);
    const std::int64_t out = ceil_snapped(static_cast<Real>(k) * (1.0 + inflation));
    return std::max(out, floor_count);
}

Real expected_candidate_count(std::int64_t k, Real eps, const ClusterStats& stats,
                              const std::map<ClassId, Real>& class_probs) {
    Real mass = 0.0;
    for (const auto& [cls, p] : class_probs)
        mass += p;
    if (std::abs(mass - 1.0) > 1e-9)
        throw InvalidArgumentError("expected_candidate_count: probabilities must sum to 1");
    Real acc = 0.0;
    for (const auto& [cls, p] : class_probs)
        acc += p * static_cast<Real>(candidate_count(k, eps, stats, cls));
    return acc;
}

} // namespace fusedann
