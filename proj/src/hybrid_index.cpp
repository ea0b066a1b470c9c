#include "fusedann/hybrid_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusedann {

HybridIndex HybridIndex::build(std::vector<Vec> contents, std::vector<Vec> attributes,
                               const Config& cfg) {
    if (contents.empty())
        throw EmptyDatasetError("HybridIndex::build: no records");
    if (contents.size() != attributes.size())
        throw InvalidArgumentError("HybridIndex::build: contents/attributes size mismatch");

    HybridIndex idx;
    idx.config_ = cfg;
    idx.contents_ = std::move(contents);
    idx.attributes_ = std::move(attributes);

    const int d = static_cast<int>(idx.contents_[0].size());
    const int m = static_cast<int>(idx.attributes_[0].size());
    if (cfg.alpha_override && cfg.beta_override) {
        // Both parameters pinned: the quadratic extremes scan has nothing
        // left to decide.
        idx.params_.alpha = *cfg.alpha_override;
        idx.params_.beta = *cfg.beta_override;
        idx.params_.epsilon_f = cfg.epsilon_f;
        idx.params_.sigma_min = std::numeric_limits<Real>::infinity();
        idx.params_.d = d;
        idx.params_.m = m;
    } else {
        const auto ext = estimate_extremes(idx.contents_, idx.attributes_);
        idx.params_ = select_fusion_params(ext.delta_max, ext.sigma_min, d, m, cfg.epsilon_f);
        if (cfg.alpha_override)
            idx.params_.alpha = *cfg.alpha_override;
        if (cfg.beta_override)
            idx.params_.beta = *cfg.beta_override;
    }
    idx.params_.validate_basic();

    std::vector<Vec> fused;
    fused.reserve(idx.contents_.size());
    idx.class_ids_.reserve(idx.contents_.size());
    for (std::size_t i = 0; i < idx.contents_.size(); ++i) {
        fused.push_back(fuse(idx.contents_[i], idx.attributes_[i], idx.params_));
        idx.class_ids_.push_back(idx.class_table_.intern(idx.attributes_[i]));
    }
    idx.stats_ = ClusterStats::compute(fused, idx.class_ids_);
    idx.backend_ = build_backend(std::move(fused), cfg.backend, cfg.graph);
    return idx;
}

HybridIndex HybridIndex::restore(std::vector<Vec> contents, std::vector<Vec> attributes,
                                 FusionParams params, Config cfg, ClusterStats stats,
                                 std::unique_ptr<Backend> backend) {
    HybridIndex idx;
    idx.contents_ = std::move(contents);
    idx.attributes_ = std::move(attributes);
    idx.params_ = params;
    idx.config_ = cfg;
    idx.stats_ = std::move(stats);
    idx.backend_ = std::move(backend);
    idx.class_ids_.reserve(idx.attributes_.size());
    for (const Vec& a : idx.attributes_)
        idx.class_ids_.push_back(idx.class_table_.intern(a));
    return idx;
}

std::int64_t HybridIndex::candidate_budget(const Vec& attribute, std::int64_t k, Real eps) const {
    if (auto cls = class_table_.find(attribute))
        return candidate_count(k, eps, stats_, *cls);

    // Attribute value unseen at build time: base floor plus the nearest
    // class's statistics as a proxy for the local separation.
    const std::int64_t floor_budget = ceil_snapped(static_cast<Real>(k) * (1.0 - std::log(eps)));
    std::optional<ClassId> nearest;
    Real best = std::numeric_limits<Real>::infinity();
    for (ClassId c = 0; c < class_table_.size(); ++c) {
        const Real d = euclidean_distance(class_table_.value(c), attribute);
        if (d < best) {
            best = d;
            nearest = c;
        }
    }
    std::int64_t proxy = 0;
    if (nearest && !stats_.geometry(*nearest).degenerate)
        proxy = candidate_count(k, eps, stats_, *nearest);
    return std::max(floor_budget, proxy);
}

QueryResult HybridIndex::query(const Vec& content, const Vec& attribute, std::int64_t k, Real eps,
                               bool attr_approx) const {
    if (k < 1)
        throw InvalidArgumentError("HybridIndex::query: k must be >= 1");
    if (static_cast<int>(content.size()) != params_.d ||
        static_cast<int>(attribute.size()) != params_.m)
        throw InvalidDimensionError("HybridIndex::query: dimension mismatch");

    const Vec fused_q = fuse(content, attribute, params_);
    const std::int64_t budget = candidate_budget(attribute, k, eps);
    const std::int64_t ef = std::max<std::int64_t>(budget, 64);
    const auto candidates = backend_->search(fused_q, budget, ef);

    QueryResult result;
    result.candidates_retrieved = static_cast<std::int64_t>(candidates.size());
    std::vector<QueryHit> scored;
    scored.reserve(candidates.size());
    for (const SearchHit& hit : candidates) {
        const Real s_f = euclidean_distance(attributes_[hit.id], attribute);
        if (!attr_approx && s_f != 0.0)
            continue;
        const Real s_v = euclidean_distance(contents_[hit.id], content);
        scored.push_back({hit.id, s_v, s_f, params_.alpha * s_f + params_.beta * s_v});
    }
    std::sort(scored.begin(), scored.end(), [](const QueryHit& a, const QueryHit& b) {
        return a.score != b.score ? a.score < b.score : a.id < b.id;
    });
    if (scored.size() > static_cast<std::size_t>(k))
        scored.resize(static_cast<std::size_t>(k));
    result.truncated = scored.size() < static_cast<std::size_t>(std::min(k, size()));
    result.hits = std::move(scored);
    return result;
}

} // namespace fusedann
