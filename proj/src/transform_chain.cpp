#include "fusedann/transform_chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusedann {

void PriorityOrder::validate(int num_attributes) const {
    if (static_cast<int>(positions.size()) != num_attributes)
        throw InvalidPriorityError("PriorityOrder: expected " + std::to_string(num_attributes) +
                                   " entries, got " + std::to_string(positions.size()));
    std::vector<bool> seen(num_attributes, false);
    for (int a : positions) {
        if (a < 0 || a >= num_attributes || seen[a])
            throw InvalidPriorityError("PriorityOrder: not a permutation of attribute indices");
        seen[a] = true;
    }
}

TransformChain TransformChain::build(std::vector<Record> records, PriorityOrder priority,
                                     const Config& cfg) {
    if (records.empty())
        throw EmptyDatasetError("TransformChain::build: no records");
    const int F = static_cast<int>(records[0].attributes.size());
    priority.validate(F);
    const std::size_t d = records[0].content.size();
    for (const Record& r : records) {
        if (r.content.size() != d || static_cast<int>(r.attributes.size()) != F)
            throw InvalidDimensionError("TransformChain::build: ragged records");
        for (int a = 0; a < F; ++a) {
            if (r.attributes[a].size() != records[0].attributes[a].size())
                throw InvalidDimensionError("TransformChain::build: ragged attribute " +
                                            std::to_string(a));
            if (r.attributes[a].size() > d || r.attributes[a].empty())
                throw InvalidDimensionError("TransformChain::build: attribute dimension must be in [1, d]");
        }
    }

    TransformChain chain;
    chain.config_ = cfg;
    chain.priority_ = std::move(priority);
    chain.records_ = std::move(records);

    chain.snapshots_.resize(1);
    auto& base = chain.snapshots_[0];
    base.reserve(chain.records_.size());
    for (const Record& r : chain.records_)
        base.push_back(r.content);

    chain.rebuild_from(0);
    return chain;
}

void TransformChain::rebuild_from(std::size_t reused_levels) {
    const int F = num_attributes();
    const std::size_t n = records_.size();
    const int d = static_cast<int>(records_[0].content.size());

    levels_.resize(reused_levels);
    snapshots_.resize(reused_levels + 1);

    for (int j = static_cast<int>(reused_levels); j < F; ++j) {
        const int attribute = priority_.positions[F - 1 - j];
        std::vector<Vec> attr_values;
        attr_values.reserve(n);
        for (const Record& r : records_)
            attr_values.push_back(r.attributes[attribute]);
        const int m = static_cast<int>(attr_values[0].size());

        FusionParams params;
        if (config_.alpha_override && config_.beta_override) {
            params.alpha = *config_.alpha_override;
            params.beta = *config_.beta_override;
            params.epsilon_f = config_.epsilon_f;
            params.sigma_min = std::numeric_limits<Real>::infinity();
            params.d = d;
            params.m = m;
        } else {
            const auto ext = estimate_extremes(snapshots_[j], attr_values);
            params = select_fusion_params(ext.delta_max, ext.sigma_min, d, m, config_.epsilon_f);
            if (config_.alpha_override)
                params.alpha = *config_.alpha_override;
            if (config_.beta_override)
                params.beta = *config_.beta_override;
        }
        params.alpha *= config_.alpha_multiplier;
        params.validate_basic();

        std::vector<Vec> next;
        next.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            next.push_back(fuse(snapshots_[j][i], attr_values[i], params));
        levels_.push_back({attribute, params});
        snapshots_.push_back(std::move(next));
    }

    // Per-attribute class tables and sparse combination classes.
    attr_tables_.assign(F, ClassTable{});
    attr_ids_.assign(F, {});
    for (int a = 0; a < F; ++a) {
        attr_ids_[a].reserve(n);
        for (const Record& r : records_)
            attr_ids_[a].push_back(attr_tables_[a].intern(r.attributes[a]));
    }
    combo_index_.clear();
    combo_defs_.clear();
    record_combo_.clear();
    record_combo_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<ClassId> combo(F);
        for (int a = 0; a < F; ++a)
            combo[a] = attr_ids_[a][i];
        record_combo_.push_back(intern_combo(combo));
    }

    stats_ = ClusterStats::compute(snapshots_.back(), record_combo_);
    backend_ = build_backend(snapshots_.back(), config_.backend, config_.graph);
}

ClassId TransformChain::intern_combo(const std::vector<ClassId>& combo) {
    auto [it, inserted] = combo_index_.emplace(combo, static_cast<ClassId>(combo_defs_.size()));
    if (inserted)
        combo_defs_.push_back(combo);
    return it->second;
}

std::optional<ClassId> TransformChain::find_combo(const std::vector<ClassId>& combo) const {
    auto it = combo_index_.find(combo);
    if (it == combo_index_.end())
        return std::nullopt;
    return it->second;
}

std::vector<Real> TransformChain::level_weights() const {
    std::vector<Real> weights(levels_.size());
    Real prefix = 1.0;
    for (std::size_t s = 0; s < levels_.size(); ++s) {
        weights[s] = levels_[s].params.alpha * prefix;
        prefix *= levels_[s].params.beta;
    }
    return weights;
}

Real TransformChain::content_weight() const {
    Real w = 1.0;
    for (const ChainLevel& level : levels_)
        w *= level.params.beta;
    return w;
}

std::int64_t TransformChain::candidate_budget(const std::vector<Vec>& attributes, std::int64_t k,
                                              Real eps) const {
    const int F = num_attributes();
    if (F == 0)
        return k;
    std::vector<ClassId> combo(F);
    bool known = true;
    for (int a = 0; a < F && known; ++a) {
        if (auto id = attr_tables_[a].find(attributes[a]))
            combo[a] = *id;
        else
            known = false;
    }
    if (known) {
        if (auto cid = find_combo(combo))
            return candidate_count_multi(k, eps, stats_, *cid, F);
    }
    // Combination absent at build time: floor budget combined with the
    // nearest stored combination's statistics as a proxy.
    const std::int64_t floor_budget = ceil_snapped(static_cast<Real>(k) * (1.0 - std::log(eps)));
    std::optional<ClassId> nearest;
    Real best = std::numeric_limits<Real>::infinity();
    for (ClassId c = 0; c < combo_defs_.size(); ++c) {
        Real dist_sq = 0.0;
        for (int a = 0; a < F; ++a)
            dist_sq += squared_distance(attr_tables_[a].value(combo_defs_[c][a]), attributes[a]);
        if (dist_sq < best) {
            best = dist_sq;
            nearest = c;
        }
    }
    std::int64_t proxy = 0;
    if (nearest && !stats_.geometry(*nearest).degenerate)
        proxy = candidate_count_multi(k, eps, stats_, *nearest, F);
    return std::max(floor_budget, proxy);
}

QueryResult TransformChain::query(const Vec& content, const std::vector<Vec>& attributes,
                                  std::int64_t k, Real eps, bool attr_approx) const {
    if (k < 1)
        throw InvalidArgumentError("TransformChain::query: k must be >= 1");
    const int F = num_attributes();
    if (static_cast<int>(attributes.size()) != F)
        throw InvalidArgumentError("TransformChain::query: expected " + std::to_string(F) +
                                   " attributes, got " + std::to_string(attributes.size()));
    if (records_.empty() || content.size() != records_[0].content.size())
        throw InvalidDimensionError("TransformChain::query: content dimension mismatch");

    Vec fused_q = content;
    for (const ChainLevel& level : levels_)
        fused_q = fuse(fused_q, attributes[level.attribute], level.params);

    const std::int64_t budget = candidate_budget(attributes, k, eps);
    const std::int64_t ef = std::max<std::int64_t>(budget, 64);
    const auto candidates = backend_->search(fused_q, budget, ef);

    const std::vector<Real> weights = level_weights();
    const Real w_content = content_weight();

    QueryResult result;
    result.candidates_retrieved = static_cast<std::int64_t>(candidates.size());
    std::vector<QueryHit> scored;
    scored.reserve(candidates.size());
    for (const SearchHit& hit : candidates) {
        const Record& rec = records_[hit.id];
        Real attr_term = 0.0;
        Real attr_dist_total = 0.0;
        bool exact = true;
        for (std::size_t s = 0; s < levels_.size(); ++s) {
            const int a = levels_[s].attribute;
            const Real s_f = euclidean_distance(rec.attributes[a], attributes[a]);
            attr_term += weights[s] * s_f;
            attr_dist_total += s_f;
            if (s_f != 0.0)
                exact = false;
        }
        if (!attr_approx && !exact)
            continue;
        const Real s_v = euclidean_distance(rec.content, content);
        scored.push_back({hit.id, s_v, attr_dist_total, attr_term + w_content * s_v});
    }
    std::sort(scored.begin(), scored.end(), [](const QueryHit& a, const QueryHit& b) {
        return a.score != b.score ? a.score < b.score : a.id < b.id;
    });
    if (scored.size() > static_cast<std::size_t>(k))
        scored.resize(static_cast<std::size_t>(k));
    result.truncated =
        scored.size() < static_cast<std::size_t>(std::min<std::int64_t>(k, records_.size()));
    result.hits = std::move(scored);
    return result;
}

TransformChain::MonotoneReport TransformChain::verify_monotone_priority(
    const QueryResult& result, const std::vector<Vec>& query_attributes) const {
    if (result.hits.empty())
        throw InvalidArgumentError("verify_monotone_priority: empty result set");
    const int F = num_attributes();
    MonotoneReport report;
    report.variances.reserve(F);
    const Real k = static_cast<Real>(result.hits.size());
    for (int rank = 0; rank < F; ++rank) {
        const int a = priority_.positions[rank];
        Real mean = 0.0;
        std::vector<Real> dists;
        dists.reserve(result.hits.size());
        for (const QueryHit& hit : result.hits) {
            const Real s = euclidean_distance(records_[hit.id].attributes[a], query_attributes[a]);
            dists.push_back(s);
            mean += s;
        }
        mean /= k;
        Real var = 0.0;
        for (Real s : dists)
            var += (s - mean) * (s - mean);
        report.variances.push_back(var / k);
    }
    for (int rank = 0; rank + 1 < F; ++rank) {
        const Real tol = 1e-9 * std::max<Real>(1.0, report.variances[rank + 1]);
        if (report.variances[rank] > report.variances[rank + 1] + tol) {
            report.monotone = false;
            break;
        }
    }
    return report;
}

TransformChain TransformChain::with_added_attribute(std::vector<Vec> values, int position) const {
    const int F = num_attributes();
    if (position < 1 || position > F + 1)
        throw InvalidPriorityError("with_added_attribute: position must be in [1, F+1]");
    if (values.size() != records_.size())
        throw InvalidArgumentError("with_added_attribute: one value per record required");
    const std::size_t m_new = values.empty() ? 0 : values[0].size();
    for (const Vec& v : values)
        if (v.size() != m_new || v.empty() || v.size() > records_[0].content.size())
            throw InvalidDimensionError("with_added_attribute: bad attribute dimensions");

    TransformChain next;
    next.config_ = config_;
    next.records_ = records_;
    for (std::size_t i = 0; i < next.records_.size(); ++i)
        next.records_[i].attributes.push_back(std::move(values[i]));

    // New attribute index is F; old ranks at or below `position` shift down.
    next.priority_.positions.reserve(F + 1);
    for (int rank = 0; rank < position - 1; ++rank)
        next.priority_.positions.push_back(priority_.positions[rank]);
    next.priority_.positions.push_back(F);
    for (int rank = position - 1; rank < F; ++rank)
        next.priority_.positions.push_back(priority_.positions[rank]);

    // Levels applying ranks below the insertion point are untouched.
    const std::size_t reused = static_cast<std::size_t>(F + 1 - position);
    next.levels_.assign(levels_.begin(), levels_.begin() + reused);
    next.snapshots_.assign(snapshots_.begin(), snapshots_.begin() + reused + 1);
    next.rebuild_from(reused);
    return next;
}

TransformChain TransformChain::restore(std::vector<Record> records, PriorityOrder priority,
                                       std::vector<ChainLevel> levels, Config cfg,
                                       ClusterStats stats, std::unique_ptr<Backend> backend) {
    TransformChain chain;
    chain.config_ = cfg;
    chain.priority_ = std::move(priority);
    chain.records_ = std::move(records);
    chain.levels_ = std::move(levels);
    chain.stats_ = std::move(stats);
    chain.backend_ = std::move(backend);

    const int F = chain.num_attributes();
    const std::size_t n = chain.records_.size();
    chain.snapshots_.resize(1);
    chain.snapshots_[0].reserve(n);
    for (const Record& r : chain.records_)
        chain.snapshots_[0].push_back(r.content);
    for (const ChainLevel& level : chain.levels_) {
        std::vector<Vec> next;
        next.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            next.push_back(
                fuse(chain.snapshots_.back()[i], chain.records_[i].attributes[level.attribute],
                     level.params));
        chain.snapshots_.push_back(std::move(next));
    }

    chain.attr_tables_.assign(F, ClassTable{});
    chain.attr_ids_.assign(F, {});
    for (int a = 0; a < F; ++a) {
        chain.attr_ids_[a].reserve(n);
        for (const Record& r : chain.records_)
            chain.attr_ids_[a].push_back(chain.attr_tables_[a].intern(r.attributes[a]));
    }
    chain.record_combo_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<ClassId> combo(F);
        for (int a = 0; a < F; ++a)
            combo[a] = chain.attr_ids_[a][i];
        chain.record_combo_.push_back(chain.intern_combo(combo));
    }
    return chain;
}

TransformChain TransformChain::with_priority(PriorityOrder new_priority,
                                             UpdateReport* report) const {
    const int F = num_attributes();
    new_priority.validate(F);

    int tail = 0;
    while (tail < F &&
           priority_.positions[F - 1 - tail] == new_priority.positions[F - 1 - tail])
        ++tail;
    const int recompute = F - tail; // ranks 1..j-1 in the divergence formula

    if (report)
        report->recomputed_levels = recompute;

    TransformChain next;
    next.config_ = config_;
    next.records_ = records_;
    next.priority_ = std::move(new_priority);
    next.levels_.assign(levels_.begin(), levels_.begin() + tail);
    next.snapshots_.assign(snapshots_.begin(), snapshots_.begin() + tail + 1);
    next.rebuild_from(static_cast<std::size_t>(tail));
    return next;
}

} // namespace fusedann
