#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "fusedann/backend.hpp"
#include "fusedann/cluster_stats.hpp"
#include "fusedann/fusion.hpp"
#include "fusedann/hybrid_index.hpp"
#include "fusedann/types.hpp"

namespace fusedann {

/// positions[i] is the attribute index holding priority rank i (0 = highest).
/// Transformations run in reverse rank order, so the highest-priority
/// attribute is applied last and dominates distances in the final space.
struct PriorityOrder {
    std::vector<int> positions;

    void validate(int num_attributes) const;
};

struct ChainLevel {
    int attribute = 0; // attribute index applied at this level
    FusionParams params{};
};

/// Recursive multi-attribute fusion. Level j's parameters are derived from
/// the extremes of the level j-1 space; per-level snapshots are kept so
/// priority updates can reuse the untouched prefix of the pipeline.
/// Chains are immutable: updates return a new chain value.
class TransformChain {
public:
    struct Config {
        Real epsilon_f = 1.0;
        BackendKind backend = BackendKind::flat;
        GraphParams graph;
        std::optional<Real> alpha_override;
        std::optional<Real> beta_override;
        /// Scales every level's alpha after selection; raise it when
        /// cross-content match ordering matters more than tight packing.
        Real alpha_multiplier = 1.0;
    };

    static TransformChain build(std::vector<Record> records, PriorityOrder priority,
                                const Config& cfg);

    QueryResult query(const Vec& content, const std::vector<Vec>& attributes, std::int64_t k,
                      Real eps, bool attr_approx) const;

    struct MonotoneReport {
        bool monotone = true;
        std::vector<Real> variances; // one per priority rank, highest first
    };
    /// Checks that attribute-distance variance is non-decreasing down the
    /// priority order for a result set, within a 1e-9 slack.
    MonotoneReport verify_monotone_priority(const QueryResult& result,
                                            const std::vector<Vec>& query_attributes) const;

    /// Adds an attribute (one value per record) at 1-based priority
    /// position `position` in the resulting order; 1 = highest (a single
    /// extra level), F+1 = lowest (full rebuild with the extended order).
    TransformChain with_added_attribute(std::vector<Vec> values, int position) const;

    struct UpdateReport {
        int recomputed_levels = 0;
    };
    /// Re-prioritizes the chain, recomputing only the levels before the
    /// divergence point; the result is bit-identical to a fresh build.
    TransformChain with_priority(PriorityOrder new_priority, UpdateReport* report = nullptr) const;

    int num_attributes() const { return static_cast<int>(priority_.positions.size()); }
    const PriorityOrder& priority() const { return priority_; }
    const std::vector<ChainLevel>& levels() const { return levels_; }
    const std::vector<Vec>& fused() const { return snapshots_.back(); }
    const std::vector<Record>& records() const { return records_; }
    const ClusterStats& stats() const { return stats_; }
    const Backend& backend() const { return *backend_; }
    const Config& config() const { return config_; }

    /// Effective re-rank weight of each level (application order) and of
    /// the content term: w_level = alpha_level * prod(beta of earlier
    /// levels), w_content = prod(all betas).
    std::vector<Real> level_weights() const;
    Real content_weight() const;

    std::int64_t candidate_budget(const std::vector<Vec>& attributes, std::int64_t k,
                                  Real eps) const;

    /// Reassembles a chain from persisted parts; snapshots are re-derived
    /// by replaying the stored levels over the record contents.
    static TransformChain restore(std::vector<Record> records, PriorityOrder priority,
                                  std::vector<ChainLevel> levels, Config cfg, ClusterStats stats,
                                  std::unique_ptr<Backend> backend);

private:
    TransformChain() = default;

    /// Builds levels [reused..F) on top of the kept prefix, then combos,
    /// stats and the backend. `records_`, `config_`, `priority_` and the
    /// reused prefix of `levels_`/`snapshots_` must already be in place.
    void rebuild_from(std::size_t reused_levels);
    ClassId intern_combo(const std::vector<ClassId>& combo);
    std::optional<ClassId> find_combo(const std::vector<ClassId>& combo) const;

    Config config_{};
    PriorityOrder priority_{};
    std::vector<ChainLevel> levels_;           // application order
    std::vector<std::vector<Vec>> snapshots_;  // snapshots_[j]: after j levels
    std::vector<Record> records_;
    std::vector<ClassTable> attr_tables_;          // per attribute index
    std::vector<std::vector<ClassId>> attr_ids_;   // [attribute][record]
    std::map<std::vector<ClassId>, ClassId> combo_index_;
    std::vector<std::vector<ClassId>> combo_defs_;
    std::vector<ClassId> record_combo_;
    ClusterStats stats_;
    std::unique_ptr<Backend> backend_;
};

} // namespace fusedann
