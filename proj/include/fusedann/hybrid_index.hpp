#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fusedann/backend.hpp"
#include "fusedann/cluster_stats.hpp"
#include "fusedann/fusion.hpp"
#include "fusedann/types.hpp"

namespace fusedann {

struct QueryHit {
    std::int64_t id = -1;
    Real content_distance = 0.0;
    Real attribute_distance = 0.0;
    Real score = 0.0;
};

/// Hits sorted ascending by (score, id), at most k of them. `truncated` is
/// set when exact filtering left fewer than k survivors.
struct QueryResult {
    std::vector<QueryHit> hits;
    bool truncated = false;
    std::int64_t candidates_retrieved = 0;
};

/// Single-attribute engine: fuse every record offline, index the fused
/// points, then answer queries by fusing the query, pulling a
/// statistics-sized candidate set and re-ranking by alpha*s_f + beta*s_v.
class HybridIndex {
public:
    struct Config {
        Real epsilon_f = 1.0;
        BackendKind backend = BackendKind::flat;
        GraphParams graph;
        std::optional<Real> alpha_override;
        std::optional<Real> beta_override;
    };

    static HybridIndex build(std::vector<Vec> contents, std::vector<Vec> attributes,
                             const Config& cfg);

    /// attr_approx=false keeps only exact attribute matches; an unknown
    /// attribute then yields an empty result. attr_approx=true keeps all
    /// candidates and lets the combined score arbitrate.
    QueryResult query(const Vec& content, const Vec& attribute, std::int64_t k, Real eps,
                      bool attr_approx) const;

    const FusionParams& params() const { return params_; }
    const ClusterStats& stats() const { return stats_; }
    const ClassTable& classes() const { return class_table_; }
    const Backend& backend() const { return *backend_; }
    std::int64_t size() const { return static_cast<std::int64_t>(contents_.size()); }
    const std::vector<Vec>& contents() const { return contents_; }
    const std::vector<Vec>& attributes() const { return attributes_; }
    const std::vector<ClassId>& class_ids() const { return class_ids_; }
    const Config& config() const { return config_; }

    /// Candidate count used for a query attribute; unknown classes fall
    /// back to ceil(k*(1+ln(1/eps))) combined with the nearest class's
    /// statistics as a proxy.
    std::int64_t candidate_budget(const Vec& attribute, std::int64_t k, Real eps) const;

    /// Reassembles an index from persisted parts.
    static HybridIndex restore(std::vector<Vec> contents, std::vector<Vec> attributes,
                               FusionParams params, Config cfg, ClusterStats stats,
                               std::unique_ptr<Backend> backend);

private:
    HybridIndex() = default;

    FusionParams params_{};
    Config config_{};
    ClusterStats stats_;
    ClassTable class_table_;
    std::vector<ClassId> class_ids_;
    std::vector<Vec> contents_;
    std::vector<Vec> attributes_;
    std::unique_ptr<Backend> backend_;
};

} // namespace fusedann
