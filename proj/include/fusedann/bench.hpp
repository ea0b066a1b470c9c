#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusedann/hybrid_index.hpp"
#include "fusedann/range_index.hpp"
#include "fusedann/transform_chain.hpp"

namespace fusedann {

/// One benchmark query; exactly one of the three payloads applies
/// depending on the index being driven.
struct BenchQuery {
    Vec content;
    std::optional<Vec> attribute;       // single-attribute index
    std::vector<Vec> attributes;        // chain
    std::optional<std::pair<Vec, Vec>> range; // range index
};

struct BenchReport {
    std::vector<Real> per_query_recall;
    std::vector<std::int64_t> candidate_counts;
    std::vector<std::int64_t> failed_queries; // indices that raised query errors
    Real mean_recall = 0.0;
    Real qps = 0.0;
    std::int64_t k = 0;
    Real eps = 0.0;
    std::string config_echo;

    std::string table() const;
    std::string jsonl() const;
};

/// Exhaustive filtered oracles; ground truth for every recall number.
std::vector<std::int64_t> oracle_exact_match(std::span<const Vec> contents,
                                             std::span<const Vec> attrs, const Vec& q,
                                             const Vec& attr, std::int64_t k);
std::vector<std::int64_t> oracle_exact_match_multi(std::span<const Record> records, const Vec& q,
                                                   const std::vector<Vec>& attrs, std::int64_t k);
std::vector<std::int64_t> oracle_range(std::span<const Vec> contents, std::span<const Vec> attrs,
                                       const Vec& q, const Vec& l, const Vec& u, std::int64_t k);

/// recall@k against an oracle list: |returned ∩ truth| / |truth|, 1.0 when
/// the truth set is empty.
Real recall_at_k(const std::vector<std::int64_t>& returned, const std::vector<std::int64_t>& truth);

BenchReport bench_hybrid(const HybridIndex& index, const std::vector<BenchQuery>& queries,
                         std::int64_t k, Real eps, bool attr_approx, int threads = 1);
BenchReport bench_chain(const TransformChain& chain, const std::vector<BenchQuery>& queries,
                        std::int64_t k, Real eps, bool attr_approx, int threads = 1);
BenchReport bench_range(const RangeIndex& index, const std::vector<BenchQuery>& queries,
                        std::int64_t k, Real eps, int threads = 1);

/// Synthetic workload helpers: Gaussian content clouds and skewed class
/// assignments (uniform when s == 0, Zipf otherwise).
std::vector<Vec> synth_gaussian(std::size_t n, std::size_t d, std::uint64_t seed, Real sigma = 1.0);
std::vector<int> synth_class_assignment(std::size_t n, int classes, Real zipf_s,
                                        std::uint64_t seed);

} // namespace fusedann
