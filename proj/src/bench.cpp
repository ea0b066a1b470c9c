#include "fusedann/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace fusedann {

namespace {

std::vector<std::int64_t> top_k_filtered(std::span<const Vec> contents, const Vec& q,
                                         std::int64_t k,
                                         const std::function<bool(std::size_t)>& keep) {
    std::vector<std::pair<Real, std::int64_t>> scored;
    for (std::size_t i = 0; i < contents.size(); ++i) {
        if (!keep(i))
            continue;
        scored.emplace_back(euclidean_distance(contents[i], q), static_cast<std::int64_t>(i));
    }
    std::sort(scored.begin(), scored.end());
    if (scored.size() > static_cast<std::size_t>(k))
        scored.resize(static_cast<std::size_t>(k));
    std::vector<std::int64_t> ids;
    ids.reserve(scored.size());
    for (const auto& [dist, id] : scored)
        ids.push_back(id);
    return ids;
}

template <typename RunQuery>
BenchReport run_bench(std::size_t num_queries, std::int64_t k, Real eps, std::string config_echo,
                      int threads, RunQuery&& run) {
    BenchReport report;
    report.k = k;
    report.eps = eps;
    report.config_echo = std::move(config_echo);
    report.per_query_recall.assign(num_queries, 0.0);
    report.candidate_counts.assign(num_queries, 0);
    std::vector<char> failed(num_queries, 0);

    const auto started = std::chrono::steady_clock::now();
    const int workers = std::max(1, threads);
    if (workers == 1) {
        for (std::size_t i = 0; i < num_queries; ++i)
            run(i, report.per_query_recall[i], report.candidate_counts[i], failed[i]);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= num_queries)
                        return;
                    run(i, report.per_query_recall[i], report.candidate_counts[i], failed[i]);
                }
            });
        }
        for (auto& t : pool)
            t.join();
    }
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);

    Real total = 0.0;
    for (std::size_t i = 0; i < num_queries; ++i) {
        total += report.per_query_recall[i];
        if (failed[i])
            report.failed_queries.push_back(static_cast<std::int64_t>(i));
    }
    report.mean_recall = num_queries ? total / static_cast<Real>(num_queries) : 0.0;
    report.qps = elapsed.count() > 0.0 ? static_cast<Real>(num_queries) / elapsed.count() : 0.0;
    return report;
}

} // namespace

std::vector<std::int64_t> oracle_exact_match(std::span<const Vec> contents,
                                             std::span<const Vec> attrs, const Vec& q,
                                             const Vec& attr, std::int64_t k) {
    return top_k_filtered(contents, q, k, [&](std::size_t i) { return attrs[i] == attr; });
}

std::vector<std::int64_t> oracle_exact_match_multi(std::span<const Record> records, const Vec& q,
                                                   const std::vector<Vec>& attrs, std::int64_t k) {
    std::vector<std::pair<Real, std::int64_t>> scored;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].attributes != attrs)
            continue;
        scored.emplace_back(euclidean_distance(records[i].content, q), static_cast<std::int64_t>(i));
    }
    std::sort(scored.begin(), scored.end());
    if (scored.size() > static_cast<std::size_t>(k))
        scored.resize(static_cast<std::size_t>(k));
    std::vector<std::int64_t> ids;
    for (const auto& [dist, id] : scored)
        ids.push_back(id);
    return ids;
}

std::vector<std::int64_t> oracle_range(std::span<const Vec> contents, std::span<const Vec> attrs,
                                       const Vec& q, const Vec& l, const Vec& u, std::int64_t k) {
    return top_k_filtered(contents, q, k, [&](std::size_t i) {
        for (std::size_t h = 0; h < attrs[i].size(); ++h)
            if (attrs[i][h] < l[h] || attrs[i][h] > u[h])
                return false;
        return true;
    });
}

Real recall_at_k(const std::vector<std::int64_t>& returned,
                 const std::vector<std::int64_t>& truth) {
    if (truth.empty())
        return 1.0;
    std::vector<std::int64_t> a = returned;
    std::vector<std::int64_t> b = truth;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::int64_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return static_cast<Real>(common.size()) / static_cast<Real>(truth.size());
}

BenchReport bench_hybrid(const HybridIndex& index, const std::vector<BenchQuery>& queries,
                         std::int64_t k, Real eps, bool attr_approx, int threads) {
    for (const BenchQuery& q : queries)
        if (!q.attribute)
            throw InvalidArgumentError("bench_hybrid: queries must carry a single attribute");
    std::ostringstream echo;
    echo << "hybrid backend=" << (index.backend().kind() == BackendKind::flat ? "flat" : "graph")
         << " n=" << index.size() << " k=" << k << " eps=" << eps
         << " attr_approx=" << (attr_approx ? "true" : "false");
    return run_bench(
        queries.size(), k, eps, echo.str(), threads,
        [&](std::size_t i, Real& recall, std::int64_t& candidates, char& failed) {
            const BenchQuery& q = queries[i];
            try {
                const QueryResult res = index.query(q.content, *q.attribute, k, eps, attr_approx);
                candidates = res.candidates_retrieved;
                std::vector<std::int64_t> ids;
                for (const QueryHit& hit : res.hits)
                    ids.push_back(hit.id);
                recall = recall_at_k(
                    ids, oracle_exact_match(index.contents(), index.attributes(), q.content,
                                            *q.attribute, k));
            } catch (const Error&) {
                failed = 1;
                recall = 0.0;
            }
        });
}

BenchReport bench_chain(const TransformChain& chain, const std::vector<BenchQuery>& queries,
                        std::int64_t k, Real eps, bool attr_approx, int threads) {
    std::ostringstream echo;
    echo << "chain F=" << chain.num_attributes() << " n=" << chain.records().size() << " k=" << k
         << " eps=" << eps << " attr_approx=" << (attr_approx ? "true" : "false");
    return run_bench(
        queries.size(), k, eps, echo.str(), threads,
        [&](std::size_t i, Real& recall, std::int64_t& candidates, char& failed) {
            const BenchQuery& q = queries[i];
            try {
                const QueryResult res = chain.query(q.content, q.attributes, k, eps, attr_approx);
                candidates = res.candidates_retrieved;
                std::vector<std::int64_t> ids;
                for (const QueryHit& hit : res.hits)
                    ids.push_back(hit.id);
                recall = recall_at_k(
                    ids, oracle_exact_match_multi(chain.records(), q.content, q.attributes, k));
            } catch (const Error&) {
                failed = 1;
                recall = 0.0;
            }
        });
}

BenchReport bench_range(const RangeIndex& index, const std::vector<BenchQuery>& queries,
                        std::int64_t k, Real eps, int threads) {
    for (const BenchQuery& q : queries)
        if (!q.range)
            throw InvalidArgumentError("bench_range: queries must carry a range");
    std::ostringstream echo;
    echo << "range n=" << index.contents().size() << " lines=" << index.lines().size()
         << " k=" << k << " eps=" << eps;
    return run_bench(
        queries.size(), k, eps, echo.str(), threads,
        [&](std::size_t i, Real& recall, std::int64_t& candidates, char& failed) {
            const BenchQuery& q = queries[i];
            try {
                const QueryResult res =
                    index.query(q.content, q.range->first, q.range->second, k, eps);
                candidates = res.candidates_retrieved;
                std::vector<std::int64_t> ids;
                for (const QueryHit& hit : res.hits)
                    ids.push_back(hit.id);
                recall = recall_at_k(ids, oracle_range(index.contents(), index.attributes(),
                                                       q.content, q.range->first, q.range->second,
                                                       k));
            } catch (const Error&) {
                failed = 1;
                recall = 0.0;
            }
        });
}

std::string BenchReport::table() const {
    std::ostringstream out;
    out << "config: " << config_echo << "\n";
    out << "queries: " << per_query_recall.size() << "  failed: " << failed_queries.size() << "\n";
    out << "recall@" << k << ": " << mean_recall << "\n";
    out << "qps: " << qps << "\n";
    std::int64_t min_c = 0, max_c = 0;
    Real mean_c = 0.0;
    if (!candidate_counts.empty()) {
        min_c = *std::min_element(candidate_counts.begin(), candidate_counts.end());
        max_c = *std::max_element(candidate_counts.begin(), candidate_counts.end());
        for (std::int64_t c : candidate_counts)
            mean_c += static_cast<Real>(c);
        mean_c /= static_cast<Real>(candidate_counts.size());
    }
    out << "candidates k': min=" << min_c << " mean=" << mean_c << " max=" << max_c << "\n";
    return out.str();
}

std::string BenchReport::jsonl() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < per_query_recall.size(); ++i) {
        nlohmann::json j;
        j["query"] = i;
        j["recall"] = per_query_recall[i];
        j["candidates"] = candidate_counts[i];
        out << j.dump() << "\n";
    }
    nlohmann::json summary;
    summary["summary"] = true;
    summary["config"] = config_echo;
    summary["k"] = k;
    summary["eps"] = eps;
    summary["mean_recall"] = mean_recall;
    summary["qps"] = qps;
    summary["failed"] = failed_queries.size();
    out << summary.dump() << "\n";
    return out.str();
}

std::vector<Vec> synth_gaussian(std::size_t n, std::size_t d, std::uint64_t seed, Real sigma) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> dist(0.0, sigma);
    std::vector<Vec> out(n, Vec(d));
    for (Vec& v : out)
        for (Real& x : v)
            x = dist(rng);
    return out;
}

std::vector<int> synth_class_assignment(std::size_t n, int classes, Real zipf_s,
                                        std::uint64_t seed) {
    if (classes < 1)
        throw InvalidArgumentError("synth_class_assignment: classes must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Real> cdf(classes);
    Real total = 0.0;
    for (int r = 0; r < classes; ++r) {
        total += zipf_s == 0.0 ? 1.0 : 1.0 / std::pow(static_cast<Real>(r + 1), zipf_s);
        cdf[r] = total;
    }
    for (Real& c : cdf)
        c /= total;
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    std::vector<int> out(n);
    for (int& c : out) {
        const Real x = u(rng);
        c = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
    }
    return out;
}

} // namespace fusedann
