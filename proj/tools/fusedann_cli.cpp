// Command-line front end: build, query, range, bench, stats and
// update-priority over the binary index format.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fusedann/bench.hpp"
#include "fusedann/dataset_io.hpp"
#include "fusedann/index_file.hpp"

using namespace fusedann;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitQuery = 3;

Vec parse_vector(const std::string& text) {
    Vec v;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (ec != std::errc() || ptr != cell.data() + cell.size())
            throw ParseError("not a numeric vector: '" + text + "'");
        v.push_back(value);
    }
    if (v.empty())
        throw ParseError("empty vector literal");
    return v;
}

bool looks_numeric(const std::string& text) {
    try {
        (void)parse_vector(text);
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

VectorFormat parse_format(const std::string& name) {
    if (name == "fvecs")
        return VectorFormat::fvecs;
    if (name == "bvecs")
        return VectorFormat::bvecs;
    if (name == "csv")
        return VectorFormat::csv;
    throw ParseError("unknown vector format '" + name + "'");
}

std::vector<int> parse_priority(const std::string& text, const std::vector<std::string>& names,
                                int F) {
    std::vector<int> order;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        int idx = -1;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), idx);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            for (std::size_t i = 0; i < names.size(); ++i)
                if (names[i] == cell)
                    idx = static_cast<int>(i);
        }
        if (idx < 0 || idx >= F)
            throw ParseError("unknown attribute '" + cell + "' in --priority");
        order.push_back(idx);
    }
    return order;
}

/// Maps a textual attribute to its vector using the stored token map when
/// the attribute is categorical.
Vec resolve_attribute(const IndexArtifact& artifact, int attribute, const std::string& text) {
    for (const TokenMap& tm : artifact.token_maps) {
        if (tm.attribute != attribute)
            continue;
        if (auto it = tm.mapping.find(text); it != tm.mapping.end())
            return it->second;
        if (!looks_numeric(text)) {
            TokenEmbedder embedder = TokenEmbedder::restore(tm.m, tm.seed, tm.mapping);
            return embedder.embed(text);
        }
    }
    return parse_vector(text);
}

void print_result(const QueryResult& result) {
    std::printf("%-8s %-14s %-14s %-14s\n", "id", "content_dist", "attr_dist", "score");
    for (const QueryHit& hit : result.hits)
        std::printf("%-8lld %-14.6f %-14.6f %-14.6f\n", static_cast<long long>(hit.id),
                    hit.content_distance, hit.attribute_distance, hit.score);
    if (result.truncated)
        std::printf("(truncated: fewer than k records satisfied the filter)\n");
    std::printf("candidates retrieved: %lld\n",
                static_cast<long long>(result.candidates_retrieved));
}

struct GlobalOptions {
    int m = 4;
    Real epsilon_f = 1.0;
    Real epsilon = 0.01;
    Real delta = 0.05;
    Real nu = 0.017453292519943295; // pi/180
    std::optional<Real> alpha_override;
    std::optional<Real> beta_override;
    std::string backend = "flat";
    std::uint64_t seed = 42;
    std::string priority;
};

BackendKind backend_kind(const std::string& name) {
    if (name == "flat")
        return BackendKind::flat;
    if (name == "graph")
        return BackendKind::graph;
    throw ParseError("unknown backend '" + name + "'");
}

int run_build(const GlobalOptions& g, const std::string& vectors, const std::string& format,
              const std::string& attributes, const std::string& output, bool with_range,
              Real eps_cover, std::int64_t radius_k, std::size_t max_lines) {
    const DatasetBundle bundle =
        load_dataset(vectors, parse_format(format), attributes, g.m, g.seed);
    const int F = bundle.num_attributes();
    std::printf("loaded %zu vectors (d=%d) with %d attribute(s)\n", bundle.size(),
                bundle.content_dim(), F);

    IndexArtifact artifact;
    artifact.attribute_names = bundle.attributes.names;
    std::size_t embedder_slot = 0;
    for (int a = 0; a < F; ++a) {
        if (!bundle.attributes.categorical[a])
            continue;
        const TokenEmbedder& e = bundle.attributes.embedders[embedder_slot++];
        TokenMap tm;
        tm.attribute = a;
        tm.m = e.dimension();
        tm.seed = e.seed();
        tm.mapping = e.mapping();
        artifact.token_maps.push_back(std::move(tm));
    }

    if (F == 1) {
        HybridIndex::Config cfg;
        cfg.epsilon_f = g.epsilon_f;
        cfg.backend = backend_kind(g.backend);
        cfg.graph.seed = g.seed;
        cfg.alpha_override = g.alpha_override;
        cfg.beta_override = g.beta_override;
        artifact.hybrid =
            HybridIndex::build(bundle.contents, bundle.attributes.attributes[0], cfg);
        std::printf("built single-attribute index: alpha=%.4f beta=%.4f\n",
                    artifact.hybrid->params().alpha, artifact.hybrid->params().beta);
    } else {
        TransformChain::Config cfg;
        cfg.epsilon_f = g.epsilon_f;
        cfg.backend = backend_kind(g.backend);
        cfg.graph.seed = g.seed;
        cfg.alpha_override = g.alpha_override;
        cfg.beta_override = g.beta_override;
        PriorityOrder priority;
        if (g.priority.empty()) {
            for (int a = 0; a < F; ++a)
                priority.positions.push_back(a);
        } else {
            priority.positions = parse_priority(g.priority, bundle.attributes.names, F);
        }
        artifact.chain = TransformChain::build(bundle.records(), priority, cfg);
        std::printf("built %d-attribute chain (%zu levels)\n", F, artifact.chain->levels().size());
    }

    if (with_range) {
        if (F != 1 || bundle.attributes.categorical[0])
            throw InvalidArgumentError(
                "--range-index needs a single numeric attribute");
        RangeIndexConfig cfg;
        cfg.epsilon_f = g.epsilon_f;
        cfg.delta = g.delta;
        cfg.nu = g.nu;
        cfg.seed = g.seed;
        cfg.alpha_override = g.alpha_override;
        cfg.beta_override = g.beta_override;
        cfg.eps_cover = eps_cover;
        cfg.radius_k = radius_k;
        cfg.max_lines = max_lines;
        artifact.range =
            RangeIndex::build(bundle.contents, bundle.attributes.attributes[0], cfg);
        std::printf("built range section: %zu lines, slack %.4f\n", artifact.range->lines().size(),
                    artifact.range->hausdorff_slack());
    }

    save_index(output, artifact);
    std::printf("saved %s\n", output.c_str());
    return kExitOk;
}

int run_query(const GlobalOptions& g, const std::string& index_path, const std::string& vector,
              const std::vector<std::string>& attrs, std::int64_t k, bool attr_approx) {
    const IndexArtifact artifact = load_index(index_path);
    const Vec q = parse_vector(vector);
    if (artifact.hybrid) {
        if (attrs.size() != 1)
            throw InvalidArgumentError("single-attribute index expects exactly one --attr");
        print_result(
            artifact.hybrid->query(q, resolve_attribute(artifact, 0, attrs[0]), k, g.epsilon,
                                   attr_approx));
        return kExitOk;
    }
    const int F = artifact.chain->num_attributes();
    if (static_cast<int>(attrs.size()) != F)
        throw InvalidArgumentError("chain index expects " + std::to_string(F) + " --attr values");
    std::vector<Vec> query_attrs;
    for (int a = 0; a < F; ++a)
        query_attrs.push_back(resolve_attribute(artifact, a, attrs[a]));
    print_result(artifact.chain->query(q, query_attrs, k, g.epsilon, attr_approx));
    return kExitOk;
}

int run_range(const GlobalOptions& g, const std::string& index_path, const std::string& vector,
              const std::string& lo, const std::string& hi, std::int64_t k) {
    const IndexArtifact artifact = load_index(index_path);
    if (!artifact.range)
        throw InvalidArgumentError("index has no range section (rebuild with --range-index)");
    print_result(artifact.range->query(parse_vector(vector), parse_vector(lo), parse_vector(hi), k,
                                       g.epsilon));
    return kExitOk;
}

int run_stats(const std::string& index_path) {
    const IndexArtifact artifact = load_index(index_path);
    if (artifact.hybrid) {
        const auto& idx = *artifact.hybrid;
        std::printf("single-attribute index: n=%lld d=%d m=%d\n",
                    static_cast<long long>(idx.size()), idx.params().d, idx.params().m);
        std::printf("alpha=%.6f beta=%.6f epsilon_f=%.4f delta_max=%.4f sigma_min=%.4f\n",
                    idx.params().alpha, idx.params().beta, idx.params().epsilon_f,
                    idx.params().delta_max, idx.params().sigma_min);
        std::printf("classes: %zu\n", idx.stats().num_classes());
        for (std::size_t a = 0; a < idx.stats().num_classes(); ++a) {
            const auto& cg = idx.stats().geometry(static_cast<ClassId>(a));
            const std::string gamma = cg.degenerate ? "-" : std::to_string(cg.gamma);
            std::printf("  class %zu: count=%lld radius=%.4f gamma=%s\n", a,
                        static_cast<long long>(cg.count), cg.radius, gamma.c_str());
        }
    } else if (artifact.chain) {
        const auto& chain = *artifact.chain;
        std::printf("chain index: n=%zu F=%d\n", chain.records().size(), chain.num_attributes());
        std::printf("priority (highest first):");
        for (int p : chain.priority().positions)
            std::printf(" %s", artifact.attribute_names.empty()
                                   ? std::to_string(p).c_str()
                                   : artifact.attribute_names[p].c_str());
        std::printf("\n");
        for (std::size_t s = 0; s < chain.levels().size(); ++s) {
            const auto& level = chain.levels()[s];
            std::printf("  level %zu: attribute=%d alpha=%.4f beta=%.4f\n", s, level.attribute,
                        level.params.alpha, level.params.beta);
        }
        std::printf("attribute combinations: %zu\n", chain.stats().num_classes());
    }
    if (artifact.range) {
        std::printf("range section: %zu lines, slack=%.4f, fused diameter=%.4f\n",
                    artifact.range->lines().size(), artifact.range->hausdorff_slack(),
                    artifact.range->fused_diameter());
    }
    return kExitOk;
}

int run_bench(const GlobalOptions& g, const std::string& index_path, int num_queries,
              std::int64_t k, bool attr_approx, Real range_width, int threads,
              const std::string& jsonl_path) {
    const IndexArtifact artifact = load_index(index_path);
    std::mt19937_64 rng(g.seed ^ 0xbadc0ffeULL);
    std::vector<BenchQuery> queries;
    BenchReport report;

    if (artifact.range && range_width > 0.0) {
        const auto& attrs = artifact.range->attributes();
        const auto& contents = artifact.range->contents();
        std::uniform_int_distribution<std::size_t> pick(0, contents.size() - 1);
        Real lo = attrs[0][0], hi = attrs[0][0];
        for (const Vec& a : attrs) {
            lo = std::min(lo, a[0]);
            hi = std::max(hi, a[0]);
        }
        const Real span = hi - lo;
        const Real w = std::min<Real>(range_width, 1.0);
        for (int i = 0; i < num_queries; ++i) {
            BenchQuery q;
            q.content = contents[pick(rng)];
            Real c = (lo + hi) / 2;
            if (w < 1.0) {
                std::uniform_real_distribution<Real> centre(lo + span * w / 2,
                                                            hi - span * w / 2);
                c = centre(rng);
            }
            q.range = {{c - span * w / 2}, {c + span * w / 2}};
            queries.push_back(q);
        }
        report = bench_range(*artifact.range, queries, k, g.epsilon, threads);
    } else if (artifact.hybrid) {
        const auto& attrs = artifact.hybrid->attributes();
        const auto& contents = artifact.hybrid->contents();
        std::uniform_int_distribution<std::size_t> pick(0, contents.size() - 1);
        for (int i = 0; i < num_queries; ++i) {
            BenchQuery q;
            q.content = contents[pick(rng)];
            q.attribute = attrs[pick(rng)];
            queries.push_back(q);
        }
        report = bench_hybrid(*artifact.hybrid, queries, k, g.epsilon, attr_approx, threads);
    } else {
        const auto& records = artifact.chain->records();
        std::uniform_int_distribution<std::size_t> pick(0, records.size() - 1);
        for (int i = 0; i < num_queries; ++i) {
            BenchQuery q;
            q.content = records[pick(rng)].content;
            q.attributes = records[pick(rng)].attributes;
            queries.push_back(q);
        }
        report = bench_chain(*artifact.chain, queries, k, g.epsilon, attr_approx, threads);
    }

    std::printf("%s", report.table().c_str());
    if (!jsonl_path.empty()) {
        std::ofstream out(jsonl_path);
        out << report.jsonl();
        std::printf("wrote per-query records to %s\n", jsonl_path.c_str());
    }
    return kExitOk;
}

int run_update_priority(const GlobalOptions& g, const std::string& index_path,
                        const std::string& output) {
    IndexArtifact artifact = load_index(index_path);
    if (!artifact.chain)
        throw InvalidArgumentError("update-priority requires a chain index");
    if (g.priority.empty())
        throw InvalidArgumentError("--priority is required");
    PriorityOrder order;
    order.positions = parse_priority(g.priority, artifact.attribute_names,
                                     artifact.chain->num_attributes());
    TransformChain::UpdateReport report;
    artifact.chain = artifact.chain->with_priority(order, &report);
    std::printf("recomputed %d level(s)\n", report.recomputed_levels);
    save_index(output, artifact);
    std::printf("saved %s\n", output.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fused attribute-vector nearest-neighbour search engine"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--m", g.m, "embedding dimension for categorical attributes");
    app.add_option("--epsilon-f", g.epsilon_f, "max intra-cluster fused distance");
    app.add_option("--epsilon", g.epsilon, "error probability for candidate sizing");
    app.add_option("--delta", g.delta, "failure probability for cylinder radii");
    app.add_option("--nu", g.nu, "angular resolution of the line index (radians)");
    double alpha_cli = 0.0, beta_cli = 0.0;
    auto* alpha_opt = app.add_option("--alpha-override", alpha_cli, "fixed alpha");
    auto* beta_opt = app.add_option("--beta-override", beta_cli, "fixed beta");
    app.add_option("--backend", g.backend, "flat or graph")
        ->check(CLI::IsMember({"flat", "graph"}));
    app.add_option("--seed", g.seed, "seed for deterministic builds");
    app.add_option("--priority", g.priority,
                   "comma-separated attribute names or indices, highest priority first");

    auto* build = app.add_subcommand("build", "build an index from a dataset");
    std::string vectors, format = "fvecs", attributes, output = "index.fidx";
    bool with_range = false;
    double eps_cover = 0.0;
    std::int64_t radius_k = 100;
    std::size_t max_lines = 10000;
    build->add_option("--vectors", vectors, "vector file")->required();
    build->add_option("--format", format, "fvecs, bvecs or csv");
    build->add_option("--attributes", attributes, "attribute csv")->required();
    build->add_option("--output", output, "index file to write");
    build->add_flag("--range-index", with_range, "also build the range section");
    build->add_option("--eps-cover", eps_cover, "line sampling coverage target (0 = auto)");
    build->add_option("--radius-k", radius_k, "neighbour count behind cylinder radii");
    build->add_option("--max-lines", max_lines, "cap on sampled range lines");

    auto* query = app.add_subcommand("query", "attribute-filtered top-k query");
    std::string index_path, vector_text;
    std::vector<std::string> attr_texts;
    std::int64_t k = 10;
    bool attr_approx = false;
    query->add_option("--index", index_path, "index file")->required();
    query->add_option("--vector", vector_text, "query vector, comma separated")->required();
    query->add_option("--attr", attr_texts, "attribute value (repeat for chains)")->required();
    query->add_option("--k", k, "result count");
    query->add_flag("--attr-approx", attr_approx, "relax to semantically nearest attributes");

    auto* range = app.add_subcommand("range", "range-filtered top-k query");
    std::string lo_text, hi_text;
    range->add_option("--index", index_path, "index file")->required();
    range->add_option("--vector", vector_text, "query vector")->required();
    range->add_option("--l", lo_text, "lower attribute bound")->required();
    range->add_option("--u", hi_text, "upper attribute bound")->required();
    range->add_option("--k", k, "result count");

    auto* stats = app.add_subcommand("stats", "describe a saved index");
    stats->add_option("--index", index_path, "index file")->required();

    auto* bench = app.add_subcommand("bench", "recall/QPS benchmark against exhaustive oracles");
    int num_queries = 100, threads = 1;
    double range_width = 0.0;
    std::string jsonl_path;
    bench->add_option("--index", index_path, "index file")->required();
    bench->add_option("--num-queries", num_queries, "number of synthetic queries");
    bench->add_option("--k", k, "result count");
    bench->add_flag("--attr-approx", attr_approx, "relax attribute matching");
    bench->add_option("--range-width", range_width,
                      "bench the range section at this relative width (0 = attribute bench)");
    bench->add_option("--threads", threads, "worker threads");
    bench->add_option("--jsonl", jsonl_path, "write per-query records to this file");

    auto* update = app.add_subcommand("update-priority", "re-prioritize a chain index");
    std::string update_output = "updated.fidx";
    update->add_option("--index", index_path, "index file")->required();
    update->add_option("--output", update_output, "index file to write");

    // Global flags remain usable after the subcommand name.
    for (CLI::App* sub : app.get_subcommands({}))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParse;
    }

    if (*alpha_opt)
        g.alpha_override = alpha_cli;
    if (*beta_opt)
        g.beta_override = beta_cli;

    try {
        if (*build)
            return run_build(g, vectors, format, attributes, output, with_range, eps_cover,
                             radius_k, max_lines);
        if (*query)
            return run_query(g, index_path, vector_text, attr_texts, k, attr_approx);
        if (*range)
            return run_range(g, index_path, vector_text, lo_text, hi_text, k);
        if (*stats)
            return run_stats(index_path);
        if (*bench)
            return run_bench(g, index_path, num_queries, k, attr_approx, range_width, threads,
                             jsonl_path);
        if (*update)
            return run_update_priority(g, index_path, update_output);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitParse;
    } catch (const LoadError& e) {
        std::fprintf(stderr, "load error: %s\n", e.what());
        return kExitParse;
    } catch (const Error& e) {
        std::fprintf(stderr, "query error: %s\n", e.what());
        return kExitQuery;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitQuery;
    }
    return kExitOk;
}
