#include "fusedann/index_file.hpp"

#include <cstring>
#include <fstream>

#include "fusedann/hnsw.hpp"

namespace fusedann {

namespace {

constexpr char kMagic[8] = {'F', 'U', 'S', 'E', 'D', 'I', 'D', 'X'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class ByteWriter {
public:
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, sizeof(v)); }
    void u64(std::uint64_t v) { raw(&v, sizeof(v)); }
    void i32(std::int32_t v) { raw(&v, sizeof(v)); }
    void i64(std::int64_t v) { raw(&v, sizeof(v)); }
    void f64(double v) { raw(&v, sizeof(v)); }
    void boolean(bool v) { u8(v ? 1 : 0); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void vec(const Vec& v) {
        u64(v.size());
        for (Real x : v)
            f64(x);
    }
    void vecs(const std::vector<Vec>& vs) {
        u64(vs.size());
        for (const Vec& v : vs)
            vec(v);
    }
    void opt_f64(const std::optional<Real>& v) {
        boolean(v.has_value());
        f64(v.value_or(0.0));
    }
    const std::string& bytes() const { return buf_; }

private:
    void raw(const void* p, std::size_t n) {
        const std::size_t at = buf_.size();
        buf_.resize(at + n);
        std::memcpy(buf_.data() + at, p, n);
    }
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    std::int32_t i32() { return get<std::int32_t>(); }
    std::int64_t i64() { return get<std::int64_t>(); }
    double f64() { return get<double>(); }
    bool boolean() { return u8() != 0; }
    std::string str() {
        const std::uint64_t n = u64();
        check(n);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    Vec vec() {
        const std::uint64_t n = u64();
        Vec v(n);
        for (std::uint64_t i = 0; i < n; ++i)
            v[i] = f64();
        return v;
    }
    std::vector<Vec> vecs() {
        const std::uint64_t n = u64();
        std::vector<Vec> out(n);
        for (std::uint64_t i = 0; i < n; ++i)
            out[i] = vec();
        return out;
    }
    std::optional<Real> opt_f64() {
        const bool has = boolean();
        const double v = f64();
        return has ? std::optional<Real>(v) : std::nullopt;
    }
    std::size_t position() const { return pos_; }

private:
    template <typename T> T get() {
        check(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void check(std::uint64_t n) const {
        if (pos_ + n > bytes_.size())
            throw LoadError("index file truncated");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

void write_params(ByteWriter& w, const FusionParams& p) {
    w.f64(p.alpha);
    w.f64(p.beta);
    w.f64(p.epsilon_f);
    w.f64(p.delta_max);
    w.f64(p.sigma_min);
    w.i32(p.d);
    w.i32(p.m);
}

FusionParams read_params(ByteReader& r) {
    FusionParams p;
    p.alpha = r.f64();
    p.beta = r.f64();
    p.epsilon_f = r.f64();
    p.delta_max = r.f64();
    p.sigma_min = r.f64();
    p.d = r.i32();
    p.m = r.i32();
    return p;
}

void write_stats(ByteWriter& w, const ClusterStats& stats) {
    w.u64(stats.num_classes());
    for (const ClassGeometry& g : stats.all()) {
        w.f64(g.radius);
        w.i64(g.count);
        w.vec(g.centroid);
        w.f64(g.gamma);
        w.boolean(g.degenerate);
    }
    w.u64(stats.cross_matrix().size());
    for (Real x : stats.cross_matrix())
        w.f64(x);
    w.i64(stats.total());
}

ClusterStats read_stats(ByteReader& r) {
    const std::uint64_t n = r.u64();
    std::vector<ClassGeometry> per_class(n);
    for (auto& g : per_class) {
        g.radius = r.f64();
        g.count = r.i64();
        g.centroid = r.vec();
        g.gamma = r.f64();
        g.degenerate = r.boolean();
    }
    const std::uint64_t mn = r.u64();
    std::vector<Real> d_min(mn);
    for (auto& x : d_min)
        x = r.f64();
    const std::int64_t total = r.i64();
    return ClusterStats::from_parts(std::move(per_class), std::move(d_min), total);
}

void write_graph_params(ByteWriter& w, const GraphParams& g) {
    w.i32(g.M);
    w.i32(g.ef_construction);
    w.i32(g.ef_search);
    w.u64(g.seed);
}

GraphParams read_graph_params(ByteReader& r) {
    GraphParams g;
    g.M = r.i32();
    g.ef_construction = r.i32();
    g.ef_search = r.i32();
    g.seed = r.u64();
    return g;
}

void write_backend(ByteWriter& w, const Backend& backend) {
    w.u8(static_cast<std::uint8_t>(backend.kind()));
    w.vecs(backend.points());
    if (backend.kind() == BackendKind::graph) {
        const auto& hnsw = static_cast<const HnswBackend&>(backend);
        write_graph_params(w, hnsw.params());
        w.u64(hnsw.levels().size());
        for (int level : hnsw.levels())
            w.i32(level);
        w.u64(hnsw.links().size());
        for (const auto& node : hnsw.links()) {
            w.u64(node.size());
            for (const auto& layer : node) {
                w.u64(layer.size());
                for (std::int32_t id : layer)
                    w.i32(id);
            }
        }
        w.i32(hnsw.entry_point());
    }
}

std::unique_ptr<Backend> read_backend(ByteReader& r) {
    const auto kind = static_cast<BackendKind>(r.u8());
    std::vector<Vec> points = r.vecs();
    if (kind == BackendKind::flat)
        return build_backend(std::move(points), BackendKind::flat);
    if (kind != BackendKind::graph)
        throw LoadError("unknown backend kind");
    GraphParams params = read_graph_params(r);
    std::vector<int> levels(r.u64());
    for (auto& level : levels)
        level = r.i32();
    std::vector<std::vector<std::vector<std::int32_t>>> links(r.u64());
    for (auto& node : links) {
        node.resize(r.u64());
        for (auto& layer : node) {
            layer.resize(r.u64());
            for (auto& id : layer)
                id = r.i32();
        }
    }
    const int entry = r.i32();
    return HnswBackend::restore(std::move(points), params, std::move(levels), std::move(links),
                                entry);
}

void write_hybrid(ByteWriter& w, const HybridIndex& idx) {
    const auto& cfg = idx.config();
    w.f64(cfg.epsilon_f);
    w.u8(static_cast<std::uint8_t>(cfg.backend));
    write_graph_params(w, cfg.graph);
    w.opt_f64(cfg.alpha_override);
    w.opt_f64(cfg.beta_override);
    write_params(w, idx.params());
    w.vecs(idx.contents());
    w.vecs(idx.attributes());
    write_stats(w, idx.stats());
    write_backend(w, idx.backend());
}

HybridIndex read_hybrid(ByteReader& r) {
    HybridIndex::Config cfg;
    cfg.epsilon_f = r.f64();
    cfg.backend = static_cast<BackendKind>(r.u8());
    cfg.graph = read_graph_params(r);
    cfg.alpha_override = r.opt_f64();
    cfg.beta_override = r.opt_f64();
    FusionParams params = read_params(r);
    std::vector<Vec> contents = r.vecs();
    std::vector<Vec> attributes = r.vecs();
    ClusterStats stats = read_stats(r);
    std::unique_ptr<Backend> backend = read_backend(r);
    return HybridIndex::restore(std::move(contents), std::move(attributes), params, cfg,
                                std::move(stats), std::move(backend));
}

void write_chain(ByteWriter& w, const TransformChain& chain) {
    const auto& cfg = chain.config();
    w.f64(cfg.epsilon_f);
    w.u8(static_cast<std::uint8_t>(cfg.backend));
    write_graph_params(w, cfg.graph);
    w.opt_f64(cfg.alpha_override);
    w.opt_f64(cfg.beta_override);
    w.f64(cfg.alpha_multiplier);

    w.u64(chain.priority().positions.size());
    for (int p : chain.priority().positions)
        w.i32(p);

    const auto& records = chain.records();
    w.u64(records.size());
    for (const Record& rec : records) {
        w.vec(rec.content);
        w.u64(rec.attributes.size());
        for (const Vec& a : rec.attributes)
            w.vec(a);
    }

    w.u64(chain.levels().size());
    for (const ChainLevel& level : chain.levels()) {
        w.i32(level.attribute);
        write_params(w, level.params);
    }
    write_stats(w, chain.stats());
    write_backend(w, chain.backend());
}

TransformChain read_chain(ByteReader& r) {
    TransformChain::Config cfg;
    cfg.epsilon_f = r.f64();
    cfg.backend = static_cast<BackendKind>(r.u8());
    cfg.graph = read_graph_params(r);
    cfg.alpha_override = r.opt_f64();
    cfg.beta_override = r.opt_f64();
    cfg.alpha_multiplier = r.f64();

    PriorityOrder priority;
    priority.positions.resize(r.u64());
    for (auto& p : priority.positions)
        p = r.i32();

    std::vector<Record> records(r.u64());
    for (Record& rec : records) {
        rec.content = r.vec();
        rec.attributes.resize(r.u64());
        for (Vec& a : rec.attributes)
            a = r.vec();
    }

    std::vector<ChainLevel> levels(r.u64());
    for (ChainLevel& level : levels) {
        level.attribute = r.i32();
        level.params = read_params(r);
    }
    ClusterStats stats = read_stats(r);
    std::unique_ptr<Backend> backend = read_backend(r);
    return TransformChain::restore(std::move(records), std::move(priority), std::move(levels), cfg,
                                   std::move(stats), std::move(backend));
}

void write_range(ByteWriter& w, const RangeIndex& rix) {
    const auto& cfg = rix.config();
    w.f64(cfg.eps_cover);
    w.f64(cfg.delta);
    w.i64(cfg.radius_k);
    w.f64(cfg.nu);
    w.f64(cfg.tau);
    w.f64(cfg.kappa);
    w.f64(cfg.compensation_c);
    w.f64(cfg.weights.direction);
    w.f64(cfg.weights.position);
    w.f64(cfg.weights.length);
    w.u64(cfg.max_lines);
    w.u64(cfg.seed);
    w.u64(cfg.heldout_queries);
    w.f64(cfg.epsilon_f);
    w.opt_f64(cfg.alpha_override);
    w.opt_f64(cfg.beta_override);

    write_params(w, rix.params());
    w.vecs(rix.contents());
    w.vecs(rix.attributes());
    w.u64(rix.lines().size());
    for (const IndexedLine& line : rix.lines()) {
        w.vec(line.segment.a);
        w.vec(line.segment.b);
        w.f64(line.base_radius);
        w.f64(line.eta);
        w.vec(line.source_q);
        w.vec(line.source_l);
        w.vec(line.source_u);
    }
    w.f64(rix.hausdorff_slack());
}

RangeIndex read_range(ByteReader& r) {
    RangeIndexConfig cfg;
    cfg.eps_cover = r.f64();
    cfg.delta = r.f64();
    cfg.radius_k = r.i64();
    cfg.nu = r.f64();
    cfg.tau = r.f64();
    cfg.kappa = r.f64();
    cfg.compensation_c = r.f64();
    cfg.weights.direction = r.f64();
    cfg.weights.position = r.f64();
    cfg.weights.length = r.f64();
    cfg.max_lines = r.u64();
    cfg.seed = r.u64();
    cfg.heldout_queries = r.u64();
    cfg.epsilon_f = r.f64();
    cfg.alpha_override = r.opt_f64();
    cfg.beta_override = r.opt_f64();

    FusionParams params = read_params(r);
    std::vector<Vec> contents = r.vecs();
    std::vector<Vec> attributes = r.vecs();
    std::vector<IndexedLine> lines(r.u64());
    for (IndexedLine& line : lines) {
        line.segment.a = r.vec();
        line.segment.b = r.vec();
        line.base_radius = r.f64();
        line.eta = r.f64();
        line.source_q = r.vec();
        line.source_l = r.vec();
        line.source_u = r.vec();
    }
    const Real slack = r.f64();
    return RangeIndex::restore(std::move(contents), std::move(attributes), params, cfg,
                               std::move(lines), slack);
}

} // namespace

void save_index(const std::string& path, const IndexArtifact& artifact) {
    if (artifact.hybrid.has_value() == artifact.chain.has_value())
        throw InvalidArgumentError("save_index: exactly one of hybrid/chain must be present");

    ByteWriter w;
    w.u8(artifact.hybrid ? 1 : 2);
    w.boolean(artifact.range.has_value());
    w.u64(artifact.attribute_names.size());
    for (const std::string& name : artifact.attribute_names)
        w.str(name);
    w.u64(artifact.token_maps.size());
    for (const TokenMap& tm : artifact.token_maps) {
        w.i32(tm.attribute);
        w.i32(tm.m);
        w.u64(tm.seed);
        w.u64(tm.mapping.size());
        for (const auto& [token, vec] : tm.mapping) {
            w.str(token);
            w.vec(vec);
        }
    }
    if (artifact.hybrid)
        write_hybrid(w, *artifact.hybrid);
    else
        write_chain(w, *artifact.chain);
    if (artifact.range)
        write_range(w, *artifact.range);

    std::string file;
    file.append(kMagic, sizeof(kMagic));
    const std::uint32_t version = kVersion;
    file.append(reinterpret_cast<const char*>(&version), sizeof(version));
    file += w.bytes();
    const std::uint64_t checksum = fnv1a(w.bytes());
    file.append(reinterpret_cast<const char*>(&checksum), sizeof(checksum));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw LoadError(path + ": cannot open for writing");
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out)
        throw LoadError(path + ": write failed");
}

IndexArtifact load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError(path + ": cannot open file");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t))
        throw LoadError(path + ": file too small");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw LoadError(path + ": bad magic");
    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
    if (version != kVersion)
        throw LoadError(path + ": unsupported version " + std::to_string(version));

    const std::size_t payload_begin = sizeof(kMagic) + sizeof(version);
    const std::size_t payload_end = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + payload_end, sizeof(stored));
    const std::string payload = bytes.substr(payload_begin, payload_end - payload_begin);
    if (fnv1a(payload) != stored)
        throw LoadError(path + ": checksum mismatch");

    ByteReader r(payload, 0);
    IndexArtifact artifact;
    const std::uint8_t kind = r.u8();
    const bool has_range = r.boolean();
    artifact.attribute_names.resize(r.u64());
    for (auto& name : artifact.attribute_names)
        name = r.str();
    artifact.token_maps.resize(r.u64());
    for (TokenMap& tm : artifact.token_maps) {
        tm.attribute = r.i32();
        tm.m = r.i32();
        tm.seed = r.u64();
        const std::uint64_t n = r.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
            std::string token = r.str();
            tm.mapping.emplace(std::move(token), r.vec());
        }
    }
    if (kind == 1)
        artifact.hybrid = read_hybrid(r);
    else if (kind == 2)
        artifact.chain = read_chain(r);
    else
        throw LoadError(path + ": unknown index kind");
    if (has_range)
        artifact.range = read_range(r);
    return artifact;
}

} // namespace fusedann
