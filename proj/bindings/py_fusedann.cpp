#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fusedann/bench.hpp"
#include "fusedann/dataset_io.hpp"
#include "fusedann/hybrid_index.hpp"
#include "fusedann/index_file.hpp"
#include "fusedann/range_index.hpp"
#include "fusedann/transform_chain.hpp"

namespace py = pybind11;
using namespace fusedann;

namespace {

std::vector<py::dict> hits_to_dicts(const QueryResult& result) {
    std::vector<py::dict> out;
    out.reserve(result.hits.size());
    for (const QueryHit& hit : result.hits) {
        py::dict d;
        d["id"] = hit.id;
        d["content_distance"] = hit.content_distance;
        d["attribute_distance"] = hit.attribute_distance;
        d["score"] = hit.score;
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace

PYBIND11_MODULE(fusedann, m) {
    m.doc() = "Filtered nearest-neighbour search through attribute-vector fusion";

    py::register_exception<Error>(m, "FusedAnnError");

    py::class_<FusionParams>(m, "FusionParams")
        .def(py::init<>())
        .def_readwrite("alpha", &FusionParams::alpha)
        .def_readwrite("beta", &FusionParams::beta)
        .def_readwrite("epsilon_f", &FusionParams::epsilon_f)
        .def_readwrite("delta_max", &FusionParams::delta_max)
        .def_readwrite("sigma_min", &FusionParams::sigma_min)
        .def_readwrite("d", &FusionParams::d)
        .def_readwrite("m", &FusionParams::m);

    m.def("partition_blocks", &partition_blocks, py::arg("v"), py::arg("m"));
    m.def(
        "fuse",
        [](const Vec& v, const Vec& f, Real alpha, Real beta, int m) {
            return fuse(v, f, alpha, beta, m);
        },
        py::arg("v"), py::arg("f"), py::arg("alpha"), py::arg("beta"), py::arg("m"));
    m.def(
        "select_fusion_params",
        [](Real delta_max, std::optional<Real> sigma_min, int d, int m, Real epsilon_f) {
            return select_fusion_params(delta_max, sigma_min, d, m, epsilon_f);
        },
        py::arg("delta_max"), py::arg("sigma_min"), py::arg("d"), py::arg("m"),
        py::arg("epsilon_f"));
    m.def(
        "estimate_extremes",
        [](const std::vector<Vec>& contents, const std::vector<Vec>& attrs) {
            const auto ext = estimate_extremes(contents, attrs);
            return py::make_tuple(ext.delta_max, ext.sigma_min);
        },
        py::arg("contents"), py::arg("attributes"));

    m.def("optimal_radius",
          [](Real d_k, std::int64_t n, Real sigma, Real delta, Real beta) {
              return optimal_radius({d_k, n, sigma, delta}, beta);
          },
          py::arg("d_k"), py::arg("n"), py::arg("sigma"), py::arg("delta"), py::arg("beta"));
    m.def("adjusted_candidate_count", &adjusted_candidate_count, py::arg("k"), py::arg("eps"),
          py::arg("delta_h"), py::arg("eta"), py::arg("c"));
    m.def(
        "point_segment_distance",
        [](const Vec& x, const Vec& a, const Vec& b) {
            return point_segment_distance(x, LineSegment{a, b});
        },
        py::arg("x"), py::arg("a"), py::arg("b"));
    m.def(
        "hausdorff_distance",
        [](const Vec& a1, const Vec& b1, const Vec& a2, const Vec& b2) {
            return hausdorff_distance(LineSegment{a1, b1}, LineSegment{a2, b2});
        },
        py::arg("a1"), py::arg("b1"), py::arg("a2"), py::arg("b2"));
    m.def(
        "line_similarity",
        [](const Vec& a1, const Vec& b1, const Vec& a2, const Vec& b2, Real w_d, Real w_p,
           Real w_l, Real d_max) {
            return line_similarity(LineSegment{a1, b1}, LineSegment{a2, b2}, w_d, w_p, w_l, d_max);
        },
        py::arg("a1"), py::arg("b1"), py::arg("a2"), py::arg("b2"), py::arg("w_d") = 0.4,
        py::arg("w_p") = 0.4, py::arg("w_l") = 0.2, py::arg("d_max") = 1.0);
    m.def(
        "range_to_line",
        [](const Vec& q, const Vec& l, const Vec& u, const FusionParams& p) {
            const LineSegment seg = range_to_line({q, l, u}, p);
            return py::make_tuple(seg.a, seg.b);
        },
        py::arg("q"), py::arg("l"), py::arg("u"), py::arg("params"));

    m.def("embed_tokens",
          [](const std::vector<std::string>& tokens, int m, std::uint64_t seed) {
              return embed_tokens(tokens, m, seed);
          },
          py::arg("tokens"), py::arg("m"), py::arg("seed") = 42);

    py::class_<HybridIndex>(m, "HybridIndex")
        .def_static(
            "build",
            [](std::vector<Vec> contents, std::vector<Vec> attributes, Real epsilon_f,
               const std::string& backend, std::optional<Real> alpha, std::optional<Real> beta,
               std::uint64_t seed) {
                HybridIndex::Config cfg;
                cfg.epsilon_f = epsilon_f;
                cfg.backend = backend == "graph" ? BackendKind::graph : BackendKind::flat;
                cfg.graph.seed = seed;
                cfg.alpha_override = alpha;
                cfg.beta_override = beta;
                return HybridIndex::build(std::move(contents), std::move(attributes), cfg);
            },
            py::arg("contents"), py::arg("attributes"), py::arg("epsilon_f") = 1.0,
            py::arg("backend") = "flat", py::arg("alpha") = std::nullopt,
            py::arg("beta") = std::nullopt, py::arg("seed") = 42)
        .def(
            "query",
            [](const HybridIndex& idx, const Vec& content, const Vec& attribute, std::int64_t k,
               Real eps, bool attr_approx) {
                return hits_to_dicts(idx.query(content, attribute, k, eps, attr_approx));
            },
            py::arg("content"), py::arg("attribute"), py::arg("k") = 10, py::arg("eps") = 0.01,
            py::arg("attr_approx") = false)
        .def("candidate_budget", &HybridIndex::candidate_budget, py::arg("attribute"),
             py::arg("k"), py::arg("eps"))
        .def_property_readonly("size", &HybridIndex::size)
        .def_property_readonly("params", &HybridIndex::params)
        .def_property_readonly("fused_points",
                               [](const HybridIndex& idx) { return idx.backend().points(); });

    py::class_<TransformChain>(m, "TransformChain")
        .def_static(
            "build",
            [](std::vector<py::tuple> records, std::vector<int> priority, Real epsilon_f,
               const std::string& backend, std::optional<Real> alpha, std::optional<Real> beta,
               Real alpha_multiplier, std::uint64_t seed) {
                std::vector<Record> recs;
                recs.reserve(records.size());
                for (const py::tuple& t : records) {
                    Record r;
                    r.content = t[0].cast<Vec>();
                    r.attributes = t[1].cast<std::vector<Vec>>();
                    recs.push_back(std::move(r));
                }
                TransformChain::Config cfg;
                cfg.epsilon_f = epsilon_f;
                cfg.backend = backend == "graph" ? BackendKind::graph : BackendKind::flat;
                cfg.graph.seed = seed;
                cfg.alpha_override = alpha;
                cfg.beta_override = beta;
                cfg.alpha_multiplier = alpha_multiplier;
                return TransformChain::build(std::move(recs), PriorityOrder{std::move(priority)},
                                             cfg);
            },
            py::arg("records"), py::arg("priority"), py::arg("epsilon_f") = 1.0,
            py::arg("backend") = "flat", py::arg("alpha") = std::nullopt,
            py::arg("beta") = std::nullopt, py::arg("alpha_multiplier") = 1.0,
            py::arg("seed") = 42)
        .def(
            "query",
            [](const TransformChain& chain, const Vec& content, const std::vector<Vec>& attrs,
               std::int64_t k, Real eps, bool attr_approx) {
                return hits_to_dicts(chain.query(content, attrs, k, eps, attr_approx));
            },
            py::arg("content"), py::arg("attributes"), py::arg("k") = 10, py::arg("eps") = 0.01,
            py::arg("attr_approx") = false)
        .def(
            "verify_monotone_priority",
            [](const TransformChain& chain, const Vec& content, const std::vector<Vec>& attrs,
               std::int64_t k, Real eps) {
                const QueryResult res = chain.query(content, attrs, k, eps, true);
                const auto report = chain.verify_monotone_priority(res, attrs);
                return py::make_tuple(report.monotone, report.variances);
            },
            py::arg("content"), py::arg("attributes"), py::arg("k") = 10, py::arg("eps") = 0.01)
        .def(
            "with_priority",
            [](const TransformChain& chain, std::vector<int> priority) {
                TransformChain::UpdateReport report;
                TransformChain next =
                    chain.with_priority(PriorityOrder{std::move(priority)}, &report);
                return py::make_tuple(std::move(next), report.recomputed_levels);
            },
            py::arg("priority"))
        .def(
            "with_added_attribute",
            [](const TransformChain& chain, std::vector<Vec> values, int position) {
                return chain.with_added_attribute(std::move(values), position);
            },
            py::arg("values"), py::arg("position"))
        .def_property_readonly("num_attributes", &TransformChain::num_attributes)
        .def_property_readonly("fused_points",
                               [](const TransformChain& chain) { return chain.fused(); });

    py::class_<RangeIndex>(m, "RangeIndex")
        .def_static(
            "build",
            [](std::vector<Vec> contents, std::vector<Vec> attributes, std::optional<Real> alpha,
               std::optional<Real> beta, Real delta, std::int64_t radius_k, std::size_t max_lines,
               std::uint64_t seed) {
                RangeIndexConfig cfg;
                cfg.alpha_override = alpha;
                cfg.beta_override = beta;
                cfg.delta = delta;
                cfg.radius_k = radius_k;
                cfg.max_lines = max_lines;
                cfg.seed = seed;
                return RangeIndex::build(std::move(contents), std::move(attributes), cfg);
            },
            py::arg("contents"), py::arg("attributes"), py::arg("alpha") = std::nullopt,
            py::arg("beta") = std::nullopt, py::arg("delta") = 0.05, py::arg("radius_k") = 100,
            py::arg("max_lines") = 10000, py::arg("seed") = 42)
        .def(
            "query",
            [](const RangeIndex& rix, const Vec& q, const Vec& l, const Vec& u, std::int64_t k,
               Real eps) { return hits_to_dicts(rix.query(q, l, u, k, eps)); },
            py::arg("q"), py::arg("l"), py::arg("u"), py::arg("k") = 10, py::arg("eps") = 0.01)
        .def_property_readonly("num_lines",
                               [](const RangeIndex& rix) { return rix.lines().size(); })
        .def_property_readonly("hausdorff_slack", &RangeIndex::hausdorff_slack);

    m.def(
        "load_vectors",
        [](const std::string& path, const std::string& format) {
            VectorFormat f = VectorFormat::csv;
            if (format == "fvecs")
                f = VectorFormat::fvecs;
            else if (format == "bvecs")
                f = VectorFormat::bvecs;
            return load_vectors(path, f);
        },
        py::arg("path"), py::arg("format") = "fvecs");
    m.def("save_vectors_fvecs", &save_vectors_fvecs, py::arg("path"), py::arg("vectors"));
}
