#include "fusedann/backend.hpp"

#include <algorithm>

#include "fusedann/hnsw.hpp"

namespace fusedann {

namespace {

/// Exact scan; the oracle backend every other backend is checked against.
class FlatBackend final : public Backend {
public:
    explicit FlatBackend(std::vector<Vec> points) : points_(std::move(points)) {
        if (points_.empty())
            throw EmptyDatasetError("FlatBackend: no points");
        dim_ = static_cast<int>(points_[0].size());
        for (const Vec& p : points_)
            if (static_cast<int>(p.size()) != dim_)
                throw InvalidDimensionError("FlatBackend: inconsistent dimensions");
    }

    std::vector<SearchHit> search(const Vec& q, std::int64_t k, std::int64_t) const override {
        if (k < 1)
            throw InvalidArgumentError("FlatBackend::search: k must be >= 1");
        if (static_cast<int>(q.size()) != dim_)
            throw InvalidDimensionError("FlatBackend::search: query dimension mismatch");
        std::vector<SearchHit> all;
        all.reserve(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i)
            all.push_back({static_cast<std::int64_t>(i), euclidean_distance(points_[i], q)});
        const auto cmp = [](const SearchHit& a, const SearchHit& b) {
            return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
        };
        const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
        std::partial_sort(all.begin(), all.begin() + keep, all.end(), cmp);
        all.resize(keep);
        return all;
    }

    std::int64_t size() const override { return static_cast<std::int64_t>(points_.size()); }
    int dim() const override { return dim_; }
    BackendKind kind() const override { return BackendKind::flat; }
    const std::vector<Vec>& points() const override { return points_; }

private:
    std::vector<Vec> points_;
    int dim_ = 0;
};

} // namespace

std::unique_ptr<Backend> build_backend(std::vector<Vec> points, BackendKind kind,
                                       const GraphParams& params) {
    switch (kind) {
    case BackendKind::flat:
        return std::make_unique<FlatBackend>(std::move(points));
    case BackendKind::graph:
        return std::make_unique<HnswBackend>(std::move(points), params);
    }
    throw InvalidArgumentError("build_backend: unknown backend kind");
}

} // namespace fusedann
