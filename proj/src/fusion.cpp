#include "fusedann/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <unordered_map>

namespace fusedann {

void FusionParams::validate_basic() const {
    if (d < 1 || m < 1 || m > d)
        throw InvalidDimensionError("FusionParams: need 1 <= m <= d, got m=" + std::to_string(m) +
                                    " d=" + std::to_string(d));
    if (!(alpha > 1.0))
        throw InvalidArgumentError("FusionParams: alpha must exceed 1");
    if (!(beta > 1.0))
        throw InvalidArgumentError("FusionParams: beta must exceed 1");
    if (!(epsilon_f > 0.0))
        throw InvalidArgumentError("FusionParams: epsilon_f must be positive");
}

std::vector<Vec> partition_blocks(const Vec& v, int m) {
    const int d = static_cast<int>(v.size());
    if (m < 1 || m > d)
        throw InvalidDimensionError("partition_blocks: need 1 <= m <= d, got m=" +
                                    std::to_string(m) + " d=" + std::to_string(d));
    std::vector<Vec> blocks;
    blocks.reserve(static_cast<std::size_t>((d + m - 1) / m));
    for (int start = 0; start < d; start += m) {
        const int len = std::min(m, d - start);
        blocks.emplace_back(v.begin() + start, v.begin() + start + len);
    }
    return blocks;
}

Vec fuse(const Vec& v, const Vec& f, Real alpha, Real beta, int m) {
    const int d = static_cast<int>(v.size());
    if (static_cast<int>(f.size()) != m)
        throw InvalidDimensionError("fuse: attribute length " + std::to_string(f.size()) +
                                    " != m=" + std::to_string(m));
    if (m < 1 || m > d)
        throw InvalidDimensionError("fuse: need 1 <= m <= d, got m=" + std::to_string(m) +
                                    " d=" + std::to_string(d));
    Vec out(v.size());
    for (int start = 0; start < d; start += m) {
        const int len = std::min(m, d - start);
        // A short final block pairs with the leading prefix of f.
        for (int h = 0; h < len; ++h)
            out[start + h] = (v[start + h] - alpha * f[h]) / beta;
    }
    return out;
}

Vec fuse(const Vec& v, const Vec& f, const FusionParams& p) {
    if (static_cast<int>(v.size()) != p.d)
        throw InvalidDimensionError("fuse: content length " + std::to_string(v.size()) +
                                    " != d=" + std::to_string(p.d));
    return fuse(v, f, p.alpha, p.beta, p.m);
}

namespace {

std::string attribute_key(const Vec& a) {
    std::string key(a.size() * sizeof(Real), '\0');
    if (!a.empty())
        std::memcpy(key.data(), a.data(), key.size());
    return key;
}

} // namespace

DatasetExtremes estimate_extremes(std::span<const Vec> contents, std::span<const Vec> attrs) {
    if (contents.empty())
        throw EmptyDatasetError("estimate_extremes: empty dataset");
    if (attrs.size() != contents.size())
        throw InvalidArgumentError("estimate_extremes: contents/attributes size mismatch");
    const std::size_t n = contents.size();
    const std::size_t dim = contents[0].size();
    const std::size_t m = attrs[0].size();
    for (std::size_t i = 0; i < n; ++i) {
        if (contents[i].size() != dim || attrs[i].size() != m)
            throw InvalidDimensionError("estimate_extremes: ragged dataset");
    }

    DatasetExtremes ext;
    Real max_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j)
            max_sq = std::max(max_sq, squared_distance(contents[i], contents[j]));
    }
    ext.delta_max = std::sqrt(max_sq);

    // Attribute classes are bitwise-equal values, so cross-class distances
    // reduce to distances between the distinct values themselves.
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<const Vec*> distinct;
    for (const Vec& a : attrs) {
        auto [it, inserted] = seen.emplace(attribute_key(a), distinct.size());
        if (inserted)
            distinct.push_back(&a);
    }
    if (distinct.size() < 2) {
        ext.sigma_min = std::nullopt;
        return ext;
    }
    Real min_sq = std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        for (std::size_t j = i + 1; j < distinct.size(); ++j)
            min_sq = std::min(min_sq, squared_distance(*distinct[i], *distinct[j]));
    }
    ext.sigma_min = std::sqrt(min_sq);
    return ext;
}

FusionParams select_fusion_params(Real delta_max, std::optional<Real> sigma_min, int d, int m,
                                  Real epsilon_f) {
    if (d < 1 || m < 1 || m > d)
        throw InvalidDimensionError("select_fusion_params: need 1 <= m <= d");
    if (!(epsilon_f > 0.0))
        throw InvalidArgumentError("select_fusion_params: epsilon_f must be positive");
    if (delta_max < 0.0)
        throw InvalidArgumentError("select_fusion_params: delta_max must be >= 0");
    if (sigma_min && !(*sigma_min > 0.0))
        throw DegenerateSeparationError(
            "select_fusion_params: distinct attribute classes share a value (sigma_min = 0)");

    FusionParams p;
    p.epsilon_f = epsilon_f;
    p.delta_max = delta_max;
    p.sigma_min = sigma_min ? *sigma_min : std::numeric_limits<Real>::infinity();
    p.d = d;
    p.m = m;

    p.beta = std::max(delta_max / epsilon_f, 1.0 + kFloorMargin);
    // (beta*delta + eps_f*beta^2) / (sigma*sqrt(d/m)) equals the separation
    // bound beta*delta/(sigma*sqrt(d/m)) * (1 + eps_f*beta/delta) expanded,
    // and remains finite when delta_max = 0.
    Real lower = 0.0;
    if (sigma_min) {
        const Real ratio = std::sqrt(static_cast<Real>(d) / static_cast<Real>(m));
        lower = (p.beta * delta_max + epsilon_f * p.beta * p.beta) / (*sigma_min * ratio);
    }
    p.alpha = std::max(lower, 1.0 + kFloorMargin);
    p.validate_basic();
    return p;
}

} // namespace fusedann
