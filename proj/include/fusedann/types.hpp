#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fusedann/errors.hpp"

namespace fusedann {

using Real = double;
using Vec = std::vector<Real>;

/// One ingested item: a content vector plus its ordered attribute vectors.
struct Record {
    Vec content;
    std::vector<Vec> attributes;
};

inline Real squared_distance(std::span<const Real> a, std::span<const Real> b) {
    Real acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Real diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

inline Real euclidean_distance(std::span<const Real> a, std::span<const Real> b) {
    if (a.size() != b.size())
        throw InvalidDimensionError("euclidean_distance: size mismatch");
    return std::sqrt(squared_distance(a, b));
}

inline Real norm(std::span<const Real> a) {
    Real acc = 0.0;
    for (Real x : a)
        acc += x * x;
    return std::sqrt(acc);
}

inline Real dot(std::span<const Real> a, std::span<const Real> b) {
    Real acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

/// Ceiling that ignores float noise just above an integer, so formula results
/// like 100.0000000000002 round to 100 instead of 101.
inline std::int64_t ceil_snapped(Real x) {
    return static_cast<std::int64_t>(std::ceil(x - 1e-9));
}

} // namespace fusedann
