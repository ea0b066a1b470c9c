#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "fusedann/types.hpp"

namespace fusedann::testing {

inline Vec random_vec(std::mt19937_64& rng, std::size_t d, Real lo = -1.0, Real hi = 1.0) {
    std::uniform_real_distribution<Real> dist(lo, hi);
    Vec v(d);
    for (Real& x : v)
        x = dist(rng);
    return v;
}

inline Vec gaussian_vec(std::mt19937_64& rng, std::size_t d, Real sigma = 1.0) {
    std::normal_distribution<Real> dist(0.0, sigma);
    Vec v(d);
    for (Real& x : v)
        x = dist(rng);
    return v;
}

/// Brute-force top-k by (distance, id); the reference for every backend test.
inline std::vector<std::pair<Real, std::int64_t>> naive_knn(const std::vector<Vec>& points,
                                                            const Vec& q, std::size_t k) {
    std::vector<std::pair<Real, std::int64_t>> all;
    all.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        all.emplace_back(euclidean_distance(points[i], q), static_cast<std::int64_t>(i));
    std::sort(all.begin(), all.end());
    if (all.size() > k)
        all.resize(k);
    return all;
}

/// Zipf(s) sampler over ranks 0..classes-1 via CDF inversion.
class ZipfSampler {
public:
    ZipfSampler(std::size_t classes, Real s) : cdf_(classes) {
        Real total = 0.0;
        for (std::size_t r = 0; r < classes; ++r) {
            total += 1.0 / std::pow(static_cast<Real>(r + 1), s);
            cdf_[r] = total;
        }
        for (Real& c : cdf_)
            c /= total;
    }
    std::size_t operator()(std::mt19937_64& rng) const {
        std::uniform_real_distribution<Real> u(0.0, 1.0);
        const Real x = u(rng);
        return static_cast<std::size_t>(
            std::lower_bound(cdf_.begin(), cdf_.end(), x) - cdf_.begin());
    }

private:
    std::vector<Real> cdf_;
};

} // namespace fusedann::testing
