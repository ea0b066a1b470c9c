#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fusedann/types.hpp"

namespace fusedann {

/// Strictly-positive margin keeping alpha and beta above 1 even for
/// degenerate datasets (zero diameter, no separation requirement).
inline constexpr Real kFloorMargin = 1e-6;

/// Parameters governing one fusion application over (content, attribute)
/// pairs: block l of the output is (v^(l) - alpha * f) / beta.
///
/// alpha controls how far apart different attribute values land, beta
/// compresses all distances so same-attribute clusters stay within
/// epsilon_f. delta_max / sigma_min are the dataset extremes the values
/// were derived from; sigma_min is +infinity when the dataset had a single
/// attribute class and no separation was required.
struct FusionParams {
    Real alpha = 0.0;
    Real beta = 0.0;
    Real epsilon_f = 0.0;
    Real delta_max = 0.0;
    Real sigma_min = 0.0;
    int d = 0;
    int m = 0;

    /// Checks alpha > 1, beta > 1 and dimension sanity. Does not re-derive
    /// the closed-form bounds; explicitly overridden parameters only need
    /// to clear these floors.
    void validate_basic() const;
};

/// Splits v into ceil(d/m) blocks; the first floor(d/m) have length m and,
/// when m does not divide d, the final block has length d mod m.
/// Concatenating the blocks reproduces v exactly.
std::vector<Vec> partition_blocks(const Vec& v, int m);

/// Fuses a content vector with an attribute vector: each block of v gets
/// alpha * f subtracted (a short final block subtracts the matching prefix
/// of f) and the result is divided by beta. Output length equals d.
Vec fuse(const Vec& v, const Vec& f, Real alpha, Real beta, int m);
Vec fuse(const Vec& v, const Vec& f, const FusionParams& p);

/// Dataset extremes driving parameter selection. sigma_min is empty when
/// every record shares one attribute class, in which case no inter-class
/// separation is needed and alpha may sit at its floor.
struct DatasetExtremes {
    Real delta_max = 0.0;
    std::optional<Real> sigma_min;
};

/// Exhaustive pass over the dataset: delta_max is the maximum pairwise
/// content distance, sigma_min the minimum distance between attribute
/// vectors of different classes (classes are bitwise-equal attribute
/// values). Deterministic regardless of evaluation order.
DatasetExtremes estimate_extremes(std::span<const Vec> contents, std::span<const Vec> attrs);

/// Closed-form parameter choice, tightest values satisfying the cluster
/// bounds:
///   beta  = max(delta_max / epsilon_f, 1 + margin)
///   alpha = max((beta * delta_max + epsilon_f * beta^2) / (sigma_min * sqrt(d/m)),
///               1 + margin)
/// The alpha bound is the separation lower bound with the intra-cluster
/// constraint substituted in, expanded so it stays finite at delta_max = 0.
/// An absent sigma_min means no separation constraint: alpha takes the floor.
///
/// A shorter form sometimes quoted for the minimum,
/// alpha = delta_max / (sigma_min * sqrt(d/m)) * (1 + epsilon_f), drops the
/// beta dependence and is weaker than the bound above; this function keeps
/// the full bound at equality.
FusionParams select_fusion_params(Real delta_max, std::optional<Real> sigma_min, int d, int m,
                                  Real epsilon_f);

} // namespace fusedann
