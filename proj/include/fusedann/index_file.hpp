#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fusedann/dataset_io.hpp"
#include "fusedann/hybrid_index.hpp"
#include "fusedann/range_index.hpp"
#include "fusedann/transform_chain.hpp"

namespace fusedann {

/// Per-categorical-attribute token embedding, persisted so queries can map
/// tokens the same way the build did.
struct TokenMap {
    int attribute = 0;
    int m = 1;
    std::uint64_t seed = 0;
    std::map<std::string, Vec> mapping;
};

/// Everything a saved index can carry: exactly one of the single-attribute
/// index or the multi-attribute chain, an optional range section, and the
/// dataset metadata the CLI needs to interpret textual queries.
struct IndexArtifact {
    std::optional<HybridIndex> hybrid;
    std::optional<TransformChain> chain;
    std::optional<RangeIndex> range;
    std::vector<std::string> attribute_names;
    std::vector<TokenMap> token_maps;
};

/// Binary, little-endian, 8-byte magic FUSEDIDX, versioned header and a
/// trailing FNV-1a checksum over the payload. Same inputs produce
/// byte-identical files.
void save_index(const std::string& path, const IndexArtifact& artifact);

/// Rejects bad magic, unsupported versions, checksum mismatches and
/// truncated files with LoadError.
IndexArtifact load_index(const std::string& path);

} // namespace fusedann
