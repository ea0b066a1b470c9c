#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fusedann/types.hpp"

namespace fusedann {

enum class VectorFormat { fvecs, bvecs, csv };

/// Reads a vector file. fvecs/bvecs records are little-endian
/// (int32 dim, then dim float32 / uint8 values widened to double); csv is
/// one comma-separated vector per line. Malformed input raises ParseError
/// carrying the byte offset.
std::vector<Vec> load_vectors(const std::string& path, VectorFormat format);

/// Writes vectors in fvecs layout (float32 payload).
void save_vectors_fvecs(const std::string& path, const std::vector<Vec>& vectors);

/// Deterministic categorical embedding: tokens map through a seeded hash
/// onto an m-dimensional integer grid, so equal tokens share a vector and
/// distinct tokens sit at distance >= 1. Hash collisions between distinct
/// tokens are resolved by linear probing over the grid.
class TokenEmbedder {
public:
    TokenEmbedder(int m, std::uint64_t seed);

    Vec embed(const std::string& token);
    const std::map<std::string, Vec>& mapping() const { return mapping_; }
    int dimension() const { return m_; }
    std::uint64_t seed() const { return seed_; }

    static TokenEmbedder restore(int m, std::uint64_t seed, std::map<std::string, Vec> mapping);

private:
    Vec cell_vector(std::uint64_t slot) const;

    int m_ = 1;
    std::uint64_t seed_ = 0;
    std::uint64_t side_ = 1 << 16; // grid side length per dimension
    std::map<std::string, Vec> mapping_;
    std::map<std::uint64_t, std::string> occupied_;
};

/// Embeds a column of categorical tokens; numeric columns pass through
/// untouched elsewhere.
std::vector<Vec> embed_tokens(const std::vector<std::string>& tokens, int m, std::uint64_t seed,
                              TokenEmbedder* embedder_out = nullptr);

/// Parsed attribute table: per-attribute vectors for every record, in file
/// order. Categorical attributes record the token that produced each value.
struct AttributeTable {
    // attributes[a][record] is the value of attribute a.
    std::vector<std::vector<Vec>> attributes;
    std::vector<std::string> names;
    std::vector<bool> categorical;
    std::vector<TokenEmbedder> embedders; // one per categorical attribute, by attribute index order
};

/// Parses the attribute CSV: header `id,name_1,...`, optional second line
/// `#m,m_1,...,m_F` grouping the data columns into multi-dimensional
/// attributes (default: one column per attribute). Non-numeric columns are
/// treated as categorical tokens and embedded to `categorical_m` dims.
AttributeTable load_attributes(const std::string& path, int categorical_m, std::uint64_t seed);

/// Vector + attribute files combined into aligned records.
struct DatasetBundle {
    std::vector<Vec> contents;
    AttributeTable attributes;

    std::size_t size() const { return contents.size(); }
    int content_dim() const { return contents.empty() ? 0 : static_cast<int>(contents[0].size()); }
    int num_attributes() const { return static_cast<int>(attributes.attributes.size()); }
    std::vector<Record> records() const;
};

DatasetBundle load_dataset(const std::string& vectors_path, VectorFormat format,
                           const std::string& attributes_path, int categorical_m,
                           std::uint64_t seed);

} // namespace fusedann
