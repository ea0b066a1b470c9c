#include "fusedann/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fusedann {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_token(const std::string& token, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : token) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

[[noreturn]] void parse_fail(const std::string& path, std::uint64_t offset,
                             const std::string& what) {
    throw ParseError(path + ": " + what + " at byte offset " + std::to_string(offset));
}

bool is_numeric_cell(const std::string& cell) {
    if (cell.empty())
        return false;
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace.
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

} // namespace

std::vector<Vec> load_vectors(const std::string& path, VectorFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError(path + ": cannot open file");

    std::vector<Vec> out;
    if (format == VectorFormat::csv) {
        std::string line;
        std::uint64_t offset = 0;
        std::size_t dim = 0;
        while (std::getline(in, line)) {
            const std::uint64_t line_start = offset;
            offset += line.size() + 1;
            if (line.empty())
                continue;
            const auto cells = split_csv_line(line);
            Vec v;
            v.reserve(cells.size());
            for (const std::string& cell : cells) {
                double value = 0.0;
                auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
                if (ec != std::errc() || ptr != cell.data() + cell.size())
                    parse_fail(path, line_start, "malformed numeric cell '" + cell + "'");
                v.push_back(value);
            }
            if (dim == 0)
                dim = v.size();
            else if (v.size() != dim)
                parse_fail(path, line_start, "inconsistent vector dimension");
            out.push_back(std::move(v));
        }
        return out;
    }

    const bool bytes = format == VectorFormat::bvecs;
    std::uint64_t offset = 0;
    while (true) {
        std::int32_t dim = 0;
        in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
        if (in.gcount() == 0 && in.eof())
            break;
        if (in.gcount() != sizeof(dim))
            parse_fail(path, offset, "truncated record header");
        if (dim < 1 || dim > (1 << 24))
            parse_fail(path, offset, "implausible dimension " + std::to_string(dim));
        offset += sizeof(dim);
        Vec v(static_cast<std::size_t>(dim));
        if (bytes) {
            std::vector<std::uint8_t> buf(static_cast<std::size_t>(dim));
            in.read(reinterpret_cast<char*>(buf.data()), dim);
            if (in.gcount() != dim)
                parse_fail(path, offset, "truncated byte payload");
            for (std::size_t i = 0; i < buf.size(); ++i)
                v[i] = static_cast<Real>(buf[i]);
            offset += static_cast<std::uint64_t>(dim);
        } else {
            std::vector<float> buf(static_cast<std::size_t>(dim));
            const std::streamsize want = static_cast<std::streamsize>(dim * sizeof(float));
            in.read(reinterpret_cast<char*>(buf.data()), want);
            if (in.gcount() != want)
                parse_fail(path, offset, "truncated float payload");
            for (std::size_t i = 0; i < buf.size(); ++i)
                v[i] = static_cast<Real>(buf[i]);
            offset += static_cast<std::uint64_t>(want);
        }
        if (!out.empty() && out[0].size() != v.size())
            parse_fail(path, offset, "inconsistent vector dimension");
        out.push_back(std::move(v));
    }
    return out;
}

void save_vectors_fvecs(const std::string& path, const std::vector<Vec>& vectors) {
    std::ofstream outf(path, std::ios::binary | std::ios::trunc);
    if (!outf)
        throw ParseError(path + ": cannot open file for writing");
    for (const Vec& v : vectors) {
        const std::int32_t dim = static_cast<std::int32_t>(v.size());
        outf.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
        for (Real x : v) {
            const float f = static_cast<float>(x);
            outf.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
    }
}

TokenEmbedder::TokenEmbedder(int m, std::uint64_t seed) : m_(m), seed_(seed) {
    if (m < 1)
        throw InvalidArgumentError("TokenEmbedder: m must be >= 1");
    // side^m slots must fit in 64 bits and every coordinate must stay
    // exactly representable as a double.
    const int bits = std::max(1, std::min(40, 62 / m));
    side_ = 1ULL << bits;
}

Vec TokenEmbedder::cell_vector(std::uint64_t slot) const {
    Vec v(static_cast<std::size_t>(m_));
    for (int h = 0; h < m_; ++h) {
        v[h] = static_cast<Real>(slot % side_);
        slot /= side_;
    }
    return v;
}

Vec TokenEmbedder::embed(const std::string& token) {
    if (auto it = mapping_.find(token); it != mapping_.end())
        return it->second;
    // Grid cells are unit-spaced integer points, so distinct occupied cells
    // are at distance >= 1.
    std::uint64_t capacity = 1;
    for (int h = 0; h < m_ && capacity <= (1ULL << 62) / side_; ++h)
        capacity *= side_;
    std::uint64_t slot = hash_token(token, seed_) % capacity;
    while (true) {
        auto it = occupied_.find(slot);
        if (it == occupied_.end())
            break;
        slot = (slot + 1) % capacity; // linear probe, never an error
    }
    occupied_.emplace(slot, token);
    Vec v = cell_vector(slot);
    mapping_.emplace(token, v);
    return v;
}

TokenEmbedder TokenEmbedder::restore(int m, std::uint64_t seed, std::map<std::string, Vec> mapping) {
    TokenEmbedder e(m, seed);
    for (auto& [token, vec] : mapping) {
        std::uint64_t slot = 0;
        std::uint64_t mul = 1;
        for (int h = 0; h < m; ++h) {
            slot += static_cast<std::uint64_t>(vec[h]) * mul;
            mul *= e.side_;
        }
        e.occupied_.emplace(slot, token);
    }
    e.mapping_ = std::move(mapping);
    return e;
}

std::vector<Vec> embed_tokens(const std::vector<std::string>& tokens, int m, std::uint64_t seed,
                              TokenEmbedder* embedder_out) {
    TokenEmbedder embedder(m, seed);
    std::vector<Vec> out;
    out.reserve(tokens.size());
    for (const std::string& token : tokens)
        out.push_back(embedder.embed(token));
    if (embedder_out)
        *embedder_out = std::move(embedder);
    return out;
}

AttributeTable load_attributes(const std::string& path, int categorical_m, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path + ": cannot open file");

    std::string line;
    std::uint64_t offset = 0;
    if (!std::getline(in, line))
        parse_fail(path, 0, "missing header");
    offset += line.size() + 1;
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "id")
        parse_fail(path, 0, "header must start with 'id'");
    const std::size_t data_columns = header.size() - 1;
    if (data_columns == 0)
        parse_fail(path, 0, "no attribute columns");

    // Optional schema line groups data columns into attributes.
    std::vector<int> widths;
    std::streampos after_header = in.tellg();
    if (std::getline(in, line) && line.rfind("#m,", 0) == 0) {
        for (const std::string& cell : split_csv_line(line.substr(3))) {
            int w = 0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), w);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || w < 1)
                parse_fail(path, offset, "bad schema width '" + cell + "'");
            widths.push_back(w);
        }
        std::size_t total = 0;
        for (int w : widths)
            total += static_cast<std::size_t>(w);
        if (total != data_columns)
            parse_fail(path, offset, "schema widths do not cover the data columns");
        offset += line.size() + 1;
    } else {
        in.clear();
        in.seekg(after_header);
        widths.assign(data_columns, 1);
    }
    const std::size_t F = widths.size();

    std::vector<std::vector<std::vector<std::string>>> raw(F); // [attr][record][component]
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        const std::uint64_t line_start = offset;
        offset += line.size() + 1;
        if (line.empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != data_columns + 1)
            parse_fail(path, line_start,
                       "expected " + std::to_string(data_columns + 1) + " cells, got " +
                           std::to_string(cells.size()));
        std::size_t col = 1;
        for (std::size_t a = 0; a < F; ++a) {
            std::vector<std::string> group;
            for (int w = 0; w < widths[a]; ++w)
                group.push_back(cells[col++]);
            raw[a].push_back(std::move(group));
        }
        ++row_index;
    }
    if (row_index == 0)
        parse_fail(path, offset, "no data rows");

    AttributeTable table;
    table.attributes.resize(F);
    table.categorical.resize(F, false);
    std::size_t name_col = 1;
    for (std::size_t a = 0; a < F; ++a) {
        table.names.push_back(header[name_col]);
        name_col += static_cast<std::size_t>(widths[a]);
    }

    for (std::size_t a = 0; a < F; ++a) {
        bool numeric = true;
        for (const auto& group : raw[a]) {
            for (const std::string& cell : group) {
                if (!is_numeric_cell(cell)) {
                    numeric = false;
                    break;
                }
            }
            if (!numeric)
                break;
        }
        if (numeric) {
            auto& dst = table.attributes[a];
            dst.reserve(raw[a].size());
            for (const auto& group : raw[a]) {
                Vec v;
                v.reserve(group.size());
                for (const std::string& cell : group) {
                    double value = 0.0;
                    std::from_chars(cell.data(), cell.data() + cell.size(), value);
                    v.push_back(value);
                }
                dst.push_back(std::move(v));
            }
        } else {
            if (widths[a] != 1)
                throw ParseError(path + ": categorical attribute '" + table.names[a] +
                                 "' must be a single column");
            table.categorical[a] = true;
            std::vector<std::string> tokens;
            tokens.reserve(raw[a].size());
            for (const auto& group : raw[a])
                tokens.push_back(group[0]);
            TokenEmbedder embedder(categorical_m, seed + a);
            auto& dst = table.attributes[a];
            dst.reserve(tokens.size());
            for (const std::string& token : tokens)
                dst.push_back(embedder.embed(token));
            table.embedders.push_back(std::move(embedder));
        }
    }
    return table;
}

std::vector<Record> DatasetBundle::records() const {
    std::vector<Record> out;
    out.reserve(contents.size());
    for (std::size_t i = 0; i < contents.size(); ++i) {
        Record r;
        r.content = contents[i];
        for (const auto& attr : attributes.attributes)
            r.attributes.push_back(attr[i]);
        out.push_back(std::move(r));
    }
    return out;
}

DatasetBundle load_dataset(const std::string& vectors_path, VectorFormat format,
                           const std::string& attributes_path, int categorical_m,
                           std::uint64_t seed) {
    DatasetBundle bundle;
    bundle.contents = load_vectors(vectors_path, format);
    bundle.attributes = load_attributes(attributes_path, categorical_m, seed);
    for (const auto& attr : bundle.attributes.attributes) {
        if (attr.size() != bundle.contents.size())
            throw InvalidArgumentError("load_dataset: vector count " +
                                       std::to_string(bundle.contents.size()) +
                                       " != attribute row count " + std::to_string(attr.size()));
    }
    return bundle;
}

} // namespace fusedann
