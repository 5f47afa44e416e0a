#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "llae/dataset.hpp"
#include "llae/llae.hpp"

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace llae {

// binary and count are for interactions and reject negatives; real takes any finite value.
enum class ValueMode { binary, count, real };

struct Triple {
    std::size_t row;
    std::size_t col;
    double value;

    friend bool operator==(const Triple&, const Triple&) = default;
};

/// Parsed "row<TAB>col<TAB>value" file with ids interned in order of first appearance.
struct TripleList {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    std::vector<Triple> triples;  // one per (row, col), in order of first appearance
    std::size_t collapsed = 0;    // duplicate lines merged into an earlier triple
    std::size_t zero_dropped = 0; // zero-valued lines skipped in binary mode

    bool empty() const noexcept { return triples.empty(); }
};

/// String to dense index, first come first numbered.
class Interner {
public:
    Interner() = default;
    explicit Interner(const std::vector<std::string>& ids) {
        for (const auto& id : ids) intern(id);
    }

    std::size_t intern(std::string_view id) {
        auto [it, added] = index_.try_emplace(std::string(id), ids_.size());
        if (added) ids_.emplace_back(id);
        return it->second;
    }
    // Index of `id`, or size() when unknown.
    std::size_t find(const std::string& id) const {
        const auto it = index_.find(id);
        return it == index_.end() ? ids_.size() : it->second;
    }
    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> ids_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

inline std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

inline std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

}  // namespace detail

inline TripleList read_sparse_triples(std::istream& in, ValueMode mode) {
    TripleList out;
    Interner rows, cols;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> position;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;

        const auto t1 = text.find('\t');
        const auto t2 = t1 == std::string_view::npos ? t1 : text.find('\t', t1 + 1);
        if (t2 == std::string_view::npos || text.find('\t', t2 + 1) != std::string_view::npos) {
            throw ParseError("expected row_id<TAB>col_id<TAB>value", lineno);
        }
        const std::string_view row_id = text.substr(0, t1);
        const std::string_view col_id = text.substr(t1 + 1, t2 - t1 - 1);
        if (row_id.empty() || col_id.empty()) throw ParseError("empty id", lineno);
        double value = 0.0;
        if (!detail::parse_double(text.substr(t2 + 1), value)) {
            throw ParseError("bad value '" + std::string(text.substr(t2 + 1)) + "'", lineno);
        }
        if (value < 0.0 && mode != ValueMode::real) {
            throw ParseError("negative value " + detail::format_double(value), lineno);
        }

        if (mode == ValueMode::binary) {
            if (value == 0.0) {
                ++out.zero_dropped;
                continue;
            }
            value = 1.0;
        }
        const std::size_t r = rows.intern(row_id);
        const std::size_t c = cols.intern(col_id);
        const auto [it, added] = position.try_emplace({r, c}, out.triples.size());
        if (added) {
            out.triples.push_back({r, c, value});
        } else {
            ++out.collapsed;
            Triple& t = out.triples[it->second];
            t.value = mode == ValueMode::binary ? 1.0 : t.value + value;
        }
    }
    out.row_ids = rows.ids();
    out.col_ids = cols.ids();
    return out;
}

inline TripleList load_sparse_triples(const std::string& path, ValueMode mode) {
    auto in = detail::open_input(path);
    return read_sparse_triples(in, mode);
}

inline void write_sparse_triples(std::ostream& out, const TripleList& list) {
    for (const Triple& t : list.triples) {
        out << list.row_ids.at(t.row) << '\t' << list.col_ids.at(t.col) << '\t' << detail::format_double(t.value)
            << '\n';
    }
}

inline void save_sparse_triples(const std::string& path, const TripleList& list) {
    auto out = detail::open_output(path);
    write_sparse_triples(out, list);
    if (!out) throw DataError("write failed for '" + path + "'");
}

/// Dense (columns x users) matrix from triples whose rows are users.
/// Columns not in `columns` are skipped and counted in `unknown`.
inline Matrix densify(const TripleList& list, const Interner& users, const Interner& columns, std::size_t* unknown = nullptr) {
    Matrix m(columns.size(), users.size());
    std::size_t skipped = 0;
    for (const Triple& t : list.triples) {
        const std::size_t u = users.find(list.row_ids[t.row]);
        const std::size_t c = columns.find(list.col_ids[t.col]);
        if (u == users.size()) continue;
        if (c == columns.size()) {
            ++skipped;
            continue;
        }
        m(c, u) += t.value;
    }
    if (unknown) *unknown = skipped;
    return m;
}

struct AssembledDataset {
    InteractionDataset dataset;
    std::size_t users_without_behavior = 0;
    std::size_t users_without_attributes = 0;
};

/// Users numbered in order of appearance, behavior file first; each side is zero for users it lacks.
inline AssembledDataset assemble(const TripleList& behavior, const TripleList& attributes) {
    Interner users(behavior.row_ids);
    for (const auto& id : attributes.row_ids) users.intern(id);
    if (users.size() == 0) throw DataError("assemble: no users in either source");

    AssembledDataset out;
    InteractionDataset& d = out.dataset;
    d.user_ids = users.ids();
    d.item_ids = behavior.col_ids;
    d.attribute_ids = attributes.col_ids;
    d.x = densify(behavior, users, Interner(behavior.col_ids));
    d.s = densify(attributes, users, Interner(attributes.col_ids));
    out.users_without_attributes = users.size() - attributes.row_ids.size();
    out.users_without_behavior = users.size() - behavior.row_ids.size();
    return out;
}

/// Headerless comma-separated reals, one matrix row per line.
inline Matrix read_dense_csv(std::istream& in) {
    std::vector<double> data;
    std::size_t cols = 0, rows = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::size_t count = 0;
        std::string_view rest = line;
        while (true) {
            const auto comma = rest.find(',');
            double v = 0.0;
            if (!detail::parse_double(rest.substr(0, comma), v)) {
                throw ParseError("bad number '" + std::string(detail::trim(rest.substr(0, comma))) + "'", lineno);
            }
            data.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) cols = count;
        if (count != cols) {
            throw ParseError("expected " + std::to_string(cols) + " fields, found " + std::to_string(count), lineno);
        }
        ++rows;
    }
    return Matrix(rows, cols, std::move(data));
}

inline Matrix load_dense_csv(const std::string& path) {
    auto in = detail::open_input(path);
    return read_dense_csv(in);
}

inline void write_dense_csv(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_double(m(i, j));
        }
        out << '\n';
    }
}

inline void save_dense_csv(const std::string& path, const Matrix& m) {
    auto out = detail::open_output(path);
    write_dense_csv(out, m);
    if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Model files
//
//   "LLAE" | u32 version | config | state | u64 k, d, trace length |
//   W row-major f64 | trace f64 | u64 FNV-1a of everything after the magic
//
// All integers and floats little-endian.

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::array<char, 4> kModelMagic{'L', 'L', 'A', 'E'};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

class ByteWriter {
public:
    template <class T>
    void put(T v) {
        char raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        bytes.append(raw, sizeof(T));
    }
    std::string bytes;
};

class ByteReader {
public:
    ByteReader(std::string_view bytes) : bytes_(bytes) {}

    template <class T>
    T get() {
        if (bytes_.size() - pos_ < sizeof(T)) throw TruncatedError("model file is truncated");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const TrainedModel& m) {
    detail::ByteWriter w;
    w.bytes.append(kModelMagic.data(), kModelMagic.size());
    w.put<std::uint32_t>(kModelFormatVersion);
    const ModelConfig& c = m.config;
    w.put<double>(c.lambda);
    w.put<double>(c.beta);
    w.put<std::uint64_t>(c.rank_r);
    w.put<double>(c.corruption_rate);
    w.put<std::uint64_t>(c.max_iters);
    w.put<double>(c.rel_tol);
    w.put<std::uint64_t>(c.seed);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.normalization));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.b_form));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(m.column_normalization));
    w.put<std::uint8_t>(m.converged ? 1 : 0);
    w.put<std::uint64_t>(m.corrupted_entries);
    w.put<double>(m.ridge);
    w.put<std::uint64_t>(m.w.rows());
    w.put<std::uint64_t>(m.w.cols());
    w.put<std::uint64_t>(m.objective_trace.size());
    for (double v : m.w.data()) w.put<double>(v);
    for (double v : m.objective_trace) w.put<double>(v);
    w.put<std::uint64_t>(fnv1a64(std::string_view(w.bytes).substr(kModelMagic.size())));
    return std::move(w.bytes);
}

inline TrainedModel deserialize_model(std::string_view bytes) {
    if (bytes.size() < kModelMagic.size()) throw TruncatedError("model file is truncated");
    if (bytes.substr(0, kModelMagic.size()) != std::string_view(kModelMagic.data(), kModelMagic.size())) {
        throw MagicError("not a model file (bad magic)");
    }
    detail::ByteReader r(bytes.substr(kModelMagic.size()));
    const auto version = r.get<std::uint32_t>();
    if (version != kModelFormatVersion) {
        throw VersionError("unsupported model format version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelFormatVersion) + ")");
    }
    TrainedModel m;
    ModelConfig& c = m.config;
    c.lambda = r.get<double>();
    c.beta = r.get<double>();
    c.rank_r = r.get<std::uint64_t>();
    c.corruption_rate = r.get<double>();
    c.max_iters = r.get<std::uint64_t>();
    c.rel_tol = r.get<double>();
    c.seed = r.get<std::uint64_t>();
    const auto norm = r.get<std::uint8_t>();
    const auto form = r.get<std::uint8_t>();
    const auto col_norm = r.get<std::uint8_t>();
    const auto converged = r.get<std::uint8_t>();
    m.corrupted_entries = r.get<std::uint64_t>();
    m.ridge = r.get<double>();
    const auto k = r.get<std::uint64_t>();
    const auto d = r.get<std::uint64_t>();
    const auto t = r.get<std::uint64_t>();

    const std::uint64_t payload = r.remaining() / sizeof(double);
    if (d != 0 && k > payload / d) throw TruncatedError("model file is truncated");
    if (t > payload - k * d || r.remaining() < (k * d + t + 1) * sizeof(double)) {
        throw TruncatedError("model file is truncated");
    }
    if (r.remaining() > (k * d + t + 1) * sizeof(double)) throw FormatError("trailing bytes after model payload");

    std::vector<double> w(k * d);
    for (double& v : w) v = r.get<double>();
    m.objective_trace.resize(t);
    for (double& v : m.objective_trace) v = r.get<double>();
    const auto stored = r.get<std::uint64_t>();
    const std::string_view body = bytes.substr(kModelMagic.size(), bytes.size() - kModelMagic.size() - 8);
    if (stored != fnv1a64(body)) throw ChecksumError("model file checksum mismatch");

    if (norm > 1 || col_norm > 1 || form > 1 || converged > 1) throw FormatError("model file has an invalid flag");
    c.normalization = static_cast<ColumnNormalization>(norm);
    c.b_form = static_cast<SylvesterRhsForm>(form);
    m.column_normalization = static_cast<ColumnNormalization>(col_norm);
    m.converged = converged == 1;
    try {
        m.w = Matrix(k, d, std::move(w));
    } catch (const Error& e) {
        throw FormatError(std::string("model file encoder: ") + e.what());
    }
    return m;
}

inline void save_model(const TrainedModel& model, const std::string& path) {
    const std::string bytes = serialize_model(model);
    auto out = detail::open_output(path, std::ios::out | std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline TrainedModel load_model(const std::string& path) {
    auto in = detail::open_input(path, std::ios::in | std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace llae
