#pragma once

// File formats: word2vec-style text embeddings, SemEval-style query/gold/
// candidate files, and the versioned binary model format. All text is UTF-8;
// terms are lowercased at parse time and multi-word terms use underscores in
// embedding files but spaces everywhere else.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hyperbox/model.hpp"

namespace hyperbox {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagicError : ModelIoError {
  using ModelIoError::ModelIoError;
};
struct BadVersionError : ModelIoError {
  using ModelIoError::ModelIoError;
};
struct BadChecksumError : ModelIoError {
  using ModelIoError::ModelIoError;
};

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// ASCII-only lowercasing; multi-byte UTF-8 sequences pass through untouched.
inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

inline std::string underscores_to_spaces(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c == '_') c = ' ';
  }
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct EmbeddingTable {
  Eigen::Index dimension = 0;
  std::unordered_map<std::string, Vec> entries;

  const Vec* find(const std::string& term) const {
    auto it = entries.find(term);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Whitespace-separated text format: an optional "count dim" header, then one
// line per term ("term v1 .. vm"). A first line of exactly two integer
// tokens is taken as the header; otherwise the dimension is inferred from
// the first data line.
inline EmbeddingTable parse_embeddings(const std::string& path,
                                       std::ostream& warn = std::cerr) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embeddings file: " + path);

  EmbeddingTable table;
  std::string line;
  size_t line_no = 0;
  bool first_content_line = true;
  int duplicates = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    if (first_content_line) {
      first_content_line = false;
      std::istringstream head(line);
      std::string t1, t2, t3;
      head >> t1 >> t2;
      if (!head.fail() && !(head >> t3) &&
          t1.find_first_not_of("0123456789") == std::string::npos &&
          t2.find_first_not_of("0123456789") == std::string::npos) {
        table.dimension = std::stol(t2);
        if (table.dimension <= 0) {
          throw ParseError(path + ":" + std::to_string(line_no) +
                           ": header declares dimension " + t2);
        }
        continue;  // header line consumed
      }
    }

    std::istringstream ss(line);
    std::string token;
    ss >> token;
    const std::string term = to_lower(underscores_to_spaces(token));
    if (term.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty term");
    }

    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": non-numeric vector component");
    }
    if (table.dimension == 0) {
      if (values.empty()) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": no vector components on first line");
      }
      table.dimension = static_cast<Eigen::Index>(values.size());
    }
    if (static_cast<Eigen::Index>(values.size()) != table.dimension) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.dimension) + " components, got " +
                       std::to_string(values.size()));
    }

    if (table.entries.count(term)) {
      ++duplicates;  // keep the first occurrence
      continue;
    }
    table.entries.emplace(term,
                          Eigen::Map<const Vec>(values.data(), values.size()));
  }

  if (table.entries.empty()) {
    throw ParseError(path + ": no embedding entries found");
  }
  if (duplicates > 0) {
    warn << "warning: " << path << ": " << duplicates
         << " duplicate term(s), kept first occurrence\n";
  }
  return table;
}

// Exact lookup first; a multi-word term missing from the table falls back to
// the mean of its token embeddings, provided every token is present.
inline std::optional<Vec> phrase_embedding(const std::string& term,
                                           const EmbeddingTable& table) {
  if (const Vec* v = table.find(term)) return *v;
  std::vector<std::string> tokens;
  {
    std::istringstream ss(term);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
  }
  if (tokens.size() < 2) return std::nullopt;
  Vec sum = Vec::Zero(table.dimension);
  for (const auto& tok : tokens) {
    const Vec* v = table.find(tok);
    if (!v) return std::nullopt;
    sum += *v;
  }
  return sum / static_cast<double>(tokens.size());
}

// ---------------------------------------------------------------------------
// Queries, gold standards, candidate vocabularies
// ---------------------------------------------------------------------------

struct QuerySet {
  struct Query {
    std::string term;
    std::string type_tag;  // SemEval "Concept"/"Entity"; may be empty
  };
  std::vector<Query> queries;

  size_t size() const { return queries.size(); }
};

struct GoldStandard {
  // Per query: gold hypernyms, deduplicated, in first-seen order.
  std::vector<std::vector<std::string>> gold;

  size_t size() const { return gold.size(); }
};

inline QuerySet parse_queries(const std::string& path) {
  QuerySet qs;
  size_t line_no = 0;
  for (const auto& raw : read_lines(path)) {
    ++line_no;
    const auto fields = split(raw, '\t');
    const std::string term = to_lower(trim(fields[0]));
    if (term.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": empty query term");
    }
    QuerySet::Query q;
    q.term = term;
    if (fields.size() > 1) q.type_tag = trim(fields[1]);
    qs.queries.push_back(std::move(q));
  }
  return qs;
}

inline GoldStandard parse_gold(const std::string& path) {
  GoldStandard gs;
  for (const auto& raw : read_lines(path)) {
    std::vector<std::string> hypernyms;
    for (const auto& field : split(raw, '\t')) {
      const std::string term = to_lower(trim(field));
      if (term.empty()) continue;
      if (std::find(hypernyms.begin(), hypernyms.end(), term) ==
          hypernyms.end()) {
        hypernyms.push_back(term);
      }
    }
    gs.gold.push_back(std::move(hypernyms));
  }
  return gs;
}

// Newline-separated term list (the task's candidate hypernym vocabulary).
inline std::vector<std::string> parse_term_list(const std::string& path) {
  std::vector<std::string> terms;
  std::unordered_map<std::string, bool> seen;
  for (const auto& raw : read_lines(path)) {
    const std::string term = to_lower(trim(raw));
    if (term.empty()) continue;
    if (seen.emplace(term, true).second) terms.push_back(term);
  }
  return terms;
}

// ---------------------------------------------------------------------------
// Term vocabulary with resolved embeddings
// ---------------------------------------------------------------------------

// Dense-id view over the subset of terms that resolve to an embedding,
// either verbatim or through phrase_embedding. Training and ranking work in
// id space; the pretrained table itself is never modified.
struct TermVocab {
  std::vector<std::string> terms;
  std::vector<Vec> vectors;
  std::unordered_map<std::string, int> index;

  int lookup(const std::string& term) const {
    auto it = index.find(term);
    return it == index.end() ? -1 : it->second;
  }

  // Returns the term's id, adding it if needed; -1 if it has no embedding.
  int add(const std::string& term, const EmbeddingTable& table) {
    if (auto it = index.find(term); it != index.end()) return it->second;
    auto emb = phrase_embedding(term, table);
    if (!emb) return -1;
    const int id = static_cast<int>(terms.size());
    terms.push_back(term);
    vectors.push_back(std::move(*emb));
    index.emplace(term, id);
    return id;
  }

  size_t size() const { return terms.size(); }
};

// ---------------------------------------------------------------------------
// Model serialization
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kModelMagic = {'H', 'B', 'O', 'X'};
inline constexpr std::uint8_t kModelVersion = 1;

namespace detail {

inline constexpr std::array<std::uint32_t, 256> make_crc32_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) {
      c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    }
    table[i] = c;
  }
  return table;
}

inline std::uint32_t crc32(const std::uint8_t* data, size_t len) {
  static constexpr auto table = make_crc32_table();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

inline void put_u32_le(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f64_le(std::vector<std::uint8_t>& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int k = 0; k < 8; ++k) {
    buf.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
}

inline double get_f64_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) {
    bits |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  }
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline void put_matrix_row_major(std::vector<std::uint8_t>& buf, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put_f64_le(buf, m(r, c));
    }
  }
}

inline void put_vector(std::vector<std::uint8_t>& buf, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64_le(buf, v[i]);
}

}  // namespace detail

// Layout: "HBOX" | version u8 | m u32 | d u32 | phi_base | phi_bump |
// head corner_p | head corner_q | tail corner_p | tail corner_q | crc32 u32.
// Matrices are row-major f64 little-endian; the checksum covers every
// preceding byte. Round-trips are bit-exact.
inline void save_model(const ModelParams& params, const std::string& path) {
  std::vector<std::uint8_t> buf;
  const auto d = static_cast<std::uint32_t>(params.dim_d());
  const auto m = static_cast<std::uint32_t>(params.dim_m());
  buf.reserve(13 + 8 * (2 * size_t(d) * m + 4 * size_t(d)) + 4);

  for (char c : kModelMagic) buf.push_back(static_cast<std::uint8_t>(c));
  buf.push_back(kModelVersion);
  detail::put_u32_le(buf, m);
  detail::put_u32_le(buf, d);
  detail::put_matrix_row_major(buf, params.phi_base);
  detail::put_matrix_row_major(buf, params.phi_bump);
  detail::put_vector(buf, params.head_box.corner_p);
  detail::put_vector(buf, params.head_box.corner_q);
  detail::put_vector(buf, params.tail_box.corner_p);
  detail::put_vector(buf, params.tail_box.corner_q);
  detail::put_u32_le(buf, detail::crc32(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelIoError("cannot open model file for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw ModelIoError("short write to model file: " + path);
}

inline ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError("cannot open model file: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 13 + 4 ||
      std::memcmp(buf.data(), kModelMagic.data(), 4) != 0) {
    throw BadMagicError(path + ": not a model file (bad magic)");
  }
  if (buf[4] != kModelVersion) {
    throw BadVersionError(path + ": unsupported model format version " +
                          std::to_string(int(buf[4])));
  }
  const std::uint32_t m = detail::get_u32_le(buf.data() + 5);
  const std::uint32_t d = detail::get_u32_le(buf.data() + 9);
  const size_t expected =
      13 + 8 * (2 * size_t(d) * m + 4 * size_t(d)) + 4;
  if (buf.size() != expected) {
    throw BadChecksumError(path + ": truncated or oversized model file (" +
                           std::to_string(buf.size()) + " bytes, expected " +
                           std::to_string(expected) + ")");
  }
  const std::uint32_t stored = detail::get_u32_le(buf.data() + buf.size() - 4);
  const std::uint32_t actual = detail::crc32(buf.data(), buf.size() - 4);
  if (stored != actual) {
    throw BadChecksumError(path + ": checksum mismatch");
  }

  ModelParams params;
  params.phi_base = Mat(d, m);
  params.phi_bump = Mat(d, m);
  params.head_box.corner_p = Vec(d);
  params.head_box.corner_q = Vec(d);
  params.tail_box.corner_p = Vec(d);
  params.tail_box.corner_q = Vec(d);

  const std::uint8_t* p = buf.data() + 13;
  auto read_matrix = [&](Mat& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        mat(r, c) = detail::get_f64_le(p);
        p += 8;
      }
    }
  };
  auto read_vector = [&](Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = detail::get_f64_le(p);
      p += 8;
    }
  };
  read_matrix(params.phi_base);
  read_matrix(params.phi_bump);
  read_vector(params.head_box.corner_p);
  read_vector(params.head_box.corner_q);
  read_vector(params.tail_box.corner_p);
  read_vector(params.tail_box.corner_q);
  return params;
}

}  // namespace hyperbox
