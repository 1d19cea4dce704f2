/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_LETOR_IO_HPP_
#define MLTR_LETOR_IO_HPP_

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mltr/data.hpp"
#include "mltr/errors.hpp"

namespace mltr {

/*!
 * \brief One parsed LETOR line before dense assembly.
 *
 * Grammar (bit-exact): label SP "qid:" id (SP idx ":" float)* (SP "#" any)?
 * Labels are non-negative integers, feature indices are 1-based, floats may
 * use scientific notation, blank lines are ignored.
 */
struct RawRecord {
  int relevance = 0;
  std::string query_id;
  std::map<int, double> features;  // 1-based sparse index -> value
  std::string comment;
};

namespace detail {

inline bool parse_int(std::string_view tok, int& out) {
  if (tok.empty()) return false;
  std::size_t i = 0;
  if (tok[0] == '+' || tok[0] == '-') i = 1;
  if (i == tok.size()) return false;
  long long acc = 0;
  for (; i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
    acc = acc * 10 + (tok[i] - '0');
    if (acc > 0x7fffffffLL) return false;
  }
  out = static_cast<int>(tok[0] == '-' ? -acc : acc);
  return true;
}

inline bool parse_double(std::string_view tok, double& out) {
  if (tok.empty()) return false;
  char buf[64];
  if (tok.size() >= sizeof(buf)) return false;
  std::memcpy(buf, tok.data(), tok.size());
  buf[tok.size()] = '\0';
  char* end = nullptr;
  out = std::strtod(buf, &end);
  return end == buf + tok.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() &&
           std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) toks.push_back(line.substr(start, i - start));
  }
  return toks;
}

}  // namespace detail

/*! \brief Parse one LETOR line. line_no is used for error reporting only. */
inline RawRecord parse_record(std::string_view line, std::size_t line_no) {
  // A comment starts at the first '#' sitting at a token boundary.
  std::string_view comment;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' &&
        (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
      comment = line.substr(i + 1);
      while (!comment.empty() &&
             std::isspace(static_cast<unsigned char>(comment.front())))
        comment.remove_prefix(1);
      line = line.substr(0, i);
      break;
    }
  }

  auto toks = detail::split_ws(line);
  if (toks.empty()) throw MalformedLine(line_no, "empty record");

  RawRecord rec;
  rec.comment = std::string(comment);
  std::size_t t = 0;

  if (!detail::parse_int(toks[t], rec.relevance))
    throw MalformedLine(line_no, "missing or non-integer label");
  if (rec.relevance < 0)
    throw MalformedLine(line_no, "label must be non-negative");
  ++t;

  if (t >= toks.size() || toks[t].substr(0, 4) != "qid:")
    throw MalformedLine(line_no, "missing qid: token");
  rec.query_id = std::string(toks[t].substr(4));
  if (rec.query_id.empty()) throw MalformedLine(line_no, "empty query id");
  ++t;

  for (; t < toks.size(); ++t) {
    std::string_view tok = toks[t];
    std::size_t colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw MalformedLine(line_no,
                          "expected idx:value, got '" + std::string(tok) + "'");
    int idx = 0;
    if (!detail::parse_int(tok.substr(0, colon), idx))
      throw MalformedLine(line_no, "non-numeric feature index");
    if (idx <= 0)
      throw MalformedLine(line_no, "feature index must be >= 1");
    double val = 0.0;
    if (!detail::parse_double(tok.substr(colon + 1), val))
      throw MalformedLine(line_no, "non-numeric feature value");
    if (!std::isfinite(val))
      throw MalformedLine(line_no, "feature value must be finite");
    if (!rec.features.emplace(idx, val).second)
      throw MalformedLine(line_no,
                          "duplicate feature index " + std::to_string(idx));
  }
  return rec;
}

/*!
 * \brief Parse a LETOR stream into the in-memory dataset model.
 *
 * Query groups preserve first-appearance order of query ids; documents keep
 * file order within their query (lines of one qid need not be contiguous).
 * Sparse indices are converted to 0-based dense vectors of width
 * expected_dims, or the maximum index seen when expected_dims is absent;
 * missing entries become 0.0.
 */
inline Dataset parse_dataset(std::istream& in,
                             std::optional<int> expected_dims = std::nullopt,
                             const std::string& name = "") {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  int max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) {
        blank = false;
        break;
      }
    if (blank) continue;
    RawRecord rec = parse_record(line, line_no);
    if (!rec.features.empty()) {
      const int hi = rec.features.rbegin()->first;
      if (expected_dims && hi > *expected_dims)
        throw DimensionMismatch("line " + std::to_string(line_no) +
                                ": feature index " + std::to_string(hi) +
                                " exceeds expected dims " +
                                std::to_string(*expected_dims));
      max_index = std::max(max_index, hi);
    }
    records.push_back(std::move(rec));
  }

  Dataset data;
  data.name = name;
  data.feature_dims = expected_dims ? *expected_dims : max_index;

  std::unordered_map<std::string, std::size_t> slot_of;
  for (auto& rec : records) {
    auto [it, inserted] = slot_of.emplace(rec.query_id, data.queries.size());
    if (inserted) {
      QueryGroup g;
      g.query_id = rec.query_id;
      data.queries.push_back(std::move(g));
    }
    Document doc;
    doc.relevance = rec.relevance;
    doc.features.assign(static_cast<std::size_t>(data.feature_dims), 0.0);
    for (const auto& [idx, val] : rec.features)
      doc.features[static_cast<std::size_t>(idx - 1)] = val;
    data.queries[it->second].docs.push_back(std::move(doc));
  }
  return data;
}

/*!
 * \brief Serialize a dataset back to the LETOR grammar.
 *
 * Every dense dimension is written (including zeros) with enough digits to
 * round-trip doubles exactly, so parse(write(d)) reproduces d.
 */
inline void write_dataset(const Dataset& data, std::ostream& out) {
  char buf[40];
  for (const auto& q : data.queries) {
    for (const auto& doc : q.docs) {
      out << doc.relevance << " qid:" << q.query_id;
      for (std::size_t f = 0; f < doc.features.size(); ++f) {
        std::snprintf(buf, sizeof(buf), "%.17g", doc.features[f]);
        out << ' ' << (f + 1) << ':' << buf;
      }
      out << '\n';
      if (!out) throw DataError("write_dataset: sink write failure");
    }
  }
}

}  // namespace mltr

#endif  // MLTR_LETOR_IO_HPP_
