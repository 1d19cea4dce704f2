/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_ERRORS_HPP_
#define MLTR_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mltr {

/*! \brief A line of input data violated the LETOR grammar. Carries the
 *  1-based line number of the offending line. */
class MalformedLine : public std::runtime_error {
 public:
  MalformedLine(std::size_t line_no, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

/*! \brief A feature index or vector width disagreed with the declared
 *  dimensionality. */
class DimensionMismatch : public std::runtime_error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : std::runtime_error(what) {}
};

class InsufficientQueries : public std::runtime_error {
 public:
  explicit InsufficientQueries(const std::string& what)
      : std::runtime_error(what) {}
};

/*! \brief A query group cannot satisfy the requested positive/negative
 *  sample counts. Callers typically skip the query and record it. */
class InsufficientItems : public std::runtime_error {
 public:
  explicit InsufficientItems(const std::string& what)
      : std::runtime_error(what) {}
};

class InsufficientPositives : public std::runtime_error {
 public:
  explicit InsufficientPositives(const std::string& what)
      : std::runtime_error(what) {}
};

/*! \brief Training surfaced a NaN/Inf loss. Carries the query id and the
 *  inner step (0 for non-stepped contexts) where it was detected. */
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string& query_id, int step)
      : std::runtime_error("non-finite loss at query '" + query_id +
                           "', step " + std::to_string(step)),
        query_id_(query_id),
        step_(step) {}
  const std::string& query_id() const { return query_id_; }
  int step() const { return step_; }

 private:
  std::string query_id_;
  int step_;
};

class NoUsableQueries : public std::runtime_error {
 public:
  explicit NoUsableQueries(const std::string& what)
      : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mltr

#endif  // MLTR_ERRORS_HPP_
