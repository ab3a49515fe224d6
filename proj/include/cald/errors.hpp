// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cald {

// Bad arguments and configuration. The CLI maps these to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Problems with the data being processed. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A box that collapses to zero width or height once mapped into an augmented frame.
class DegenerateMappingError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyScoreError : public DataError {
 public:
  using DataError::DataError;
};

class InvalidDistributionError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyPoolError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientCandidatesError : public DataError {
 public:
  InsufficientCandidatesError(std::size_t requested, std::size_t available)
      : DataError("insufficient candidates: requested " + std::to_string(requested) + ", only " +
                  std::to_string(available) + " available"),
        requested_(requested),
        available_(available) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t requested_;
  std::size_t available_;
};

// Malformed input at a known line (1-based).
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateRecordError : public ParseError {
 public:
  using ParseError::ParseError;
};

// One or more images lack required prediction records.
class IncompleteInputError : public DataError {
 public:
  IncompleteInputError(const std::string& what, std::vector<std::string> ids)
      : DataError(what + ": " + join(ids)), ids_(std::move(ids)) {}

  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  static std::string join(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
      if (!out.empty()) out += ", ";
      out += id;
    }
    return out;
  }

  std::vector<std::string> ids_;
};

}  // namespace cald
