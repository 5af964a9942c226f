// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scl {

// Failure categories. The CLI maps them to exit codes 1 / 2 / 3.
enum class ErrorKind { Usage = 1, Data = 2, Backend = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// One entry per violated invariant, never collapsed.
class ValidationError : public DataError {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, int attempts = 1, int status = 0)
      : Error(ErrorKind::Backend, what), attempts_(attempts), status_(status) {}
  int attempts() const noexcept { return attempts_; }
  // Protocol status of the last attempt; 0 when the transport itself failed.
  int status() const noexcept { return status_; }

 private:
  int attempts_;
  int status_;
};

}  // namespace scl
