#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skillscape {

// Error categories map onto the process exit codes used by the CLI:
// config -> 2, missing_artifact -> 3, everything data-shaped -> 4.
enum class ErrorKind {
  internal,
  config,
  missing_artifact,
  data,
  io,
  not_found,
  domain,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::config: return 2;
      case ErrorKind::missing_artifact: return 3;
      case ErrorKind::data:
      case ErrorKind::io:
      case ErrorKind::not_found:
      case ErrorKind::domain: return 4;
      case ErrorKind::internal: break;
    }
    return 1;
  }

  const char* kind_name() const noexcept {
    switch (kind_) {
      case ErrorKind::config: return "config";
      case ErrorKind::missing_artifact: return "missing_artifact";
      case ErrorKind::data: return "data";
      case ErrorKind::io: return "io";
      case ErrorKind::not_found: return "not_found";
      case ErrorKind::domain: return "domain";
      case ErrorKind::internal: break;
    }
    return "internal";
  }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(std::string m) : Error(ErrorKind::config, std::move(m)) {}
};

struct MissingArtifactError : Error {
  explicit MissingArtifactError(std::string m)
      : Error(ErrorKind::missing_artifact, std::move(m)) {}
};

struct DataError : Error {
  explicit DataError(std::string m) : Error(ErrorKind::data, std::move(m)) {}
};

struct IoError : Error {
  explicit IoError(std::string m) : Error(ErrorKind::io, std::move(m)) {}
};

struct NotFoundError : Error {
  explicit NotFoundError(std::string m) : Error(ErrorKind::not_found, std::move(m)) {}
};

struct DomainError : Error {
  explicit DomainError(std::string m) : Error(ErrorKind::domain, std::move(m)) {}
};

// A scoped skill was not present in the embedding vocabulary.
struct MissingSkillError : DataError {
  MissingSkillError(std::string m, std::vector<std::string> skills)
      : DataError(std::move(m)), missing(std::move(skills)) {}
  std::vector<std::string> missing;
};

// A skill in a snapshot has no community assignment.
struct PartitionIncompleteError : DataError {
  using DataError::DataError;
};

// An occupation profile summed to zero total weight.
struct DegenerateProfileError : DataError {
  using DataError::DataError;
};

// A regression design matrix is rank deficient.
struct SingularDesignError : DataError {
  SingularDesignError(std::string m, std::vector<std::string> cols)
      : DataError(std::move(m)), columns(std::move(cols)) {}
  std::vector<std::string> columns;
};

}  // namespace skillscape
