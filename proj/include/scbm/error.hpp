#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scbm {

// Exit codes used by the command-line tool. Every library error maps to one
// of these through Error::exit_code().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitBackendError = 2;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return kExitUserError; }
};

// --- user / configuration errors (exit 1) ---------------------------------

class InvalidInput : public Error {
public:
    using Error::Error;
};

class EmptyLexicon : public Error {
public:
    using Error::Error;
};

class InvalidTask : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class Unsupported : public Error {
public:
    using Error::Error;
};

// Raised by metric functions on mismatched inputs.
class InputError : public Error {
public:
    using Error::Error;
};

// Dataset ingestion failures carry every per-record violation found, not
// just the first one.
class DatasetError : public Error {
public:
    DatasetError(const std::string& what, std::vector<std::string> violations)
        : Error(what), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class SchemaError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class AnnotationCountError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

// Ids present on one side of a join but missing on the other.
class JoinError : public Error {
public:
    JoinError(const std::string& what, std::vector<std::string> missing_ids)
        : Error(what), missing_ids_(std::move(missing_ids)) {}
    const std::vector<std::string>& missing_ids() const noexcept { return missing_ids_; }

private:
    std::vector<std::string> missing_ids_;
};

// --- backend / IO errors (exit 2) -------------------------------------------

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitBackendError; }
};

// A single failed backend request. Retried by the scorer.
class BackendError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitBackendError; }
};

// The endpoint answered with something that is not a first-token
// distribution. Never retried.
class ProtocolError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitBackendError; }
};

// Retry budget exhausted. Everything scored before the failure has been
// written to the cache.
class BackendUnavailable : public Error {
public:
    BackendUnavailable(const std::string& what, std::size_t completed, std::size_t total)
        : Error(what), completed_(completed), total_(total) {}
    int exit_code() const noexcept override { return kExitBackendError; }
    std::size_t completed() const noexcept { return completed_; }
    std::size_t total() const noexcept { return total_; }

private:
    std::size_t completed_;
    std::size_t total_;
};

}  // namespace scbm
