#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace videonav {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid generator or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed NodePath for the given tree.
class PathError : public Error {
public:
    using Error::Error;
};

/// Tree navigation that does not exist (children of a leaf, ...).
class StructureError : public Error {
public:
    using Error::Error;
};

/// A tool invoked where it is not allowed.
class LegalityError : public Error {
public:
    using Error::Error;
};

/// Corpus record that cannot be decoded. Carries the zero-based record index.
class ParseError : public Error {
public:
    ParseError(std::size_t record, const std::string& what)
        : Error("record " + std::to_string(record) + ": " + what), record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

/// Decoded record that violates a type invariant. Names the offending field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, std::string reason)
        : Error(field + ": " + reason), field_(std::move(field)), reason_(std::move(reason)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

/// Network-level failure talking to a model server. Retryable.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Model server answered with a non-2xx status.
class BackendError : public Error {
public:
    BackendError(int status, const std::string& what)
        : Error("HTTP " + std::to_string(status) + ": " + what), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

class PolicyError : public Error {
public:
    using Error::Error;
};

/// Non-finite gradient during a policy update.
class TrainingError : public Error {
public:
    TrainingError(std::size_t group, const std::string& what)
        : Error("group " + std::to_string(group) + ": " + what), group_(group) {}

    std::size_t group() const noexcept { return group_; }

private:
    std::size_t group_;
};

}  // namespace videonav
