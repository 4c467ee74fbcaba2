#pragma once

#include <stdexcept>
#include <string>

namespace combinterp {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A manifest or data file could not be read or parsed.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// A dataset record violates a DesignSample invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string record_id, std::string field, const std::string& message)
      : Error("record '" + record_id + "', field '" + field + "': " + message),
        record_id_(std::move(record_id)),
        field_(std::move(field)) {}

  const std::string& record_id() const noexcept { return record_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string record_id_;
  std::string field_;
};

/// Caller-supplied input violates an operation precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Matrix or vector shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model backend failed (remote failure, malformed output, ...).
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Fixture or replay archive has no response for the requested input.
class FixtureMiss : public BackendError {
 public:
  using BackendError::BackendError;
};

/// A language-model reply did not follow the requested answer format.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw_reply)
      : Error(message + " (raw reply: \"" + raw_reply + "\")"), raw_reply_(std::move(raw_reply)) {}

  const std::string& raw_reply() const noexcept { return raw_reply_; }

 private:
  std::string raw_reply_;
};

/// The pipeline could not produce an answer for a sample.
class InterpretationError : public Error {
 public:
  using Error::Error;
};

}  // namespace combinterp
