#pragma once

#include <stdexcept>
#include <string>

namespace decoylab {

// A value lies off its scale, or a geometric precondition is violated.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The caller asked for something the API does not allow.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raw backend output could not be turned into a choice distribution.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::string raw_record)
      : std::runtime_error(what), raw_record_(std::move(raw_record)) {}
  const std::string& raw_record() const noexcept { return raw_record_; }

 private:
  std::string raw_record_;
};

class IncompleteDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistical test whose inputs leave the statistic undefined.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfiniteStatisticError : public DegenerateError {
 public:
  using DegenerateError::DegenerateError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Errors raised by the remote completion adapter.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

class RateLimitError : public BackendError {
 public:
  using BackendError::BackendError;
};

class TransientError : public BackendError {
 public:
  using BackendError::BackendError;
};

class MalformedResponse : public BackendError {
 public:
  MalformedResponse(const std::string& what, std::string body)
      : BackendError(what), body_(std::move(body)) {}
  const std::string& body() const noexcept { return body_; }

 private:
  std::string body_;
};

// Replay needed a cache record that is not there.
class ReplayError : public std::runtime_error {
 public:
  ReplayError(const std::string& what, std::string key)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// A --strict run stopped because at least one trial failed.
class StrictModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace decoylab
