#pragma once

#include <stdexcept>
#include <string>

namespace halo {

/// Base for every domain error raised by the harness. The CLI maps these to
/// exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

/// Network failure that survived the retry budget.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Non-retryable, non-success HTTP status from an endpoint.
class EndpointError : public Error {
 public:
  EndpointError(int status, std::string body_excerpt)
      : Error("endpoint returned HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class EmptyResponseError : public Error {
 public:
  using Error::Error;
};

class CollectionIncompleteError : public Error {
 public:
  CollectionIncompleteError(std::size_t hallucinated, std::size_t faithful, std::size_t target)
      : Error("collection incomplete: hallucinated " + std::to_string(hallucinated) + "/" +
              std::to_string(target) + ", faithful " + std::to_string(faithful) + "/" +
              std::to_string(target)),
        hallucinated_(hallucinated),
        faithful_(faithful) {}
  std::size_t hallucinated() const noexcept { return hallucinated_; }
  std::size_t faithful() const noexcept { return faithful_; }

 private:
  std::size_t hallucinated_;
  std::size_t faithful_;
};

}  // namespace halo
