#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace corder {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownNode : public Error {
 public:
  using Error::Error;
};

/// An order does not rank a node the operation needs.
class UnorderedNode : public Error {
 public:
  explicit UnorderedNode(const std::string& name)
      : Error("node '" + name + "' is not ranked by the order"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// A graph that must be acyclic is not; carries one witness cycle.
class CyclicGraph : public Error {
 public:
  explicit CyclicGraph(std::vector<std::string> witness);
  const std::vector<std::string>& witness() const noexcept { return witness_; }

 private:
  std::vector<std::string> witness_;
};

class CptRowSum : public Error {
 public:
  using Error::Error;
};

class CyclicParents : public Error {
 public:
  using Error::Error;
};

class UnknownGraph : public Error {
 public:
  using Error::Error;
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class MissingColumn : public Error {
 public:
  using Error::Error;
};

class SingularDesign : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Failure talking to an expert backend (network, protocol, session state).
class ExpertError : public Error {
 public:
  using Error::Error;
};

class EndpointError : public ExpertError {
 public:
  using ExpertError::ExpertError;
};

class UnparseableAnswer : public ExpertError {
 public:
  UnparseableAnswer(const std::string& what, std::string raw)
      : ExpertError(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class SessionClosed : public ExpertError {
 public:
  using ExpertError::ExpertError;
};

class Timeout : public ExpertError {
 public:
  using ExpertError::ExpertError;
};

class AssertionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace corder
