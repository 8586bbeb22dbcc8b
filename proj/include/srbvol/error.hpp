#pragma once

#include <stdexcept>
#include <string>

namespace srbvol {

/// Broad failure class. The CLI maps `input` to exit code 1 and every
/// numerical class to exit code 2.
enum class ErrorKind {
  input,
  rank,
  convergence,
  conditioning,
  splitting,
  coverage,
  root_finding,
  hyperbolicity,
  distortion,
  divergence,
  insufficient_data,
  unsupported_dimension,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  bool is_input_error() const { return kind_ == ErrorKind::input; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class RankError : public Error {
 public:
  explicit RankError(const std::string& what) : Error(ErrorKind::rank, what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, long iterations)
      : Error(ErrorKind::convergence, what), iterations_(iterations) {}
  long iterations() const { return iterations_; }

 private:
  long iterations_;
};

class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& what)
      : Error(ErrorKind::conditioning, what) {}
};

class SplittingError : public Error {
 public:
  explicit SplittingError(const std::string& what)
      : Error(ErrorKind::splitting, what) {}
};

class CoverageError : public Error {
 public:
  explicit CoverageError(const std::string& what)
      : Error(ErrorKind::coverage, what) {}
};

class RootFindingError : public Error {
 public:
  RootFindingError(const std::string& what, long node)
      : Error(ErrorKind::root_finding, what), node_(node) {}
  long node() const { return node_; }

 private:
  long node_;
};

class HyperbolicityError : public Error {
 public:
  explicit HyperbolicityError(const std::string& what)
      : Error(ErrorKind::hyperbolicity, what) {}
};

class DistortionError : public Error {
 public:
  explicit DistortionError(const std::string& what)
      : Error(ErrorKind::distortion, what) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what)
      : Error(ErrorKind::divergence, what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error(ErrorKind::insufficient_data, what) {}
};

class UnsupportedDimensionError : public Error {
 public:
  explicit UnsupportedDimensionError(const std::string& what)
      : Error(ErrorKind::unsupported_dimension, what) {}
};

}  // namespace srbvol
