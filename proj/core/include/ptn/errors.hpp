#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ptn {

// Base class for everything thrown by this library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Dimension contract violations (e.g. matmul with a.cols != b.rows).
class shape_error : public error {
 public:
  using error::error;
};

// Out-of-range position or symbol.
class index_error : public error {
 public:
  using error::error;
};

// Numerical breakdown: SVD non-convergence, non-finite gradients.
class numerical_error : public error {
 public:
  using error::error;
};

// A chain contraction hit an exactly zero vector: the model assigns zero
// mass to the configuration. Carries the chain position and, when known,
// the index of the offending sample.
class zero_amplitude_error : public error {
 public:
  explicit zero_amplitude_error(std::size_t position,
                                std::optional<std::size_t> sample = std::nullopt)
      : error(format(position, sample)), position_(position), sample_(sample) {}

  std::size_t position() const noexcept { return position_; }
  std::optional<std::size_t> sample() const noexcept { return sample_; }

 private:
  static std::string format(std::size_t position, std::optional<std::size_t> sample) {
    std::string msg = "zero amplitude at chain position " + std::to_string(position);
    if (sample) msg += " (sample " + std::to_string(*sample) + ")";
    return msg;
  }

  std::size_t position_;
  std::optional<std::size_t> sample_;
};

// Malformed input file. Line numbers are 1-based.
class parse_error : public error {
 public:
  parse_error(const std::string& what_arg, std::size_t line)
      : error(what_arg + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class io_error : public error {
 public:
  using error::error;
};

// Contradictory or unsupported run configuration.
class config_error : public error {
 public:
  using error::error;
};

// Invalid argument value (h = 0, repetitions = 0, ...).
class argument_error : public error {
 public:
  using error::error;
};

}  // namespace ptn
