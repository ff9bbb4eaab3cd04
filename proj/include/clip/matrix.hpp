#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clip {

/// Dense row-major matrix of doubles. Rows are components/observations,
/// columns are voxels throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Error categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  Singular,
  NonFinite,
  Io,
  Format,
  Config,
  Diverged,
  Numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// Throws NonFinite naming the first offending (row, col).
void require_finite(const Matrix& m, const std::string& what);

}  // namespace clip
