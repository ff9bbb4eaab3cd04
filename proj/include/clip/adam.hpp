#pragma once

#include "clip/matrix.hpp"

#include <cmath>
#include <span>

namespace clip {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam state for one matrix parameter.
class AdamState {
 public:
  AdamState(Eigen::Index rows, Eigen::Index cols)
      : m_(Matrix::Zero(rows, cols)), v_(Matrix::Zero(rows, cols)) {}

  void step(Matrix& param, const Matrix& grad, const AdamParams& p) {
    ++t_;
    m_ = p.beta1 * m_ + (1.0 - p.beta1) * grad;
    v_ = p.beta2 * v_ + (1.0 - p.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(t_));
    param.array() -= p.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + p.eps);
  }

  /// Reorders rows the same way as the parameter: new row i = old row perm[i],
  /// then scales the first moment by signs[i]. The second moment is sign-free.
  void permute_rows(std::span<const int> perm, std::span<const int> signs) {
    Matrix m = m_, v = v_;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      m_.row(static_cast<Eigen::Index>(i)) = signs[i] * m.row(perm[i]);
      v_.row(static_cast<Eigen::Index>(i)) = v.row(perm[i]);
    }
  }

  const Matrix& first_moment() const { return m_; }
  const Matrix& second_moment() const { return v_; }

 private:
  Matrix m_;
  Matrix v_;
  long t_ = 0;
};

}  // namespace clip
