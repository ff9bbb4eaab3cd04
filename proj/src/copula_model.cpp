#include "clip/copula_model.hpp"

#include "clip/kernels.hpp"
#include "clip/numcore.hpp"

#include <cmath>
#include <string>

namespace clip {

Matrix CopulaSpec::correlation_matrix() const {
  const int c = order();
  Matrix r = Matrix::Identity(2 * c, 2 * c);
  for (int i = 0; i < c; ++i) {
    r(i, i + c) = sigma[i];
    r(i + c, i) = sigma[i];
  }
  return r;
}

void CopulaSpec::validate() const {
  if (sigma.empty()) throw Error(ErrorKind::InvalidArgument, "copula spec has no components");
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(std::abs(sigma[i]) < 1.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "degenerate copula correlation at component " + std::to_string(i));
    }
  }
}

double logistic_log_pdf(double y, const MarginalModel& m) {
  const double t = std::abs((y - m.location) / m.scale);
  return -t - std::log(m.scale) - 2.0 * std::log1p(std::exp(-t));
}

double logistic_cdf(double y, const MarginalModel& m) {
  const double t = (y - m.location) / m.scale;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double gaussian_copula_log_density(double u1, double u2, double sigma) {
  if (!(std::abs(sigma) < 1.0)) throw Error(ErrorKind::InvalidArgument, "degenerate copula correlation");
  if (sigma == 0.0) return 0.0;
  const double z1 = std_normal_inv_cdf(u1);
  const double z2 = std_normal_inv_cdf(u2);
  const double one_minus = 1.0 - sigma * sigma;
  const double quad = (sigma * sigma * (z1 * z1 + z2 * z2) - 2.0 * sigma * (z1 * z2)) / one_minus;
  return -0.5 * std::log(one_minus) - 0.5 * quad;
}

namespace {

void check_shapes(const Matrix& w1, const Matrix& w2, const Matrix& x1, const Matrix& x2,
                  const CopulaSpec& spec) {
  const Eigen::Index c = spec.order();
  auto square_c = [c](const Matrix& w) { return w.rows() == c && w.cols() == c; };
  if (!square_c(w1) || !square_c(w2)) {
    throw Error(ErrorKind::ShapeMismatch, "unmixing matrices must be " + std::to_string(c) + "x" +
                                              std::to_string(c));
  }
  if (x1.rows() != c || x2.rows() != c) {
    throw Error(ErrorKind::ShapeMismatch, "data rows must equal model order " + std::to_string(c));
  }
  if (x1.cols() != x2.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "modalities have different column counts: " +
                                              std::to_string(x1.cols()) + " vs " +
                                              std::to_string(x2.cols()));
  }
  if (x1.cols() < 1) throw Error(ErrorKind::InvalidArgument, "empty batch");
}

NllBreakdown assemble(kernels::LogTerms terms, double logdet, Eigen::Index batch) {
  NllBreakdown out;
  out.marginal_term = terms.marginal;
  out.copula_term = terms.copula;
  out.logdet_term = static_cast<double>(batch) * logdet;
  out.total = -(out.marginal_term + out.copula_term + out.logdet_term);
  return out;
}

}  // namespace

NllBreakdown joint_nll(const Matrix& w1, const Matrix& w2, const Matrix& x1, const Matrix& x2,
                       const CopulaSpec& spec, const MarginalModel& m, Exec exec) {
  check_shapes(w1, w2, x1, x2, spec);
  spec.validate();
  const double logdet = log_abs_det(w1) + log_abs_det(w2);
  const Matrix y1 = w1 * x1;
  const Matrix y2 = w2 * x2;
  const auto terms = exec == Exec::Serial ? kernels::log_terms_serial(y1, y2, spec.sigma, m)
                                          : kernels::log_terms_parallel(y1, y2, spec.sigma, m);
  return assemble(terms, logdet, x1.cols());
}

NllGradient nll_gradient(const Matrix& w1, const Matrix& w2, const Matrix& x1, const Matrix& x2,
                         const CopulaSpec& spec, const MarginalModel& m, Exec exec) {
  check_shapes(w1, w2, x1, x2, spec);
  spec.validate();
  const double logdet = log_abs_det(w1) + log_abs_det(w2);
  const Matrix y1 = w1 * x1;
  const Matrix y2 = w2 * x2;
  Matrix s1(y1.rows(), y1.cols());
  Matrix s2(y2.rows(), y2.cols());
  const auto terms = exec == Exec::Serial
                         ? kernels::scores_serial(y1, y2, spec.sigma, m, s1, s2)
                         : kernels::scores_parallel(y1, y2, spec.sigma, m, s1, s2);

  const double b = static_cast<double>(x1.cols());
  NllGradient out;
  // d(-log L)/dW = -score * X^T - b * W^{-T}
  out.grad_w1 = -(s1 * x1.transpose()) - b * w1.inverse().transpose();
  out.grad_w2 = -(s2 * x2.transpose()) - b * w2.inverse().transpose();
  out.nll = assemble(terms, logdet, x1.cols());
  return out;
}

}  // namespace clip
