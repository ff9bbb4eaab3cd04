#pragma once

#include "clip/matrix.hpp"

#include <vector>

namespace clip {

/// Logistic source marginal. Location is fixed at zero.
struct MarginalModel {
  double location = 0.0;
  double scale = 1.0;
};

/// Per-pair Gaussian copula dependencies. sigma[i] links component i of
/// modality 1 with component i of modality 2.
struct CopulaSpec {
  std::vector<double> sigma;

  int order() const { return static_cast<int>(sigma.size()); }
  /// 2c x 2c correlation: unit diagonal, sigma[i] at (i, i+c) and (i+c, i).
  Matrix correlation_matrix() const;
  /// Throws unless every |sigma| < 1.
  void validate() const;
};

struct NllBreakdown {
  double total = 0.0;
  double marginal_term = 0.0;  // sum of logistic log-densities
  double copula_term = 0.0;    // sum of copula log-densities
  double logdet_term = 0.0;    // b * (log|det w1| + log|det w2|)
};

struct NllGradient {
  Matrix grad_w1;
  Matrix grad_w2;
  NllBreakdown nll;
};

/// Probabilities fed to the inverse normal CDF are clamped to [kUClamp, 1 - kUClamp].
inline constexpr double kUClamp = 1e-7;

double logistic_log_pdf(double y, const MarginalModel& m);
double logistic_cdf(double y, const MarginalModel& m);
double gaussian_copula_log_density(double u1, double u2, double sigma);

enum class Exec { Serial, Parallel };

/// Negative log-likelihood of two c x b batches under unmixing (w1, w2).
NllBreakdown joint_nll(const Matrix& w1, const Matrix& w2, const Matrix& x1, const Matrix& x2,
                       const CopulaSpec& spec, const MarginalModel& m = {},
                       Exec exec = Exec::Parallel);

/// Analytic gradient of joint_nll().total with respect to w1 and w2.
NllGradient nll_gradient(const Matrix& w1, const Matrix& w2, const Matrix& x1, const Matrix& x2,
                         const CopulaSpec& spec, const MarginalModel& m = {},
                         Exec exec = Exec::Parallel);

}  // namespace clip
