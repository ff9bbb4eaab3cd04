#pragma once

// Column kernels behind the copula likelihood. Each kernel has a serial
// reference and an OpenMP version. The OpenMP version reduces over fixed-size
// column chunks in chunk order, so its result does not depend on the thread
// count.

#include "clip/copula_model.hpp"

#include <span>

namespace clip::kernels {

inline constexpr Eigen::Index kChunkColumns = 256;

struct LogTerms {
  double marginal = 0.0;
  double copula = 0.0;
};

/// Sums of log p(y) and log c(u1, u2) over all entries of the c x b sources.
LogTerms log_terms_serial(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                          const MarginalModel& m);
LogTerms log_terms_parallel(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                            const MarginalModel& m);

/// As log_terms_*, and also writes d(log-likelihood)/dy into score1, score2.
LogTerms scores_serial(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                       const MarginalModel& m, Matrix& score1, Matrix& score2);
LogTerms scores_parallel(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                         const MarginalModel& m, Matrix& score1, Matrix& score2);

/// Compensated running sum.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace clip::kernels
