#include "clip/kernels.hpp"

#include "clip/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace clip::kernels {

namespace {

struct Entry {
  double log_pdf;
  double score;  // d log p / dy
  double z;      // normal score Phi^-1(clamped F(y))
  double dz_dy;  // zero inside the clamp region
};

// Works from the lower tail on both sides so that 1 - F(y) never cancels.
Entry eval_entry(double y, const MarginalModel& m, bool need_copula) {
  Entry e{};
  const double t = (y - m.location) / m.scale;
  e.log_pdf = logistic_log_pdf(y, m);
  e.score = -std::tanh(0.5 * t) / m.scale;
  if (!need_copula) return e;

  const double tail = logistic_cdf(-std::abs(y - m.location), {0.0, m.scale});
  const bool clamped = tail < kUClamp;
  const double z_lower = std_normal_inv_cdf(clamped ? kUClamp : tail);
  e.z = t >= 0.0 ? -z_lower : z_lower;
  e.dz_dy = clamped ? 0.0 : std::exp(e.log_pdf) / std_normal_pdf(z_lower);
  return e;
}

template <bool kWithScores>
void column_range(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                  const MarginalModel& m, Matrix* score1, Matrix* score2, Eigen::Index begin,
                  Eigen::Index end, KahanSum& marginal, KahanSum& copula) {
  const Eigen::Index c = y1.rows();
  for (Eigen::Index j = begin; j < end; ++j) {
    for (Eigen::Index i = 0; i < c; ++i) {
      const double rho = sigma[static_cast<std::size_t>(i)];
      const bool linked = rho != 0.0;
      const Entry a = eval_entry(y1(i, j), m, linked);
      const Entry b = eval_entry(y2(i, j), m, linked);
      marginal.add(a.log_pdf + b.log_pdf);

      double g1 = a.score;
      double g2 = b.score;
      if (linked) {
        const double one_minus = 1.0 - rho * rho;
        const double rr = rho * rho;
        const double quad = (rr * (a.z * a.z + b.z * b.z) - 2.0 * rho * a.z * b.z) / one_minus;
        copula.add(-0.5 * std::log(one_minus) - 0.5 * quad);
        if constexpr (kWithScores) {
          g1 += -(rr * a.z - rho * b.z) / one_minus * a.dz_dy;
          g2 += -(rr * b.z - rho * a.z) / one_minus * b.dz_dy;
        }
      }
      if constexpr (kWithScores) {
        (*score1)(i, j) = g1;
        (*score2)(i, j) = g2;
      }
    }
  }
}

template <bool kWithScores>
LogTerms run_serial(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                    const MarginalModel& m, Matrix* s1, Matrix* s2) {
  KahanSum marginal, copula;
  column_range<kWithScores>(y1, y2, sigma, m, s1, s2, 0, y1.cols(), marginal, copula);
  return {marginal.value(), copula.value()};
}

template <bool kWithScores>
LogTerms run_parallel(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                      const MarginalModel& m, Matrix* s1, Matrix* s2) {
  const Eigen::Index cols = y1.cols();
  const Eigen::Index n_chunks = (cols + kChunkColumns - 1) / kChunkColumns;
  std::vector<double> marg(static_cast<std::size_t>(n_chunks));
  std::vector<double> cop(static_cast<std::size_t>(n_chunks));

#pragma omp parallel for schedule(static) if (n_chunks > 1)
  for (Eigen::Index k = 0; k < n_chunks; ++k) {
    KahanSum marginal, copula;
    const Eigen::Index begin = k * kChunkColumns;
    const Eigen::Index end = std::min(cols, begin + kChunkColumns);
    column_range<kWithScores>(y1, y2, sigma, m, s1, s2, begin, end, marginal, copula);
    marg[static_cast<std::size_t>(k)] = marginal.value();
    cop[static_cast<std::size_t>(k)] = copula.value();
  }

  KahanSum marginal, copula;
  for (Eigen::Index k = 0; k < n_chunks; ++k) {
    marginal.add(marg[static_cast<std::size_t>(k)]);
    copula.add(cop[static_cast<std::size_t>(k)]);
  }
  return {marginal.value(), copula.value()};
}

}  // namespace

LogTerms log_terms_serial(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                          const MarginalModel& m) {
  return run_serial<false>(y1, y2, sigma, m, nullptr, nullptr);
}

LogTerms log_terms_parallel(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                            const MarginalModel& m) {
  return run_parallel<false>(y1, y2, sigma, m, nullptr, nullptr);
}

LogTerms scores_serial(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                       const MarginalModel& m, Matrix& score1, Matrix& score2) {
  return run_serial<true>(y1, y2, sigma, m, &score1, &score2);
}

LogTerms scores_parallel(const Matrix& y1, const Matrix& y2, std::span<const double> sigma,
                         const MarginalModel& m, Matrix& score1, Matrix& score2) {
  return run_parallel<true>(y1, y2, sigma, m, &score1, &score2);
}

}  // namespace clip::kernels
