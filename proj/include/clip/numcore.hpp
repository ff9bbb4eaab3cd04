#pragma once

#include "clip/matrix.hpp"

#include <span>

namespace clip {

struct PcaResult {
  Matrix components;         // k x v reduced data
  Matrix basis;              // k x n, orthonormal rows
  Vector mean;               // length v, per-column mean removed before the SVD
  Vector explained_variance; // length k, non-increasing
};

/// PCA over the observation axis of an n x v matrix via a thin SVD of the
/// column-centered data. components = basis * (x - mean).
PcaResult pca_reduce(const Matrix& x, int k);

/// Rebuilds the n x v data approximation: basis^T * components + mean.
Matrix pca_reconstruct(const PcaResult& pca);

/// Each row to zero mean and unit sample standard deviation.
Matrix zscore_rows(const Matrix& x);

double std_normal_cdf(double z);
double std_normal_pdf(double z);
/// Inverse standard normal CDF, accurate to a few ulp over (0, 1).
double std_normal_inv_cdf(double p);

/// log|det w| from a partial-pivot LU factorization.
double log_abs_det(const Matrix& w);

double mean(std::span<const double> a);
double sample_variance(std::span<const double> a);
double pearson_corr(std::span<const double> a, std::span<const double> b);
double skewness(std::span<const double> a);

/// Pearson correlation between rows of a and rows of b (a.rows x b.rows).
/// Zero-variance rows produce NaN entries instead of throwing.
Matrix cross_correlation(const Matrix& a, const Matrix& b);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);
double student_t_two_sided_p(double t, double df);

inline std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace clip
