#include "clip/numcore.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace clip {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Config: return "config";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

void require_finite(const Matrix& m, const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw Error(ErrorKind::NonFinite, what + ": non-finite value at row " + std::to_string(r) +
                                              ", col " + std::to_string(c));
      }
    }
  }
}

PcaResult pca_reduce(const Matrix& x, int k) {
  const Eigen::Index n = x.rows();
  const Eigen::Index v = x.cols();
  if (k < 1 || k > std::min(n, v)) {
    throw Error(ErrorKind::InvalidArgument, "pca_reduce: k=" + std::to_string(k) +
                                                " out of range [1, " +
                                                std::to_string(std::min(n, v)) + "]");
  }
  require_finite(x, "pca_reduce");

  PcaResult out;
  out.mean = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - out.mean.transpose();

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
  const Matrix& u = svd.matrixU();
  const Vector& s = svd.singularValues();

  out.basis = u.leftCols(k).transpose();
  // Fix the SVD sign ambiguity: largest-magnitude entry of each basis row is positive.
  for (int i = 0; i < k; ++i) {
    Eigen::Index idx = 0;
    out.basis.row(i).cwiseAbs().maxCoeff(&idx);
    if (out.basis(i, idx) < 0) out.basis.row(i) *= -1.0;
  }
  out.components = out.basis * centered;
  const double denom = v > 1 ? static_cast<double>(v - 1) : 1.0;
  out.explained_variance = s.head(k).array().square() / denom;
  return out;
}

Matrix pca_reconstruct(const PcaResult& pca) {
  Matrix x = pca.basis.transpose() * pca.components;
  x.rowwise() += pca.mean.transpose();
  return x;
}

Matrix zscore_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    auto row = row_span(x, r);
    const double m = mean(row);
    const double var = sample_variance(row);
    if (!(var > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "constant row " + std::to_string(r));
    }
    out.row(r) = (x.row(r).array() - m) / std::sqrt(var);
  }
  return out;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

namespace {

// Acklam's rational approximation for the lower half, relative error ~1e-9.
double inv_cdf_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_inv_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "std_normal_inv_cdf: p=" + std::to_string(p) + " outside (0,1)");
  }
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -std_normal_inv_cdf(1.0 - p);

  double x = inv_cdf_lower(p);
  // One Halley step against the erfc-based CDF.
  const double e = std_normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double log_abs_det(const Matrix& w) {
  if (w.rows() != w.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "log_abs_det: matrix is not square");
  }
  Eigen::PartialPivLU<Matrix> lu(w);
  const Matrix& packed = lu.matrixLU();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double pivot = std::abs(packed(i, i));
    if (!(pivot >= 1e-300)) throw Error(ErrorKind::Singular, "singular unmixing matrix");
    acc += std::log(pivot);
  }
  return acc;
}

double mean(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s / static_cast<double>(a.size());
}

double sample_variance(std::span<const double> a) {
  if (a.size() < 2) return 0.0;
  const double m = mean(a);
  double ss = 0.0;
  for (double v : a) ss += (v - m) * (v - m);
  return ss / static_cast<double>(a.size() - 1);
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::ShapeMismatch, "pearson_corr: length mismatch");
  }
  if (a.size() < 3) throw Error(ErrorKind::InvalidArgument, "pearson_corr: need >= 3 samples");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "pearson_corr: zero-variance input");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double skewness(std::span<const double> a) {
  if (a.size() < 3) throw Error(ErrorKind::InvalidArgument, "skewness: need >= 3 samples");
  const double m = mean(a);
  double m2 = 0.0, m3 = 0.0;
  for (double v : a) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(a.size());
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "skewness: zero variance");
  return m3 / std::pow(m2, 1.5);
}

Matrix cross_correlation(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "cross_correlation: column count mismatch");
  }
  auto standardize = [](const Matrix& m) {
    Matrix z = m.colwise() - m.rowwise().mean();
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const double norm = z.row(r).norm();
      if (norm > 0.0) {
        z.row(r) /= norm;
      } else {
        z.row(r).setConstant(std::numeric_limits<double>::quiet_NaN());
      }
    }
    return z;
  };
  Matrix corr = standardize(a) * standardize(b).transpose();
  return corr.unaryExpr([](double v) { return std::isnan(v) ? v : std::clamp(v, -1.0, 1.0); });
}

}  // namespace clip
