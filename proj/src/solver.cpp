#include "clip/solver.hpp"

#include "clip/adam.hpp"
#include "clip/hungarian.hpp"
#include "clip/numcore.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace clip {

void FitConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in [0,1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in [0,1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (align_epochs < 0 || align_epochs > epochs) fail("align_epochs must lie in [0, epochs]");
  if (tol_window < 1) fail("tol_window must be >= 1");
  if (!(tol_rel >= 0.0)) fail("tol_rel must be >= 0");
}

namespace {

Matrix random_orthonormal(int c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(c, c);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(c, c);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < c; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

bool degenerate_row(const Matrix& y, Eigen::Index r) {
  return !(sample_variance(row_span(y, r)) > 0.0);
}

Matrix gather_columns(const Matrix& x, std::span<const Eigen::Index> cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) = x.col(cols[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace

UnmixingPair init_unmixing(int c, std::uint64_t seed) {
  if (c < 1) throw Error(ErrorKind::InvalidArgument, "init_unmixing: c must be >= 1");
  std::mt19937_64 rng(seed);
  UnmixingPair pair;
  pair.w1 = random_orthonormal(c, rng);
  pair.w2 = random_orthonormal(c, rng);
  return pair;
}

Matrix permute_rows(const Matrix& m, const std::vector<int>& perm, const std::vector<int>& signs) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = static_cast<double>(signs[i]) * m.row(perm[i]);
  }
  return out;
}

Alignment align_components(const UnmixingPair& pair, const Matrix& y1, const Matrix& y2) {
  const Eigen::Index c = y1.rows();
  if (y2.rows() != c || y1.cols() != y2.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "align_components: source shapes differ");
  }
  if (y1.cols() < 3) throw Error(ErrorKind::InvalidArgument, "align_components: need >= 3 columns");

  Alignment out;
  out.permutation.resize(static_cast<std::size_t>(c));
  out.signs.assign(static_cast<std::size_t>(c), 1);
  std::iota(out.permutation.begin(), out.permutation.end(), 0);

  std::vector<int> active;
  for (Eigen::Index i = 0; i < c; ++i) {
    if (degenerate_row(y1, i) || degenerate_row(y2, i)) {
      out.excluded.push_back(static_cast<int>(i));
    } else {
      active.push_back(static_cast<int>(i));
    }
  }

  const Matrix corr = cross_correlation(y1, y2);
  if (!active.empty()) {
    const auto n = static_cast<Eigen::Index>(active.size());
    Matrix weight(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) weight(a, b) = std::abs(corr(active[a], active[b]));
    const auto assign = hungarian_max_weight(weight);
    for (Eigen::Index a = 0; a < n; ++a) {
      const int row = active[static_cast<std::size_t>(a)];
      const int col = active[static_cast<std::size_t>(assign[static_cast<std::size_t>(a)])];
      out.permutation[static_cast<std::size_t>(row)] = col;
      out.signs[static_cast<std::size_t>(row)] = corr(row, col) < 0.0 ? -1 : 1;
    }
  }

  out.pair.w1 = pair.w1;
  out.pair.w2 = permute_rows(pair.w2, out.permutation, out.signs);
  return out;
}

FitResult fit(const Matrix& x1, const Matrix& x2, const CopulaSpec& spec, const FitConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (x1.cols() != x2.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "fit: column count mismatch (" +
                                              std::to_string(x1.cols()) + " vs " +
                                              std::to_string(x2.cols()) + ")");
  }
  const int c = spec.order();
  if (x1.rows() != c || x2.rows() != c) {
    throw Error(ErrorKind::ShapeMismatch, "fit: data rows must equal model order " + std::to_string(c));
  }
  require_finite(x1, "fit x1");
  require_finite(x2, "fit x2");

  const Eigen::Index v = x1.cols();
  const MarginalModel marginal{};
  const AdamParams adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};

  FitResult result;
  result.pair = init_unmixing(c, cfg.seed);
  AdamState state1(c, c), state2(c, c);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  auto diverged = [](int epoch) {
    std::ostringstream msg;
    msg << "fit diverged at epoch " << epoch << " (non-finite loss); try a smaller learning_rate";
    return Error(ErrorKind::Diverged, msg.str());
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      std::span<const Eigen::Index> cols(order.data() + start, len);
      const Matrix xb1 = gather_columns(x1, cols);
      const Matrix xb2 = gather_columns(x2, cols);
      NllGradient g;
      try {
        g = nll_gradient(result.pair.w1, result.pair.w2, xb1, xb2, spec, marginal);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Singular) throw diverged(epoch);
        throw;
      }
      if (!std::isfinite(g.nll.total) || !g.grad_w1.allFinite() || !g.grad_w2.allFinite()) {
        throw diverged(epoch);
      }
      state1.step(result.pair.w1, g.grad_w1, adam);
      state2.step(result.pair.w2, g.grad_w2, adam);
    }

    NllBreakdown full;
    try {
      full = joint_nll(result.pair.w1, result.pair.w2, x1, x2, spec, marginal);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Singular) throw diverged(epoch);
      throw;
    }
    if (!std::isfinite(full.total)) throw diverged(epoch);

    if (epoch < cfg.align_epochs) {
      const Matrix y1 = result.pair.w1 * x1;
      const Matrix y2 = result.pair.w2 * x2;
      Alignment al = align_components(result.pair, y1, y2);
      state2.permute_rows(al.permutation, al.signs);
      result.pair = std::move(al.pair);
      const NllBreakdown after = joint_nll(result.pair.w1, result.pair.w2, x1, x2, spec, marginal);
      result.permutation_log.push_back(AlignmentRecord{epoch, std::move(al.permutation),
                                                       std::move(al.signs), std::move(al.excluded),
                                                       full.copula_term, after.copula_term});
      full = after;
    }

    result.nll_trace.push_back(full.total / static_cast<double>(v));
    result.epochs_run = epoch + 1;

    const auto n = result.nll_trace.size();
    if (epoch >= cfg.align_epochs && n > static_cast<std::size_t>(cfg.tol_window) &&
        n - static_cast<std::size_t>(cfg.tol_window) > static_cast<std::size_t>(cfg.align_epochs)) {
      double worst = 0.0;
      for (std::size_t k = n - static_cast<std::size_t>(cfg.tol_window); k < n; ++k) {
        const double prev = result.nll_trace[k - 1];
        worst = std::max(worst, std::abs(result.nll_trace[k] - prev) / std::max(std::abs(prev), 1e-300));
      }
      if (worst < cfg.tol_rel) {
        result.converged = true;
        break;
      }
    }
  }

  result.y1 = result.pair.w1 * x1;
  result.y2 = result.pair.w2 * x2;
  result.pair_corr = compute_pair_correlations(result.y1, result.y2);
  return result;
}

std::pair<Matrix, Matrix> sign_calibrate_by_skewness(const Matrix& sources,
                                                     const Matrix& mixing_like) {
  if (mixing_like.cols() != sources.rows()) {
    throw Error(ErrorKind::ShapeMismatch,
                "sign_calibrate_by_skewness: mixing columns must match source rows");
  }
  Matrix s = sources;
  Matrix a = mixing_like;
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    if (skewness(row_span(s, r)) < 0.0) {
      s.row(r) *= -1.0;
      a.col(r) *= -1.0;
    }
  }
  return {std::move(s), std::move(a)};
}

Vector compute_pair_correlations(const Matrix& y1, const Matrix& y2) {
  if (y1.rows() != y2.rows() || y1.cols() != y2.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "compute_pair_correlations: shapes differ");
  }
  Vector out(y1.rows());
  for (Eigen::Index i = 0; i < y1.rows(); ++i) {
    out(i) = pearson_corr(row_span(y1, i), row_span(y2, i));
  }
  return out;
}

}  // namespace clip
