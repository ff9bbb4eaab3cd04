#include "clip/simulation.hpp"

#include "clip/hungarian.hpp"
#include "clip/numcore.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace clip {

void SimSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (grid < 16) fail("grid must be >= 16");
  if (n_comp < 1) fail("n_comp must be >= 1");
  if (static_cast<int>(target_corr.size()) != n_comp) fail("target_corr length must equal n_comp");
  for (double t : target_corr) {
    if (!(t >= -1.0 && t <= 1.0)) fail("target_corr entries must lie in [-1, 1]");
  }
  if (n_rows_1 < n_comp || n_rows_2 < n_comp) fail("n_rows must be >= n_comp");
  if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
}

namespace {

constexpr double kBackgroundNoise = 0.05;
constexpr double kLinkTolerance = 1e-4;

struct Blob {
  double row, col;
};

/// Places blob centers at least min_dist apart from each other and from
/// every voxel flagged in `occupied`.
class BlobPlacer {
 public:
  BlobPlacer(int side, std::mt19937_64& rng) : side_(side), rng_(rng), min_dist_(side / 6.0) {}

  void occupy(std::vector<char> mask) { occupied_ = std::move(mask); }

  Blob place() {
    std::uniform_real_distribution<double> pos(0.1 * side_, 0.9 * side_);
    double min_dist = min_dist_;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 0 && attempt % 500 == 0) min_dist *= 0.9;
      const Blob b{pos(rng_), pos(rng_)};
      if (clear(b, min_dist)) {
        centers_.push_back(b);
        return b;
      }
    }
  }

 private:
  bool clear(const Blob& b, double min_dist) const {
    for (const Blob& o : centers_) {
      if (std::hypot(o.row - b.row, o.col - b.col) < min_dist) return false;
    }
    if (occupied_.empty()) return true;
    const double r = 0.5 * min_dist;
    for (int i = std::max(0, int(b.row - r)); i <= std::min(side_ - 1, int(b.row + r)); ++i) {
      for (int j = std::max(0, int(b.col - r)); j <= std::min(side_ - 1, int(b.col + r)); ++j) {
        if (occupied_[static_cast<std::size_t>(i * side_ + j)]) return false;
      }
    }
    return true;
  }

  int side_;
  std::mt19937_64& rng_;
  double min_dist_;
  std::vector<Blob> centers_;
  std::vector<char> occupied_;
};

Vector blob_map(int side, BlobPlacer& placer, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> width(side / 30.0, side / 15.0);
  std::uniform_real_distribution<double> amp(1.0, 2.0);
  std::normal_distribution<double> noise(0.0, kBackgroundNoise);

  Vector map = Vector::Zero(side * side);
  const int n_blobs = count(rng);
  for (int k = 0; k < n_blobs; ++k) {
    const Blob b = placer.place();
    const double w = width(rng);
    const double a = amp(rng);
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        const double d2 = (i - b.row) * (i - b.row) + (j - b.col) * (j - b.col);
        map(i * side + j) += a * std::exp(-0.5 * d2 / (w * w));
      }
    }
  }
  for (Eigen::Index t = 0; t < map.size(); ++t) map(t) += noise(rng);
  return logistic_quantile_remap(map);
}

int grid_side(Eigen::Index v) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
  if (static_cast<Eigen::Index>(side) * side != v) {
    throw Error(ErrorKind::ShapeMismatch, "source maps must cover a square grid, got v=" + std::to_string(v));
  }
  return side;
}

Vector standardized(const Vector& x) {
  const double m = x.mean();
  const double sd = std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1));
  return (x.array() - m) / sd;
}

double corr(const Vector& a, const Vector& b) {
  return pearson_corr({a.data(), static_cast<std::size_t>(a.size())},
                      {b.data(), static_cast<std::size_t>(b.size())});
}

}  // namespace

Vector logistic_quantile_remap(const Eigen::Ref<const Vector>& values, double scale) {
  const Eigen::Index v = values.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  Vector out(v);
  for (Eigen::Index r = 0; r < v; ++r) {
    const double p = (static_cast<double>(r) + 0.5) / static_cast<double>(v);
    out(idx[static_cast<std::size_t>(r)]) = scale * std::log(p / (1.0 - p));
  }
  return out;
}

Matrix generate_blob_sources(const SimSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  BlobPlacer placer(spec.grid, rng);
  Matrix s(spec.n_comp, spec.grid * spec.grid);
  for (int i = 0; i < spec.n_comp; ++i) s.row(i) = blob_map(spec.grid, placer, rng).transpose();
  return s;
}

Matrix generate_linked_sources(const Matrix& s1, const std::vector<double>& target_corr,
                               std::uint64_t seed) {
  if (static_cast<Eigen::Index>(target_corr.size()) != s1.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "generate_linked_sources: one target per row required");
  }
  for (double t : target_corr) {
    if (!(std::abs(t) <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "generate_linked_sources: |target| must be <= 1");
    }
  }
  const int side = grid_side(s1.cols());
  std::mt19937_64 rng(seed);

  // Fresh blobs stay away from the strongest voxels of every s1 map.
  const double hot = std::log(0.98 / 0.02);
  std::vector<char> occupied(static_cast<std::size_t>(s1.cols()), 0);
  for (Eigen::Index r = 0; r < s1.rows(); ++r)
    for (Eigen::Index t = 0; t < s1.cols(); ++t)
      if (s1(r, t) > hot) occupied[static_cast<std::size_t>(t)] = 1;
  BlobPlacer placer(side, rng);
  placer.occupy(std::move(occupied));

  Matrix s2(s1.rows(), s1.cols());
  for (Eigen::Index i = 0; i < s1.rows(); ++i) {
    const Vector base = s1.row(i).transpose();
    if (!(sample_variance(row_span(s1, i)) > 0.0)) {
      throw Error(ErrorKind::Numeric, "generate_linked_sources: cannot bracket target for constant row " +
                                          std::to_string(i));
    }
    const Vector z_base = standardized(base);
    const Vector z_fresh = standardized(blob_map(side, placer, rng));
    const double target = target_corr[static_cast<std::size_t>(i)];

    // Blend weight w in [-1, 1]; w = +-1 reproduces +-s1, w = 0 is the fresh map.
    auto blend = [&](double w) {
      const Vector mix = w * z_base + std::sqrt(std::max(0.0, 1.0 - w * w)) * z_fresh;
      return logistic_quantile_remap(mix);
    };
    auto achieved = [&](double w) { return corr(blend(w), base); };

    double lo = -1.0, hi = 1.0;
    double f_lo = achieved(lo) - target;
    double f_hi = achieved(hi) - target;
    if (f_lo > 0.0 || f_hi < 0.0) {
      if (std::abs(f_lo) > 0.01 && std::abs(f_hi) > 0.01) {
        throw Error(ErrorKind::Numeric, "generate_linked_sources: bisection failed to bracket row " +
                                            std::to_string(i));
      }
    }
    double best_w = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    double best_err = std::min(std::abs(f_lo), std::abs(f_hi));
    for (int iter = 0; iter < 60 && best_err > kLinkTolerance; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const double f_mid = achieved(mid) - target;
      if (std::abs(f_mid) < best_err) {
        best_err = std::abs(f_mid);
        best_w = mid;
      }
      if (f_mid < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    s2.row(i) = blend(best_w).transpose();
  }
  return s2;
}

Matrix generate_mixing(int rows, int cols, std::uint64_t seed) {
  if (cols < 1 || rows < cols) {
    throw Error(ErrorKind::InvalidArgument, "generate_mixing: need rows >= cols >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr int kRetries = 100;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    Matrix a(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a(i, j) = normal(rng);
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& s = svd.singularValues();
    if (s(s.size() - 1) > 0.0 && s(0) / s(s.size() - 1) < 100.0) return a;
  }
  throw Error(ErrorKind::Numeric, "generate_mixing: retry budget exhausted");
}

SimDataset generate_dataset(const SimSpec& spec) {
  spec.validate();
  SimDataset d;
  d.s1 = generate_blob_sources(spec);
  d.s2 = generate_linked_sources(d.s1, spec.target_corr, spec.seed + 1);
  d.a1 = generate_mixing(spec.n_rows_1, spec.n_comp, spec.seed + 2);
  d.a2 = generate_mixing(spec.n_rows_2, spec.n_comp, spec.seed + 3);
  d.x1 = d.a1 * d.s1;
  d.x2 = d.a2 * d.s2;
  if (spec.noise_std > 0.0) {
    std::mt19937_64 rng(spec.seed + 4);
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    d.x1 = d.x1.unaryExpr([&](double v) { return v + noise(rng); });
    d.x2 = d.x2.unaryExpr([&](double v) { return v + noise(rng); });
  }
  d.achieved_corr.resize(spec.n_comp);
  for (int i = 0; i < spec.n_comp; ++i) {
    d.achieved_corr(i) = pearson_corr(row_span(d.s1, i), row_span(d.s2, i));
  }
  return d;
}

MatchScore match_and_score(const Matrix& estimated, const Matrix& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "match_and_score: shapes differ");
  }
  const Matrix c = cross_correlation(truth, estimated);  // truth rows x estimated rows
  if (c.hasNaN()) throw Error(ErrorKind::InvalidArgument, "match_and_score: zero-variance row");
  const auto assign = hungarian_max_weight(c.cwiseAbs());
  MatchScore out;
  out.permutation = assign;
  out.signs.resize(assign.size());
  out.corr.resize(truth.rows());
  for (std::size_t j = 0; j < assign.size(); ++j) {
    const double r = c(static_cast<Eigen::Index>(j), assign[j]);
    out.signs[j] = r < 0.0 ? -1 : 1;
    out.corr(static_cast<Eigen::Index>(j)) = std::abs(r);
  }
  return out;
}

}  // namespace clip
