#pragma once

#include "clip/matrix.hpp"

#include <cstdint>
#include <vector>

namespace clip {

struct SimSpec {
  int grid = 60;  // square grid side, v = grid * grid
  int n_comp = 4;
  std::vector<double> target_corr{0.94, 0.94, 0.91, 0.02};
  int n_rows_1 = 300;  // 10 subjects x 30 volumes
  int n_rows_2 = 10;   // 10 subjects
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimDataset {
  Matrix s1, s2;  // n_comp x v ground truth
  Matrix a1;      // n_rows_1 x n_comp
  Matrix a2;      // n_rows_2 x n_comp
  Matrix x1, x2;  // observed mixtures
  Vector achieved_corr;
};

/// Blob-structured spatial maps with an exact zero-mean, unit-scale logistic
/// marginal (rank-based quantile mapping).
Matrix generate_blob_sources(const SimSpec& spec);

/// One linked map per row of s1 with the requested Pearson correlation
/// (bisection on the blend weight, to within 0.01).
Matrix generate_linked_sources(const Matrix& s1, const std::vector<double>& target_corr,
                               std::uint64_t seed);

/// Standard-normal rows x cols matrix with condition number < 100.
Matrix generate_mixing(int rows, int cols, std::uint64_t seed);

SimDataset generate_dataset(const SimSpec& spec);

/// Maps each row of values onto logistic quantiles by rank.
Vector logistic_quantile_remap(const Eigen::Ref<const Vector>& values, double scale = 1.0);

struct MatchScore {
  std::vector<int> permutation;  // permutation[j] = estimated row matched to truth row j
  std::vector<int> signs;        // sign that makes the matched correlation positive
  Vector corr;                   // signed correlation after sign correction, by truth index
};

MatchScore match_and_score(const Matrix& estimated, const Matrix& truth);

}  // namespace clip
