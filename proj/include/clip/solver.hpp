#pragma once

#include "clip/copula_model.hpp"
#include "clip/matrix.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace clip {

/// Sources are y1 = w1 * x1 and y2 = w2 * x2.
struct UnmixingPair {
  Matrix w1;
  Matrix w2;
};

struct FitConfig {
  int epochs = 500;
  int batch_size = 1024;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int align_epochs = 5;
  std::uint64_t seed = 0;
  double tol_rel = 1e-6;
  int tol_window = 10;

  void validate() const;
};

/// One application of align_components during a fit.
struct AlignmentRecord {
  int epoch = 0;
  std::vector<int> permutation;  // new modality-2 row i = old row permutation[i]
  std::vector<int> signs;        // +1 / -1 applied after the permutation
  std::vector<int> excluded;     // degenerate rows left in place
  double copula_before = 0.0;    // full-data copula log-likelihood
  double copula_after = 0.0;
};

struct FitResult {
  UnmixingPair pair;
  Matrix y1;
  Matrix y2;
  std::vector<double> nll_trace;  // full-data NLL per voxel, one entry per epoch
  Vector pair_corr;
  std::vector<AlignmentRecord> permutation_log;
  int epochs_run = 0;
  bool converged = false;  // early-stop criterion met
};

struct Alignment {
  UnmixingPair pair;
  std::vector<int> permutation;
  std::vector<int> signs;
  std::vector<int> excluded;
};

/// Orthonormal Q factors of seeded standard-normal draws.
UnmixingPair init_unmixing(int c, std::uint64_t seed);

/// Matches modality-2 components to modality-1 components by maximum total
/// |corr| and flips modality-2 signs so every matched pair correlates >= 0.
Alignment align_components(const UnmixingPair& pair, const Matrix& y1, const Matrix& y2);

/// Applies a permutation/sign vector to the rows of m (new row i = signs[i] * old row perm[i]).
Matrix permute_rows(const Matrix& m, const std::vector<int>& perm, const std::vector<int>& signs);

/// Mini-batch Adam on the joint copula NLL.
FitResult fit(const Matrix& x1_reduced, const Matrix& x2_reduced, const CopulaSpec& spec,
              const FitConfig& cfg);

/// Negates every source row with negative skewness together with the
/// matching column of mixing_like (n x c).
std::pair<Matrix, Matrix> sign_calibrate_by_skewness(const Matrix& sources,
                                                     const Matrix& mixing_like);

Vector compute_pair_correlations(const Matrix& y1, const Matrix& y2);

}  // namespace clip
