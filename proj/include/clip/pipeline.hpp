#pragma once

#include "clip/stability.hpp"

#include <vector>

namespace clip {

inline constexpr const char* kVersion = "1.0.0";

/// Single-stage reduction: PCA to k components, then z-score each component.
Matrix reduce_modality(const Matrix& x, int k);

/// Two-stage reduction: per-subject PCA to k_subject (z-scored), subjects
/// stacked along rows, then group PCA to k_group (z-scored).
Matrix reduce_two_stage(const std::vector<Matrix>& subjects, int k_subject, int k_group);

/// Selected run of a multi-run analysis with skewness-calibrated signs.
struct StabilityOutcome {
  RunCollection collection;
  ClusterReport report1;
  ClusterReport report2;
  int selected = 0;  // index into collection.runs
  Matrix y1, y2;     // calibrated maps of the selected run
  Matrix w1, w2;     // unmixing rows negated alongside their sources
  Matrix a1, a2;     // reduced-space mixing (inverse unmixing), calibrated
};

StabilityOutcome run_stability(const Matrix& x1, const Matrix& x2, const CopulaSpec& spec,
                               const FitConfig& cfg, int n_runs, std::uint64_t base_seed);

}  // namespace clip
