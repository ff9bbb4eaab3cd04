#pragma once

#include "clip/solver.hpp"

#include <string>
#include <vector>

namespace clip {

struct RunFailure {
  int run = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct RunCollection {
  std::vector<FitResult> runs;     // successful runs, by run index
  std::vector<int> run_index;      // original run index of each entry in runs
  std::vector<RunFailure> failures;
};

struct ClusterReport {
  int modality = 1;
  /// members[k][r] = component index of run r in cluster k.
  std::vector<std::vector<int>> members;
  Vector iq;                     // stability index per cluster
  std::vector<int> centrotype;   // run index (into the collection) of each cluster's centrotype
  /// similarity_to_centrotype(k, r) = |corr| of run r's member with the centrotype of cluster k.
  Matrix similarity_to_centrotype;
  int selected_run = 0;          // best run for this modality alone
};

/// Repeats fit() with seeds base_seed + r. Runs execute in parallel; the
/// collection is ordered by run index and is identical to a serial run.
RunCollection run_multi(const Matrix& x1, const Matrix& x2, const CopulaSpec& spec,
                        const FitConfig& cfg, int n_runs, std::uint64_t base_seed);

/// One cluster per component: every run is aligned to run 0 by a maximum
/// |corr| assignment.
ClusterReport cluster_components(const RunCollection& coll, int modality);

/// Run whose members are, summed over both modalities and every cluster,
/// most similar to the cluster centrotypes. Ties go to the lowest index.
int select_centroid_run(const ClusterReport& report1, const ClusterReport& report2);

}  // namespace clip
