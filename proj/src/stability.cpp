#include "clip/stability.hpp"

#include "clip/hungarian.hpp"
#include "clip/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace clip {

RunCollection run_multi(const Matrix& x1, const Matrix& x2, const CopulaSpec& spec,
                        const FitConfig& cfg, int n_runs, std::uint64_t base_seed) {
  if (n_runs < 2) throw Error(ErrorKind::InvalidArgument, "run_multi: n_runs must be >= 2");

  std::vector<std::optional<FitResult>> results(static_cast<std::size_t>(n_runs));
  std::vector<std::string> errors(static_cast<std::size_t>(n_runs));

#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < n_runs; ++r) {
    FitConfig run_cfg = cfg;
    run_cfg.seed = base_seed + static_cast<std::uint64_t>(r);
    try {
      results[static_cast<std::size_t>(r)] = fit(x1, x2, spec, run_cfg);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(r)] = e.what();
    }
  }

  RunCollection coll;
  for (int r = 0; r < n_runs; ++r) {
    auto& res = results[static_cast<std::size_t>(r)];
    if (res) {
      coll.runs.push_back(std::move(*res));
      coll.run_index.push_back(r);
    } else {
      coll.failures.push_back({r, base_seed + static_cast<std::uint64_t>(r),
                               errors[static_cast<std::size_t>(r)]});
    }
  }
  if (coll.runs.size() < 2) {
    throw Error(ErrorKind::Numeric, "run_multi: only " + std::to_string(coll.runs.size()) +
                                        " of " + std::to_string(n_runs) + " runs succeeded");
  }
  return coll;
}

ClusterReport cluster_components(const RunCollection& coll, int modality) {
  if (modality != 1 && modality != 2) {
    throw Error(ErrorKind::InvalidArgument, "cluster_components: modality must be 1 or 2");
  }
  const auto n_runs = static_cast<int>(coll.runs.size());
  if (n_runs < 2) throw Error(ErrorKind::InvalidArgument, "cluster_components: need >= 2 runs");

  auto maps = [&](int r) -> const Matrix& {
    const auto& fr = coll.runs[static_cast<std::size_t>(r)];
    return modality == 1 ? fr.y1 : fr.y2;
  };
  const Eigen::Index c = maps(0).rows();
  for (int r = 1; r < n_runs; ++r) {
    if (maps(r).rows() != c || maps(r).cols() != maps(0).cols()) {
      throw Error(ErrorKind::ShapeMismatch, "cluster_components: runs differ in shape");
    }
  }

  // Pairwise |corr| between all run components, indexed by run * c + component.
  const Eigen::Index total = static_cast<Eigen::Index>(n_runs) * c;
  Matrix sim(total, total);
  for (int a = 0; a < n_runs; ++a) {
    for (int b = a; b < n_runs; ++b) {
      const Matrix block = cross_correlation(maps(a), maps(b)).cwiseAbs();
      if (block.hasNaN()) {
        throw Error(ErrorKind::InvalidArgument, "cluster_components: degenerate component in run " +
                                                    std::to_string(a) + " or " + std::to_string(b));
      }
      sim.block(a * c, b * c, c, c) = block;
      sim.block(b * c, a * c, c, c) = block.transpose();
    }
  }

  ClusterReport rep;
  rep.modality = modality;
  rep.members.assign(static_cast<std::size_t>(c), std::vector<int>(static_cast<std::size_t>(n_runs)));
  for (Eigen::Index k = 0; k < c; ++k) rep.members[k][0] = static_cast<int>(k);
  for (int r = 1; r < n_runs; ++r) {
    const auto assign = hungarian_max_weight(sim.block(0, r * c, c, c));
    for (Eigen::Index k = 0; k < c; ++k) rep.members[k][r] = assign[static_cast<std::size_t>(k)];
  }

  auto node = [c](int run, int comp) { return static_cast<Eigen::Index>(run) * c + comp; };

  rep.iq.resize(c);
  rep.centrotype.resize(static_cast<std::size_t>(c));
  rep.similarity_to_centrotype.resize(c, n_runs);
  for (Eigen::Index k = 0; k < c; ++k) {
    std::vector<char> in_cluster(static_cast<std::size_t>(total), 0);
    for (int r = 0; r < n_runs; ++r) in_cluster[node(r, rep.members[k][r])] = 1;

    double within = 0.0, between = 0.0;
    long n_within = 0, n_between = 0;
    for (int r = 0; r < n_runs; ++r) {
      const Eigen::Index a = node(r, rep.members[k][r]);
      for (Eigen::Index b = 0; b < total; ++b) {
        if (b == a) continue;
        if (in_cluster[static_cast<std::size_t>(b)]) {
          within += sim(a, b);
          ++n_within;
        } else {
          between += sim(a, b);
          ++n_between;
        }
      }
    }
    const double mean_within = within / static_cast<double>(n_within);
    const double mean_between = n_between > 0 ? between / static_cast<double>(n_between) : 0.0;
    rep.iq(k) = std::clamp(mean_within - mean_between, -1.0, 1.0);

    int best = 0;
    double best_sum = -1.0;
    for (int r = 0; r < n_runs; ++r) {
      double s = 0.0;
      for (int q = 0; q < n_runs; ++q) s += sim(node(r, rep.members[k][r]), node(q, rep.members[k][q]));
      if (s > best_sum) {
        best_sum = s;
        best = r;
      }
    }
    rep.centrotype[k] = best;
    for (int r = 0; r < n_runs; ++r) {
      rep.similarity_to_centrotype(k, r) =
          sim(node(r, rep.members[k][r]), node(best, rep.members[k][best]));
    }
  }

  const Vector per_run = rep.similarity_to_centrotype.colwise().sum().transpose();
  Eigen::Index sel = 0;
  for (Eigen::Index r = 1; r < per_run.size(); ++r)
    if (per_run(r) > per_run(sel)) sel = r;
  rep.selected_run = static_cast<int>(sel);
  return rep;
}

int select_centroid_run(const ClusterReport& report1, const ClusterReport& report2) {
  if (report1.similarity_to_centrotype.cols() != report2.similarity_to_centrotype.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "select_centroid_run: reports come from different collections");
  }
  const Vector score = (report1.similarity_to_centrotype.colwise().sum() +
                        report2.similarity_to_centrotype.colwise().sum())
                           .transpose();
  Eigen::Index sel = 0;
  for (Eigen::Index r = 1; r < score.size(); ++r)
    if (score(r) > score(sel)) sel = r;
  return static_cast<int>(sel);
}

}  // namespace clip
