#include "clip/pipeline.hpp"

#include "clip/numcore.hpp"

#include <string>

namespace clip {

Matrix reduce_modality(const Matrix& x, int k) { return zscore_rows(pca_reduce(x, k).components); }

Matrix reduce_two_stage(const std::vector<Matrix>& subjects, int k_subject, int k_group) {
  if (subjects.empty()) throw Error(ErrorKind::InvalidArgument, "reduce_two_stage: no subjects");
  const Eigen::Index v = subjects.front().cols();
  Matrix stacked(static_cast<Eigen::Index>(subjects.size()) * k_subject, v);
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (subjects[s].cols() != v) {
      throw Error(ErrorKind::ShapeMismatch, "reduce_two_stage: subject " + std::to_string(s) +
                                                " has a different voxel count");
    }
    stacked.middleRows(static_cast<Eigen::Index>(s) * k_subject, k_subject) =
        reduce_modality(subjects[s], k_subject);
  }
  return reduce_modality(stacked, k_group);
}

StabilityOutcome run_stability(const Matrix& x1, const Matrix& x2, const CopulaSpec& spec,
                               const FitConfig& cfg, int n_runs, std::uint64_t base_seed) {
  StabilityOutcome out;
  out.collection = run_multi(x1, x2, spec, cfg, n_runs, base_seed);
  out.report1 = cluster_components(out.collection, 1);
  out.report2 = cluster_components(out.collection, 2);
  out.selected = select_centroid_run(out.report1, out.report2);

  const FitResult& best = out.collection.runs[static_cast<std::size_t>(out.selected)];
  auto calibrate = [](const Matrix& y, const Matrix& w, Matrix& y_out, Matrix& w_out, Matrix& a_out) {
    auto [ys, as] = sign_calibrate_by_skewness(y, w.inverse());
    w_out = w;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (ys.row(i).dot(y.row(i)) < 0.0) w_out.row(i) *= -1.0;
    }
    y_out = std::move(ys);
    a_out = std::move(as);
  };
  calibrate(best.y1, best.pair.w1, out.y1, out.w1, out.a1);
  calibrate(best.y2, best.pair.w2, out.y2, out.w2, out.a2);
  return out;
}

}  // namespace clip
