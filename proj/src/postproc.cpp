#include "clip/postproc.hpp"

#include "clip/filter.hpp"
#include "clip/numcore.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace clip {

namespace {

Matrix project_onto_maps(const Matrix& data, const Matrix& maps, const char* who) {
  if (data.cols() != maps.cols()) {
    throw Error(ErrorKind::ShapeMismatch, std::string(who) + ": voxel counts differ (" +
                                              std::to_string(data.cols()) + " vs " +
                                              std::to_string(maps.cols()) + ")");
  }
  const Matrix maps_t = maps.transpose();
  Eigen::ColPivHouseholderQR<Matrix> qr(maps_t);
  if (qr.rank() < maps.rows()) {
    throw Error(ErrorKind::Singular, std::string(who) + ": group maps are rank-deficient");
  }
  const Matrix data_t = data.transpose();
  return qr.solve(data_t).transpose();
}

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

std::span<const double> span_of(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

Matrix back_reconstruct_fmri(const Matrix& subject_data, const Matrix& group_maps) {
  return project_onto_maps(subject_data, group_maps, "back_reconstruct_fmri");
}

Matrix back_reconstruct_smri(const Matrix& group_smri, const Matrix& group_maps) {
  return project_onto_maps(group_smri, group_maps, "back_reconstruct_smri");
}

Vector detrend_linear(const Vector& tc) {
  const Eigen::Index n = tc.size();
  if (n < 2) return Vector::Zero(n);
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  const double y_mean = tc.mean();
  double sty = 0.0, stt = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sty += dt * (tc(t) - y_mean);
    stt += dt * dt;
  }
  const double slope = sty / stt;
  Vector out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    out(t) = tc(t) - y_mean - slope * (static_cast<double>(t) - t_mean);
  }
  return out;
}

Vector despike(const Vector& tc) {
  const Eigen::Index n = tc.size();
  if (n < 3) return tc;
  const Vector resid = detrend_linear(tc);
  std::vector<double> r(resid.data(), resid.data() + n);
  const double med = median_of(r);
  std::vector<double> dev(r.size());
  std::transform(r.begin(), r.end(), dev.begin(), [med](double v) { return std::abs(v - med); });
  const double mad = 1.4826 * median_of(dev);
  if (!(mad > 0.0)) return tc;

  std::vector<char> spike(static_cast<std::size_t>(n), 0);
  bool any = false;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (dev[static_cast<std::size_t>(t)] > kDespikeThreshold * mad) {
      spike[static_cast<std::size_t>(t)] = 1;
      any = true;
    }
  }
  if (!any) return tc;

  Vector out = tc;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (!spike[static_cast<std::size_t>(t)]) continue;
    Eigen::Index left = t - 1, right = t + 1;
    while (left >= 0 && spike[static_cast<std::size_t>(left)]) --left;
    while (right < n && spike[static_cast<std::size_t>(right)]) ++right;
    if (left < 0 && right >= n) return tc;  // everything flagged
    if (left < 0) {
      out(t) = tc(right);
    } else if (right >= n) {
      out(t) = tc(left);
    } else {
      const double w = static_cast<double>(t - left) / static_cast<double>(right - left);
      out(t) = (1.0 - w) * tc(left) + w * tc(right);
    }
  }
  return out;
}

Vector bandpass(const Vector& tc, double tr_seconds, double lo_hz, double hi_hz) {
  if (!(tr_seconds > 0.0)) throw Error(ErrorKind::InvalidArgument, "bandpass: TR must be > 0");
  if (tc.size() < 3) throw Error(ErrorKind::InvalidArgument, "bandpass: need at least 3 samples");
  const Sos sos = butterworth_bandpass(kBandpassOrder, lo_hz, hi_hz, 1.0 / tr_seconds);
  return sos_filtfilt(sos, tc);
}

Vector process_timecourse(const Vector& tc, const FncOptions& opts) {
  Vector x = detrend_linear(tc);
  if (opts.order == FncOrder::DespikeThenFilter) {
    x = despike(x);
    return bandpass(x, opts.tr_seconds, opts.band_lo, opts.band_hi);
  }
  x = bandpass(x, opts.tr_seconds, opts.band_lo, opts.band_hi);
  return despike(x);
}

Matrix fnc(const Matrix& tc) {
  if (tc.rows() < 3) throw Error(ErrorKind::InvalidArgument, "fnc: need T >= 3");
  const Matrix t = tc.transpose();
  Matrix r = cross_correlation(t, t);
  if (r.hasNaN()) throw Error(ErrorKind::InvalidArgument, "fnc: zero-variance time-course");
  r = 0.5 * (r + r.transpose());
  r.diagonal().setOnes();
  return r;
}

Matrix fnc_pipeline(const Matrix& tc, const FncOptions& opts) {
  Matrix processed(tc.rows(), tc.cols());
  for (Eigen::Index j = 0; j < tc.cols(); ++j) {
    processed.col(j) = process_timecourse(tc.col(j), opts);
  }
  return fnc(processed);
}

SncMatrix snc(const Matrix& loadings, double alpha) {
  const Eigen::Index n = loadings.rows();
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "snc: need at least 3 subjects");
  SncMatrix out;
  out.r = fnc(loadings);
  const Eigen::Index c = out.r.rows();
  out.p.resize(c, c);
  out.mask.resize(c, c);
  const double df = static_cast<double>(n - 2);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      const double r = out.r(i, j);
      double p;
      if (i == j || std::abs(r) >= 1.0) {
        p = r > 0.0 ? 0.0 : 1.0;
      } else {
        const double t = r * std::sqrt(df / (1.0 - r * r));
        p = 1.0 - student_t_cdf(t, df);
      }
      out.p(i, j) = p;
      out.mask(i, j) = i != j && p < alpha;
    }
  }
  return out;
}

TTestResult two_sample_ttest(const Vector& a, const Vector& b, TTestVariant variant) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "two_sample_ttest: each group needs n >= 2");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(span_of(a));
  const double vb = sample_variance(span_of(b));
  const double diff = a.mean() - b.mean();

  TTestResult out;
  double se2;
  if (variant == TTestVariant::Pooled) {
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    if (!(pooled > 0.0)) {
      if (diff == 0.0) return {0.0, 1.0, na + nb - 2.0};
      throw Error(ErrorKind::InvalidArgument, "two_sample_ttest: zero pooled variance");
    }
    se2 = pooled * (1.0 / na + 1.0 / nb);
    out.df = na + nb - 2.0;
  } else {
    const double qa = va / na, qb = vb / nb;
    se2 = qa + qb;
    if (!(se2 > 0.0)) {
      if (diff == 0.0) return {0.0, 1.0, na + nb - 2.0};
      throw Error(ErrorKind::InvalidArgument, "two_sample_ttest: zero variance in both groups");
    }
    out.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  }
  out.t = diff / std::sqrt(se2);
  out.p = student_t_two_sided_p(out.t, out.df);
  return out;
}

std::vector<bool> fdr_bh(const std::vector<double>& p_values, double q) {
  const std::size_t m = p_values.size();
  std::vector<bool> reject(m, false);
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "fdr_bh: p-values must lie in [0, 1]");
  }
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "fdr_bh: q must lie in (0, 1)");
  if (m == 0) return reject;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t k_max = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    if (p_values[order[k - 1]] <= static_cast<double>(k) * q / static_cast<double>(m)) k_max = k;
  }
  for (std::size_t k = 0; k < k_max; ++k) reject[order[k]] = true;
  return reject;
}

ZTestResult fisher_z_test(double r1, double n1, double r2, double n2) {
  if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fisher_z_test: |r| must be < 1");
  }
  if (!(n1 > 3.0) || !(n2 > 3.0)) throw Error(ErrorKind::InvalidArgument, "fisher_z_test: n must be > 3");
  ZTestResult out;
  out.z = (std::atanh(r1) - std::atanh(r2)) / std::sqrt(1.0 / (n1 - 3.0) + 1.0 / (n2 - 3.0));
  out.p = std::erfc(std::abs(out.z) / std::numbers::sqrt2);
  return out;
}

double signed_log_p(double t, double p) {
  if (t == 0.0) return 0.0;
  const double s = t > 0.0 ? 1.0 : -1.0;
  return -s * std::log10(p);
}

std::vector<CellStat> group_stats(const Matrix& group_a, const Matrix& group_b, double q,
                                  TTestVariant variant) {
  if (group_a.cols() != group_b.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "group_stats: feature counts differ");
  }
  const Eigen::Index m = group_a.cols();
  std::vector<CellStat> cells(static_cast<std::size_t>(m));
  std::vector<double> p(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto tt = two_sample_ttest(group_a.col(j), group_b.col(j), variant);
    auto& cell = cells[static_cast<std::size_t>(j)];
    cell.t = tt.t;
    cell.p = tt.p;
    cell.signed_log_p = signed_log_p(tt.t, tt.p);
    p[static_cast<std::size_t>(j)] = tt.p;
  }
  const auto reject = fdr_bh(p, q);
  for (std::size_t j = 0; j < cells.size(); ++j) cells[j].significant = reject[j];
  return cells;
}

std::vector<int> modular_order(const Matrix& fnc_matrix, const std::vector<std::vector<int>>& groups) {
  const auto c = static_cast<int>(fnc_matrix.rows());
  std::vector<char> seen(static_cast<std::size_t>(c), 0);
  std::vector<int> order;
  for (const auto& g : groups) {
    std::vector<std::pair<double, int>> scored;
    for (int i : g) {
      if (i < 0 || i >= c || seen[static_cast<std::size_t>(i)]) {
        throw Error(ErrorKind::InvalidArgument, "modular_order: bad or repeated component " + std::to_string(i));
      }
      seen[static_cast<std::size_t>(i)] = 1;
      double s = 0.0;
      for (int j : g)
        if (j != i) s += fnc_matrix(i, j);
      scored.emplace_back(g.size() > 1 ? s / static_cast<double>(g.size() - 1) : 0.0, i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [score, i] : scored) order.push_back(i);
  }
  for (int i = 0; i < c; ++i)
    if (!seen[static_cast<std::size_t>(i)]) order.push_back(i);
  return order;
}

}  // namespace clip
