#pragma once

#include "clip/matrix.hpp"

#include <vector>

namespace clip {

/// Subject time-courses (T x c) by least-squares projection of the subject
/// data (T x v) onto the group maps (c x v): data * pinv(maps).
Matrix back_reconstruct_fmri(const Matrix& subject_data, const Matrix& group_maps);

/// Subject loadings (n_subj x c) for stacked structural data (n_subj x v).
Matrix back_reconstruct_smri(const Matrix& group_smri, const Matrix& group_maps);

Vector detrend_linear(const Vector& tc);

inline constexpr double kDespikeThreshold = 3.5;

/// Replaces samples further than 3.5 scaled MADs from the median of the
/// detrended series by linear interpolation of the neighbouring clean samples.
Vector despike(const Vector& tc);

inline constexpr int kBandpassOrder = 5;

/// Zero-phase 5th-order Butterworth band-pass.
Vector bandpass(const Vector& tc, double tr_seconds, double lo_hz = 0.01, double hi_hz = 0.15);

enum class FncOrder {
  DespikeThenFilter,  // detrend, despike, band-pass
  FilterThenDespike,  // detrend, band-pass, despike
};

struct FncOptions {
  double tr_seconds = 2.0;
  double band_lo = 0.01;
  double band_hi = 0.15;
  FncOrder order = FncOrder::DespikeThenFilter;
};

Vector process_timecourse(const Vector& tc, const FncOptions& opts);

/// Pearson correlation between the columns of tc (T x c).
Matrix fnc(const Matrix& tc);

/// Processes every column, then fnc().
Matrix fnc_pipeline(const Matrix& tc, const FncOptions& opts);

struct SncMatrix {
  Matrix r;   // c x c Pearson correlation of loading columns
  Matrix p;   // one-sided p for r > 0
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // p < alpha, diagonal false
};

SncMatrix snc(const Matrix& loadings, double alpha = 0.05);

enum class TTestVariant { Pooled, Welch };

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

TTestResult two_sample_ttest(const Vector& a, const Vector& b,
                             TTestVariant variant = TTestVariant::Pooled);

/// Benjamini-Hochberg step-up rejection mask.
std::vector<bool> fdr_bh(const std::vector<double>& p_values, double q = 0.05);

struct ZTestResult {
  double z = 0.0;
  double p = 1.0;
};

ZTestResult fisher_z_test(double r1, double n1, double r2, double n2);

/// -sign(t) * log10(p).
double signed_log_p(double t, double p);

struct CellStat {
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
  double signed_log_p = 0.0;
};

/// Column-wise two-sample tests between group_a (n_a x m) and group_b
/// (n_b x m) with BH correction across the m columns.
std::vector<CellStat> group_stats(const Matrix& group_a, const Matrix& group_b, double q = 0.05,
                                  TTestVariant variant = TTestVariant::Pooled);

/// Display order: groups in the given order, each sorted by descending mean
/// connectivity to the rest of its group. groups[k] lists component indices.
std::vector<int> modular_order(const Matrix& fnc, const std::vector<std::vector<int>>& groups);

}  // namespace clip
