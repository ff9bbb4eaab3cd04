#include "clip/filter.hpp"
#include "clip/numcore.hpp"
#include "clip/postproc.hpp"
#include "signal_oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

namespace clip {
namespace {

using test::random_matrix;
using test::sinusoid;
using test::sinusoid_amplitude;

TEST(BackReconstruct, ExactModel) {
  std::mt19937_64 rng(61);
  const Matrix maps = random_matrix(4, 500, rng);
  const Matrix a = random_matrix(30, 4, rng);
  EXPECT_LT((back_reconstruct_fmri(a * maps, maps) - a).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix loads = random_matrix(12, 4, rng);
  EXPECT_LT((back_reconstruct_smri(loads * maps, maps) - loads).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BackReconstruct, OrthonormalMapsUseTranspose) {
  std::mt19937_64 rng(62);
  const Eigen::HouseholderQR<Matrix> qr(random_matrix(300, 3, rng));
  const Matrix q = qr.householderQ() * Matrix::Identity(300, 3);
  const Matrix maps = q.transpose();
  const Matrix data = random_matrix(20, 300, rng);
  EXPECT_LT((back_reconstruct_fmri(data, maps) - data * maps.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BackReconstruct, LinearInSubjectRows) {
  std::mt19937_64 rng(63);
  const Matrix maps = random_matrix(3, 200, rng);
  Matrix data = random_matrix(5, 200, rng);
  const Matrix base = back_reconstruct_smri(data, maps);
  data.row(2) *= 2.0;
  const Matrix doubled = back_reconstruct_smri(data, maps);
  EXPECT_LT((doubled.row(2) - 2.0 * base.row(2)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((doubled.row(1) - base.row(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BackReconstruct, NoisyRegressionAtSnr10) {
  std::mt19937_64 rng(64);
  const Matrix maps = random_matrix(4, 3600, rng);
  const Matrix a = random_matrix(100, 4, rng);
  const Matrix clean = a * maps;
  const double signal_sd = std::sqrt(clean.squaredNorm() / static_cast<double>(clean.size()));
  const Matrix noisy = clean + random_matrix(100, 3600, rng, signal_sd / 10.0);
  const Matrix tc = back_reconstruct_fmri(noisy, maps);
  for (Eigen::Index k = 0; k < 4; ++k) {
    EXPECT_GE(pearson_corr(test::to_std(tc.col(k)), test::to_std(a.col(k))), 0.99);
  }
}

TEST(BackReconstruct, Errors) {
  std::mt19937_64 rng(65);
  Matrix maps = random_matrix(3, 50, rng);
  EXPECT_THROW(back_reconstruct_fmri(random_matrix(4, 49, rng), maps), Error);
  maps.row(2) = maps.row(0) + maps.row(1);
  EXPECT_THROW(back_reconstruct_fmri(random_matrix(4, 50, rng), maps), Error);
}

TEST(Detrend, Examples) {
  const Eigen::Index n = 100;
  Vector line(n), wave(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    line(t) = 3.0 - 0.25 * static_cast<double>(t);
    // Even about the window centre, so orthogonal to both 1 and t.
    wave(t) = std::cos(2.0 * std::numbers::pi * (static_cast<double>(t) - 49.5) / 20.0);
  }
  EXPECT_LT(detrend_linear(line).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((detrend_linear(wave) - wave).cwiseAbs().maxCoeff(), 1e-10);
  const Vector sine = sinusoid(n, 0.05, 1.0);
  EXPECT_LT((detrend_linear(line + sine) - detrend_linear(sine)).cwiseAbs().maxCoeff(), 1e-8);
  const Vector r = detrend_linear(sine);
  Vector tt(n);
  for (Eigen::Index t = 0; t < n; ++t) tt(t) = static_cast<double>(t);
  EXPECT_NEAR(r.sum(), 0.0, 1e-10);
  EXPECT_NEAR(r.dot(tt), 0.0, 1e-8);
}

TEST(Despike, NoSpikesIsIdentity) {
  const Vector x = sinusoid(200, 0.05, 1.0);
  EXPECT_EQ(despike(x), x);
}

TEST(Despike, SingleSpikeRemoved) {
  const Vector clean = sinusoid(200, 0.05, 1.0);
  Vector x = clean;
  const double sd = std::sqrt(sample_variance(test::to_std(clean)));
  x(77) += 50.0 * sd;
  const Vector d = despike(x);
  EXPECT_LT(std::abs(d(77) - clean(77)), 0.1);
  for (Eigen::Index t = 0; t < 200; ++t)
    if (t != 77) EXPECT_EQ(d(t), x(t));
}

TEST(Despike, AdjacentSpikesBothReplaced) {
  const Vector clean = sinusoid(200, 0.05, 1.0);
  Vector x = clean;
  x(100) += 40.0;
  x(101) -= 35.0;
  const Vector d = despike(x);
  EXPECT_NE(d(100), x(100));
  EXPECT_NE(d(101), x(101));
  EXPECT_LT(std::abs(d(100) - clean(100)), 0.2);
  EXPECT_LT(std::abs(d(101) - clean(101)), 0.2);
  EXPECT_EQ(d(99), x(99));
  EXPECT_EQ(d(102), x(102));
}

TEST(Butterworth, MatchesReferenceDesign) {
  // Reference: SciPy butter(5, [0.01, 0.15], 'band', fs=0.5) and sosfiltfilt.
  const Sos sos = butterworth_bandpass(5, 0.01, 0.15, 0.5);
  EXPECT_EQ(sos.size(), 5u);
  EXPECT_NEAR(sos_magnitude(sos, 0.003, 0.5), 0.00195135, 1e-7);
  EXPECT_NEAR(sos_magnitude(sos, 0.01, 0.5), std::sqrt(0.5), 1e-9);
  EXPECT_NEAR(sos_magnitude(sos, 0.15, 0.5), std::sqrt(0.5), 1e-9);
  EXPECT_NEAR(sos_magnitude(sos, 0.05, 0.5), 1.0, 1e-6);

  Vector x(64);
  for (Eigen::Index n = 0; n < 64; ++n) {
    const double t = static_cast<double>(n);
    x(n) = std::sin(0.3 * t) + 0.5 * std::cos(0.05 * t) + 0.01 * t;
  }
  const Vector y = sos_filtfilt(sos, x);
  EXPECT_NEAR(y(0), -0.023870924489017953, 1e-9);
  EXPECT_NEAR(y(1), 0.2763978849961113, 1e-9);
  EXPECT_NEAR(y(10), 0.1568364962851198, 1e-9);
  EXPECT_NEAR(y(31), 0.14604766012944914, 1e-9);
  EXPECT_NEAR(y(50), 0.5134808332728322, 1e-9);
  EXPECT_NEAR(y(63), 0.15977490499354907, 1e-9);
}

TEST(Butterworth, ZiIsSteadyStateForStep) {
  const Sos sos = butterworth_bandpass(5, 0.01, 0.15, 0.5);
  const auto zi = sos_filter_zi(sos);
  const Vector ones = Vector::Ones(50);
  const Vector y = sos_filter(sos, ones, &zi);
  // Band-pass: steady-state response to a constant is zero.
  EXPECT_LT(y.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bandpass, AmplitudeCriteria) {
  const double tr = 2.0;
  const Eigen::Index n = 1024;
  const Vector pass = bandpass(sinusoid(n, 0.05, tr), tr);
  const double gain = sinusoid_amplitude(pass, 0.05, tr);
  EXPECT_GE(gain, 0.89);
  EXPECT_LE(gain, 1.12);
  EXPECT_LT(std::abs(20.0 * std::log10(gain)), 1.0);

  const double stop_hi = sinusoid_amplitude(bandpass(sinusoid(n, 0.3 * 0.999, tr), tr), 0.3 * 0.999, tr);
  EXPECT_LT(stop_hi, 0.1);
  const double stop_lo = sinusoid_amplitude(bandpass(sinusoid(n, 0.003, tr), tr), 0.003, tr);
  EXPECT_LT(stop_lo, 0.1);
}

TEST(Bandpass, RemovesDcAndIsNearlyIdempotentInBand) {
  const double tr = 2.0;
  EXPECT_LT(std::abs(bandpass(Vector::Constant(1024, 100.0), tr).mean()), 1e-6 * 100.0);
  const Vector y = bandpass(sinusoid(1024, 0.05, tr) + Vector::Constant(1024, 100.0), tr);
  const double once = sinusoid_amplitude(y, 0.05, tr);
  const double twice = sinusoid_amplitude(bandpass(y, tr), 0.05, tr);
  EXPECT_NEAR(twice / once, 1.0, 0.02);
}

TEST(Bandpass, Errors) {
  EXPECT_THROW(bandpass(Vector::Ones(100), 4.0), Error);  // Nyquist 0.125 Hz < 0.15 Hz
  EXPECT_THROW(bandpass(Vector::Ones(100), 0.0), Error);
  EXPECT_NO_THROW(bandpass(sinusoid(30, 0.05, 2.0), 2.0));
}

TEST(Fnc, Examples) {
  std::mt19937_64 rng(66);
  Matrix tc = random_matrix(500, 4, rng);
  tc.col(2) = tc.col(0);
  tc.col(3) = -tc.col(1);
  const Matrix f = fnc(tc);
  EXPECT_NEAR(f(0, 2), 1.0, 1e-12);
  EXPECT_NEAR(f(1, 3), -1.0, 1e-12);
  EXPECT_EQ((f - f.transpose()).cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(f(i, i), 1.0);

  const Matrix noise = fnc(random_matrix(10000, 5, rng));
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      if (i != j) EXPECT_LT(std::abs(noise(i, j)), 0.05);
}

TEST(Fnc, PipelineOrderSwitch) {
  std::mt19937_64 rng(67);
  Matrix tc = random_matrix(200, 3, rng);
  tc(50, 1) += 30.0;
  FncOptions a, b;
  b.order = FncOrder::FilterThenDespike;
  const Matrix fa = fnc_pipeline(tc, a), fb = fnc_pipeline(tc, b);
  EXPECT_GT((fa - fb).cwiseAbs().maxCoeff(), 0.0);
  for (const Matrix* f : {&fa, &fb}) {
    EXPECT_LE(f->cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LT((*f - f->transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
  // Manual chain for one column.
  Vector col = tc.col(1);
  const Vector manual = bandpass(despike(detrend_linear(col)), 2.0);
  EXPECT_LT((process_timecourse(col, a) - manual).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Snc, Examples) {
  std::mt19937_64 rng(68);
  Matrix l = random_matrix(103, 3, rng);
  l.col(1) = l.col(0);
  const SncMatrix s = snc(l);
  EXPECT_NEAR(s.r(0, 1), 1.0, 1e-12);
  EXPECT_TRUE(s.mask(0, 1));
  EXPECT_FALSE(s.mask(0, 0));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(s.r(i, i), 1.0);
}

TEST(Snc, OneSidedPValueOracle) {
  // Columns with sample correlation exactly 0.3: x and 0.3 x + sqrt(0.91) y with x, y orthonormal.
  std::mt19937_64 rng(69);
  Matrix base = random_matrix(103, 2, rng);
  base.rowwise() -= base.colwise().mean();
  const Eigen::HouseholderQR<Matrix> qr(base);
  const Matrix q = qr.householderQ() * Matrix::Identity(103, 2);
  Matrix l(103, 2);
  l.col(0) = q.col(0);
  l.col(1) = 0.3 * q.col(0) + std::sqrt(0.91) * q.col(1);
  const SncMatrix s = snc(l);
  EXPECT_NEAR(s.r(0, 1), 0.3, 1e-12);
  EXPECT_NEAR(s.p(0, 1), 0.0010394, 1e-6);
}

TEST(Snc, NullMaskRateNearAlpha) {
  std::mt19937_64 rng(70);
  long masked = 0, cells = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const SncMatrix s = snc(random_matrix(50, 6, rng));
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index j = i + 1; j < 6; ++j) {
        masked += s.mask(i, j);
        ++cells;
      }
  }
  EXPECT_NEAR(static_cast<double>(masked) / static_cast<double>(cells), 0.05, 0.015);
}

TEST(TTest, Examples) {
  Vector a(4), b(4);
  a << 0, 0, 1, 1;
  b << 1, 1, 2, 2;
  const TTestResult r = two_sample_ttest(a, b);
  EXPECT_NEAR(r.t, -2.449490, 1e-6);
  EXPECT_NEAR(r.p, 0.0498, 0.001);
  EXPECT_NEAR(r.p, 0.049825, 1e-6);
  EXPECT_EQ(r.df, 6.0);
  const TTestResult s = two_sample_ttest(b, a);
  EXPECT_EQ(s.t, -r.t);
  EXPECT_EQ(s.p, r.p);
  const TTestResult same = two_sample_ttest(a, a);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_NEAR(same.p, 1.0, 1e-15);
  EXPECT_THROW(two_sample_ttest(Vector::Ones(3), 2.0 * Vector::Ones(4)), Error);
  // Equal constant groups carry no evidence of a difference.
  const TTestResult flat = two_sample_ttest(Vector::Ones(3), Vector::Ones(4));
  EXPECT_EQ(flat.t, 0.0);
  EXPECT_EQ(flat.p, 1.0);
  EXPECT_THROW(two_sample_ttest(Vector::Ones(1), b), Error);
}

TEST(TTest, WelchDegreesOfFreedom) {
  Vector a(3), b(5);
  a << 1, 2, 4;
  b << 0, 0, 1, 0, 1;
  const TTestResult w = two_sample_ttest(a, b, TTestVariant::Welch);
  // va = 7/3, vb = 0.3; se^2 = 7/9 + 0.06
  const double sa = 7.0 / 9.0, sb = 0.06;
  EXPECT_NEAR(w.t, (7.0 / 3.0 - 0.4) / std::sqrt(sa + sb), 1e-12);
  EXPECT_NEAR(w.df, (sa + sb) * (sa + sb) / (sa * sa / 2.0 + sb * sb / 4.0), 1e-12);
  EXPECT_NEAR(w.p, student_t_two_sided_p(w.t, w.df), 1e-15);
}

TEST(FdrBh, Examples) {
  EXPECT_EQ(fdr_bh({0.04}), std::vector<bool>{true});
  EXPECT_EQ(fdr_bh(std::vector<double>(10, 0.01)), std::vector<bool>(10, true));
  EXPECT_EQ(fdr_bh({0.001, 0.02, 0.04, 0.9}), (std::vector<bool>{true, true, false, false}));
  EXPECT_EQ(fdr_bh({0.9, 0.04, 0.001, 0.02}), (std::vector<bool>{false, false, true, true}));
  EXPECT_TRUE(fdr_bh({}).empty());
  EXPECT_THROW(fdr_bh({0.5, 1.5}), Error);
}

TEST(FisherZ, Examples) {
  const ZTestResult same = fisher_z_test(0.4, 50, 0.4, 80);
  EXPECT_EQ(same.z, 0.0);
  EXPECT_NEAR(same.p, 1.0, 1e-15);
  const ZTestResult r = fisher_z_test(0.5, 103, 0.0, 103);
  EXPECT_NEAR(r.z, 3.88418, 1e-5);
  EXPECT_NEAR(r.p, 1.0268e-4, 1e-7);
  EXPECT_EQ(fisher_z_test(0.0, 103, 0.5, 103).z, -r.z);
  EXPECT_THROW(fisher_z_test(1.0, 10, 0.0, 10), Error);
  EXPECT_THROW(fisher_z_test(0.1, 3, 0.0, 10), Error);
}

TEST(SignedLogP, Examples) {
  EXPECT_NEAR(signed_log_p(2.0, 0.01), 2.0, 1e-12);
  EXPECT_NEAR(signed_log_p(-2.0, 0.01), -2.0, 1e-12);
  EXPECT_EQ(signed_log_p(0.0, 1.0), 0.0);
}

TEST(GroupStats, FlagsSubsetOfRawThreshold) {
  std::mt19937_64 rng(71);
  Matrix a = random_matrix(20, 10, rng), b = random_matrix(25, 10, rng);
  a.col(3).array() += 2.0;
  const auto cells = group_stats(a, b, 0.05);
  ASSERT_EQ(cells.size(), 10u);
  EXPECT_TRUE(cells[3].significant);
  for (const CellStat& c : cells) {
    if (c.significant) EXPECT_LT(c.p, 0.05);
    EXPECT_NEAR(c.signed_log_p, signed_log_p(c.t, c.p), 1e-15);
  }
  EXPECT_THROW(group_stats(a, random_matrix(5, 9, rng)), Error);
}

TEST(ModularOrder, GroupsSortedByWithinConnectivity) {
  Matrix f = Matrix::Identity(4, 4);
  f(0, 1) = f(1, 0) = 0.2;
  f(0, 3) = f(3, 0) = 0.9;
  f(1, 3) = f(3, 1) = 0.1;
  const auto order = modular_order(f, {{2}, {0, 1, 3}});
  EXPECT_EQ(order, (std::vector<int>{2, 0, 3, 1}));
  EXPECT_THROW(modular_order(f, {{0, 0}, {1, 2, 3}}), Error);
}

}  // namespace
}  // namespace clip
