#include "clip/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace clip {

using cplx = std::complex<double>;

Sos butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz) {
  const double nyquist = 0.5 * fs_hz;
  if (order < 1) throw Error(ErrorKind::InvalidArgument, "butterworth: order must be >= 1");
  if (!(lo_hz > 0.0 && lo_hz < hi_hz)) {
    throw Error(ErrorKind::InvalidArgument, "butterworth: need 0 < lo < hi");
  }
  if (!(hi_hz < nyquist)) {
    throw Error(ErrorKind::InvalidArgument, "butterworth: hi=" + std::to_string(hi_hz) +
                                                " Hz must be below Nyquist " + std::to_string(nyquist));
  }

  // Pre-warped analog band edges for a bilinear transform with fs = 2.
  constexpr double kFs2 = 4.0;
  const double w1 = kFs2 * std::tan(std::numbers::pi * lo_hz / fs_hz);
  const double w2 = kFs2 * std::tan(std::numbers::pi * hi_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  std::vector<cplx> poles;
  for (int m = -order + 1; m < order; m += 2) {
    const cplx proto = -std::exp(cplx(0.0, std::numbers::pi * m / (2.0 * order)));
    const cplx lp = proto * (bw / 2.0);
    const cplx root = std::sqrt(lp * lp - w0 * w0);
    poles.push_back(lp + root);
    poles.push_back(lp - root);
  }
  // Analog gain bw^N, N zeros at s = 0; bilinear map s -> (4 + s) / (4 - s).
  cplx gain = std::pow(bw, order);
  std::vector<cplx> zpoles;
  for (const cplx& p : poles) {
    zpoles.push_back((kFs2 + p) / (kFs2 - p));
    gain /= (kFs2 - p);
  }
  gain *= std::pow(kFs2, order);

  // Pair conjugate / real poles into biquads.
  std::vector<cplx> upper, reals;
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) <= 1e-12 * std::max(1.0, std::abs(p))) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(reals.begin(), reals.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  std::vector<std::pair<cplx, cplx>> pairs;
  for (const cplx& p : upper) pairs.emplace_back(p, std::conj(p));
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);
  if (pairs.size() != static_cast<std::size_t>(order)) {
    throw Error(ErrorKind::Numeric, "butterworth: pole pairing failed");
  }
  // Poles nearest the unit circle go last.
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return std::abs(a.first) < std::abs(b.first);
  });

  Sos sos;
  for (const auto& [p, q] : pairs) {
    Biquad s;
    s.b = {1.0, 0.0, -1.0};  // one zero at z = 1, one at z = -1
    s.a = {-(p + q).real(), (p * q).real()};
    sos.push_back(s);
  }
  for (double& v : sos.front().b) v *= gain.real();
  return sos;
}

double sos_magnitude(const Sos& sos, double f_hz, double fs_hz) {
  const cplx zinv = std::exp(cplx(0.0, -2.0 * std::numbers::pi * f_hz / fs_hz));
  cplx h = 1.0;
  for (const Biquad& s : sos) {
    const cplx num = s.b[0] + s.b[1] * zinv + s.b[2] * zinv * zinv;
    const cplx den = 1.0 + s.a[0] * zinv + s.a[1] * zinv * zinv;
    h *= num / den;
  }
  return std::abs(h);
}

Vector sos_filter(const Sos& sos, const Vector& x, const std::vector<std::array<double, 2>>* zi) {
  Vector y = x;
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const Biquad& s = sos[k];
    double z0 = zi ? (*zi)[k][0] : 0.0;
    double z1 = zi ? (*zi)[k][1] : 0.0;
    for (Eigen::Index t = 0; t < y.size(); ++t) {
      const double in = y(t);
      const double out = s.b[0] * in + z0;
      z0 = s.b[1] * in - s.a[0] * out + z1;
      z1 = s.b[2] * in - s.a[1] * out;
      y(t) = out;
    }
  }
  return y;
}

std::vector<std::array<double, 2>> sos_filter_zi(const Sos& sos) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;  // steady-state input level of the current section
  for (const Biquad& s : sos) {
    const double dc = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
    const double y = scale * dc;
    const double z1 = scale * s.b[2] - s.a[1] * y;
    const double z0 = y - scale * s.b[0];
    zi.push_back({z0, z1});
    scale = y;
  }
  return zi;
}

Vector sos_filtfilt(const Sos& sos, const Vector& x) {
  const Eigen::Index n = x.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "filtfilt: need at least 2 samples");
  const Eigen::Index pad = std::min<Eigen::Index>(3 * (2 * static_cast<Eigen::Index>(sos.size()) + 1), n - 1);

  Vector ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) ext(i) = 2.0 * x(0) - x(pad - i);
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i) ext(pad + n + i) = 2.0 * x(n - 1) - x(n - 2 - i);

  const auto zi = sos_filter_zi(sos);
  auto scaled = [&](double level) {
    auto z = zi;
    for (auto& s : z) {
      s[0] *= level;
      s[1] *= level;
    }
    return z;
  };

  auto z_fwd = scaled(ext(0));
  Vector y = sos_filter(sos, ext, &z_fwd);
  Vector rev = y.reverse();
  auto z_bwd = scaled(rev(0));
  y = sos_filter(sos, rev, &z_bwd).reverse();
  return y.segment(pad, n);
}

}  // namespace clip
