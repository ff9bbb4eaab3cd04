#pragma once

#include "clip/matrix.hpp"

#include <array>
#include <vector>

namespace clip {

/// One biquad section: b0 b1 b2 / 1 a1 a2.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};  // a1, a2 (a0 == 1)
};

using Sos = std::vector<Biquad>;

/// Digital Butterworth band-pass of the given prototype order (2*order poles),
/// bilinear transform with pre-warped band edges. Frequencies in Hz.
Sos butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz);

/// Frequency response magnitude |H(e^{j w})| at f_hz.
double sos_magnitude(const Sos& sos, double f_hz, double fs_hz);

/// Causal cascade filtering with optional per-section initial states.
Vector sos_filter(const Sos& sos, const Vector& x, const std::vector<std::array<double, 2>>* zi = nullptr);

/// Steady-state initial states for a unit-step input.
std::vector<std::array<double, 2>> sos_filter_zi(const Sos& sos);

/// Zero-phase forward-backward filtering with odd-extension padding.
Vector sos_filtfilt(const Sos& sos, const Vector& x);

}  // namespace clip
