#pragma once

#include "clip/postproc.hpp"
#include "clip/solver.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clip {

/// Evenly spaced dependency parameters from hi to lo inclusive.
std::vector<double> sigma_schedule(double hi, double lo, int c);

/// Parses "linspace:hi,lo" or an explicit comma list of c values.
std::vector<double> parse_sigma_schedule(std::string_view text, int c);

struct RunConfig {
  int model_order = 4;
  std::string sigma_schedule = "linspace:0.9,0.9";
  int epochs = 500;
  int batch_size = 1024;
  double learning_rate = 1e-3;
  int align_epochs = 5;
  std::uint64_t seed = 0;
  int n_runs = 10;
  double tr_seconds = 2.0;
  double band_lo = 0.01;
  double band_hi = 0.15;
  TTestVariant ttest_variant = TTestVariant::Pooled;
  FncOrder fnc_order = FncOrder::DespikeThenFilter;

  std::vector<double> sigma() const { return parse_sigma_schedule(sigma_schedule, model_order); }
  FitConfig fit_config() const;
  FncOptions fnc_options() const;
  /// Canonical key = value text; every key, fixed order.
  std::string canonical() const;
};

/// key = value lines; '#' starts a comment. Errors name the offending line.
RunConfig parse_run_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::string& path);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace clip
