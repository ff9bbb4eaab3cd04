#include "clip/config.hpp"

#include "clip/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace clip {

std::vector<double> sigma_schedule(double hi, double lo, int c) {
  if (c < 1) throw Error(ErrorKind::InvalidArgument, "sigma_schedule: c must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(c));
  if (c == 1) {
    out[0] = hi;
    return out;
  }
  const double step = (lo - hi) / static_cast<double>(c - 1);
  for (int i = 0; i < c; ++i) out[static_cast<std::size_t>(i)] = hi + step * i;
  out.back() = lo;
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    double v;
    if (!parse_number(s.substr(0, comma), v)) {
      throw Error(ErrorKind::Config, "cannot parse number '" + std::string(trim(s.substr(0, comma))) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> parse_sigma_schedule(std::string_view text, int c) {
  text = trim(text);
  std::vector<double> out;
  if (text.starts_with("linspace:")) {
    const auto ends = parse_list(text.substr(9));
    if (ends.size() != 2) throw Error(ErrorKind::Config, "linspace schedule needs 'hi,lo'");
    out = sigma_schedule(ends[0], ends[1], c);
  } else {
    out = parse_list(text);
    if (static_cast<int>(out.size()) != c) {
      throw Error(ErrorKind::Config, "sigma_schedule lists " + std::to_string(out.size()) +
                                         " values for model_order " + std::to_string(c));
    }
  }
  for (double s : out) {
    if (!(std::abs(s) < 1.0)) throw Error(ErrorKind::Config, "sigma values must satisfy |sigma| < 1");
  }
  return out;
}

FitConfig RunConfig::fit_config() const {
  FitConfig f;
  f.epochs = epochs;
  f.batch_size = batch_size;
  f.learning_rate = learning_rate;
  f.align_epochs = align_epochs;
  f.seed = seed;
  return f;
}

FncOptions RunConfig::fnc_options() const {
  FncOptions o;
  o.tr_seconds = tr_seconds;
  o.band_lo = band_lo;
  o.band_hi = band_hi;
  o.order = fnc_order;
  return o;
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  out << "model_order = " << model_order << '\n'
      << "sigma_schedule = " << sigma_schedule << '\n'
      << "epochs = " << epochs << '\n'
      << "batch_size = " << batch_size << '\n'
      << "learning_rate = " << format_double(learning_rate) << '\n'
      << "align_epochs = " << align_epochs << '\n'
      << "seed = " << seed << '\n'
      << "n_runs = " << n_runs << '\n'
      << "tr_seconds = " << format_double(tr_seconds) << '\n'
      << "band_lo = " << format_double(band_lo) << '\n'
      << "band_hi = " << format_double(band_hi) << '\n'
      << "ttest_variant = " << (ttest_variant == TTestVariant::Pooled ? "pooled" : "welch") << '\n'
      << "fnc_order = "
      << (fnc_order == FncOrder::DespikeThenFilter ? "despike_filter" : "filter_despike") << '\n';
  return out.str();
}

RunConfig parse_run_config(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = origin + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::Config, where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    auto bad = [&]() { return Error(ErrorKind::Config, where + ": invalid value for " + key); };
    auto as_int = [&](int& dst) { if (!parse_number(value, dst)) throw bad(); };
    auto as_double = [&](double& dst) { if (!parse_number(value, dst)) throw bad(); };

    if (key == "model_order") as_int(cfg.model_order);
    else if (key == "sigma_schedule") cfg.sigma_schedule = std::string(value);
    else if (key == "epochs") as_int(cfg.epochs);
    else if (key == "batch_size") as_int(cfg.batch_size);
    else if (key == "learning_rate") as_double(cfg.learning_rate);
    else if (key == "align_epochs") as_int(cfg.align_epochs);
    else if (key == "seed") { if (!parse_number(value, cfg.seed)) throw bad(); }
    else if (key == "n_runs") as_int(cfg.n_runs);
    else if (key == "tr_seconds") as_double(cfg.tr_seconds);
    else if (key == "band_lo") as_double(cfg.band_lo);
    else if (key == "band_hi") as_double(cfg.band_hi);
    else if (key == "ttest_variant") {
      if (value == "pooled") cfg.ttest_variant = TTestVariant::Pooled;
      else if (value == "welch") cfg.ttest_variant = TTestVariant::Welch;
      else throw bad();
    } else if (key == "fnc_order") {
      if (value == "despike_filter") cfg.fnc_order = FncOrder::DespikeThenFilter;
      else if (value == "filter_despike") cfg.fnc_order = FncOrder::FilterThenDespike;
      else throw bad();
    } else {
      throw Error(ErrorKind::Config, where + ": unknown key '" + key + "'");
    }
  }
  if (cfg.model_order < 1) throw Error(ErrorKind::Config, origin + ": model_order must be >= 1");
  try {
    (void)cfg.sigma();
    cfg.fit_config().validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path), path);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace clip
