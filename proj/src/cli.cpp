#include "clip/cli.hpp"

#include "clip/config.hpp"
#include "clip/heatmap.hpp"
#include "clip/matrix_io.hpp"
#include "clip/numcore.hpp"
#include "clip/pipeline.hpp"
#include "clip/postproc.hpp"
#include "clip/simulation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace clip {

namespace {

/// Collects the manifest written beside every command's outputs.
class Manifest {
 public:
  explicit Manifest(std::string command) { add("command", std::move(command)); add("version", kVersion); }

  void add(const std::string& key, const std::string& value) { lines_ << key << " = " << value << '\n'; }
  void input(const fs::path& path) {
    add("input", path.filename().string() + " fnv1a=" + fnv1a_hex(read_file(path)));
  }
  void output(const fs::path& path) { add("output", path.filename().string()); }
  void write(const fs::path& path) const { write_file_atomic(path, lines_.str()); }

 private:
  std::ostringstream lines_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

Matrix read_input(const std::string& path, Manifest& manifest) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "cannot read " + path);
  manifest.input(path);
  return read_matrix(path);
}

Matrix stack_rows(const std::vector<Matrix>& parts) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != parts.front().cols()) throw Error(ErrorKind::ShapeMismatch, "stacked inputs differ in column count");
    rows += p.rows();
  }
  Matrix out(rows, parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

void emit(const fs::path& dir, const std::string& name, const Matrix& m, Manifest& manifest) {
  write_matrix(dir / name, m);
  manifest.output(dir / name);
}

void emit_text(const fs::path& path, const std::string& text, Manifest& manifest) {
  write_file_atomic(path, text);
  manifest.output(path);
}

// Shared flags of fit and stability.
struct ModelInputs {
  std::string config;
  std::vector<std::string> x1, x2;
  std::string out;
  int subject_pca = 0;
  int group_pca = 0;
  bool reduced = false;
};

void add_model_flags(CLI::App* cmd, ModelInputs& in) {
  cmd->add_option("--config", in.config, "run configuration (key = value)")->required();
  cmd->add_option("--x1", in.x1, "modality-1 data (rows x voxels); repeat for per-subject files")->required();
  cmd->add_option("--x2", in.x2, "modality-2 data (rows x voxels); repeated files are stacked")->required();
  cmd->add_option("--out", in.out, "output directory")->required();
  cmd->add_option("--subject-pca", in.subject_pca, "two-stage reduction: per-subject order for x1 files");
  cmd->add_option("--group-pca", in.group_pca, "two-stage reduction: group order (defaults to model_order)");
  cmd->add_flag("--reduced", in.reduced, "inputs are already reduced to model_order rows");
}

std::pair<Matrix, Matrix> prepare_inputs(const ModelInputs& in, const RunConfig& cfg, Manifest& manifest) {
  std::vector<Matrix> m1, m2;
  for (const auto& p : in.x1) m1.push_back(read_input(p, manifest));
  for (const auto& p : in.x2) m2.push_back(read_input(p, manifest));
  const int k = cfg.model_order;
  Matrix x1, x2;
  if (in.reduced) {
    x1 = stack_rows(m1);
    x2 = stack_rows(m2);
  } else {
    if (in.subject_pca > 0) {
      if (in.group_pca > 0 && in.group_pca != k) {
        throw Error(ErrorKind::InvalidArgument, "--group-pca must equal model_order");
      }
      x1 = reduce_two_stage(m1, in.subject_pca, k);
      manifest.add("reduction_x1", "two-stage " + std::to_string(in.subject_pca) + "/" + std::to_string(k));
    } else {
      x1 = reduce_modality(stack_rows(m1), k);
    }
    x2 = reduce_modality(stack_rows(m2), k);
  }
  if (x1.cols() != x2.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "modalities differ in voxel count: " + std::to_string(x1.cols()) +
                                              " vs " + std::to_string(x2.cols()));
  }
  return {std::move(x1), std::move(x2)};
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::ShapeMismatch: return kExitShape;
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Format: return kExitFormat;
    case ErrorKind::Singular:
    case ErrorKind::NonFinite:
    case ErrorKind::Diverged:
    case ErrorKind::Numeric: return kExitNumeric;
    case ErrorKind::InvalidArgument: return kExitInvalid;
  }
  return kExitFailure;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

void report_error(std::ostream& err, const char* code, int exit_code, const std::string& msg) {
  err << "error code=" << code << " exit=" << exit_code << " message=\"" << one_line(msg) << "\"\n";
}

std::vector<std::string> read_labels(const std::string& path) {
  std::vector<std::string> labels;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  return labels;
}

std::vector<std::vector<int>> read_groups(const std::string& path) {
  std::vector<std::vector<int>> groups;
  std::istringstream in(read_file(path));
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<int> g;
    std::istringstream fields(line);
    for (std::string f; std::getline(fields, f, ',');) {
      try {
        g.push_back(std::stoi(f));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Format, path + ":" + std::to_string(line_no) + ": bad component index '" + f + "'");
      }
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CLiP-ICA: two-modality ICA with components linked through a Gaussian copula", "clip_ica"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::function<void()> action;

  // simulate
  SimSpec sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "generate a linked two-modality ground-truth dataset");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--grid", sim.grid, "grid side (voxels = grid^2)");
  simulate->add_option("--corr", sim.target_corr, "target pair correlations")->delimiter(',');
  simulate->add_option("--rows1", sim.n_rows_1, "modality-1 observation rows");
  simulate->add_option("--rows2", sim.n_rows_2, "modality-2 observation rows");
  simulate->add_option("--noise", sim.noise_std, "additive Gaussian noise std");
  simulate->callback([&] {
    action = [&] {
      sim.n_comp = static_cast<int>(sim.target_corr.size());
      const SimDataset d = generate_dataset(sim);
      const fs::path dir(sim_out);
      ensure_dir(dir);
      Manifest manifest("simulate");
      manifest.add("seed", std::to_string(sim.seed));
      manifest.add("grid", std::to_string(sim.grid));
      manifest.add("n_comp", std::to_string(sim.n_comp));
      manifest.add("rows1", std::to_string(sim.n_rows_1));
      manifest.add("rows2", std::to_string(sim.n_rows_2));
      manifest.add("noise_std", fmt(sim.noise_std));
      manifest.add("target_corr", join(Eigen::Map<const Vector>(sim.target_corr.data(),
                                                                 static_cast<Eigen::Index>(sim.target_corr.size()))));
      manifest.add("achieved_corr", join(d.achieved_corr));
      emit(dir, "s1.clp", d.s1, manifest);
      emit(dir, "s2.clp", d.s2, manifest);
      emit(dir, "a1.clp", d.a1, manifest);
      emit(dir, "a2.clp", d.a2, manifest);
      emit(dir, "x1.clp", d.x1, manifest);
      emit(dir, "x2.clp", d.x2, manifest);
      manifest.write(dir / "manifest.txt");
      out << "simulate: wrote " << dir.string() << " (achieved corr " << join(d.achieved_corr) << ")\n";
    };
  });

  // fit
  ModelInputs fit_in;
  auto* fit_cmd = app.add_subcommand("fit", "estimate linked unmixing matrices");
  add_model_flags(fit_cmd, fit_in);
  fit_cmd->callback([&] {
    action = [&] {
      Manifest manifest("fit");
      manifest.input(fit_in.config);
      const RunConfig cfg = load_run_config(fit_in.config);
      manifest.add("config_hash", fnv1a_hex(cfg.canonical()));
      manifest.add("seed", std::to_string(cfg.seed));
      auto [x1, x2] = prepare_inputs(fit_in, cfg, manifest);
      const CopulaSpec spec{cfg.sigma()};
      const FitResult res = fit(x1, x2, spec, cfg.fit_config());

      const fs::path dir(fit_in.out);
      ensure_dir(dir);
      emit(dir, "w1.clp", res.pair.w1, manifest);
      emit(dir, "w2.clp", res.pair.w2, manifest);
      emit(dir, "y1.clp", res.y1, manifest);
      emit(dir, "y2.clp", res.y2, manifest);
      std::ostringstream pc;
      pc << "component,sigma,pair_corr\n";
      for (Eigen::Index i = 0; i < res.pair_corr.size(); ++i) {
        pc << i + 1 << ',' << fmt(spec.sigma[static_cast<std::size_t>(i)]) << ',' << fmt(res.pair_corr(i)) << '\n';
      }
      emit_text(dir / "pair_corr.csv", pc.str(), manifest);
      std::ostringstream tr;
      tr << "epoch,nll_per_voxel\n";
      for (std::size_t e = 0; e < res.nll_trace.size(); ++e) tr << e + 1 << ',' << fmt(res.nll_trace[e]) << '\n';
      emit_text(dir / "nll_trace.csv", tr.str(), manifest);
      manifest.add("epochs_run", std::to_string(res.epochs_run));
      manifest.add("converged", res.converged ? "true" : "false");
      manifest.write(dir / "manifest.txt");
      out << "fit: " << res.epochs_run << " epochs, final nll/voxel " << fmt(res.nll_trace.back())
          << ", pair corr " << join(res.pair_corr) << '\n';
    };
  });

  // stability
  ModelInputs stab_in;
  int stab_runs = 0;
  auto* stab_cmd = app.add_subcommand("stability", "multi-run reliability analysis and run selection");
  add_model_flags(stab_cmd, stab_in);
  stab_cmd->add_option("--runs", stab_runs, "number of runs (overrides n_runs)");
  stab_cmd->callback([&] {
    action = [&] {
      Manifest manifest("stability");
      manifest.input(stab_in.config);
      const RunConfig cfg = load_run_config(stab_in.config);
      const int n_runs = stab_runs > 0 ? stab_runs : cfg.n_runs;
      manifest.add("config_hash", fnv1a_hex(cfg.canonical()));
      manifest.add("seed", std::to_string(cfg.seed));
      manifest.add("n_runs", std::to_string(n_runs));
      auto [x1, x2] = prepare_inputs(stab_in, cfg, manifest);
      const CopulaSpec spec{cfg.sigma()};
      const StabilityOutcome so = run_stability(x1, x2, spec, cfg.fit_config(), n_runs, cfg.seed);

      const fs::path dir(stab_in.out);
      ensure_dir(dir);
      std::ostringstream rep;
      rep << "runs_requested = " << n_runs << '\n'
          << "runs_succeeded = " << so.collection.runs.size() << '\n';
      for (const auto& f : so.collection.failures) {
        rep << "failed_run = " << f.run << " seed=" << f.seed << " " << one_line(f.message) << '\n';
      }
      rep << "selected_run = " << so.collection.run_index[static_cast<std::size_t>(so.selected)] << '\n';
      rep << "component,iq_modality1,iq_modality2\n";
      for (Eigen::Index k = 0; k < so.report1.iq.size(); ++k) {
        rep << k + 1 << ',' << fmt(so.report1.iq(k)) << ',' << fmt(so.report2.iq(k)) << '\n';
      }
      emit_text(dir / "stability.txt", rep.str(), manifest);
      emit(dir, "y1.clp", so.y1, manifest);
      emit(dir, "y2.clp", so.y2, manifest);
      emit(dir, "w1.clp", so.w1, manifest);
      emit(dir, "w2.clp", so.w2, manifest);
      emit(dir, "a1.clp", so.a1, manifest);
      emit(dir, "a2.clp", so.a2, manifest);
      manifest.write(dir / "manifest.txt");
      out << "stability: selected run " << so.collection.run_index[static_cast<std::size_t>(so.selected)]
          << ", iq1 " << join(so.report1.iq) << ", iq2 " << join(so.report2.iq) << '\n';
    };
  });

  // backrecon
  std::string br_maps, br_out, br_modality = "fmri";
  std::vector<std::string> br_data;
  auto* br_cmd = app.add_subcommand("backrecon", "subject time-courses / loadings from group maps");
  br_cmd->add_option("--maps", br_maps, "group maps (components x voxels)")->required();
  br_cmd->add_option("--data", br_data, "subject data files (time x voxels) or stacked sMRI (subjects x voxels)")->required();
  br_cmd->add_option("--modality", br_modality, "fmri | smri")->check(CLI::IsMember({"fmri", "smri"}));
  br_cmd->add_option("--out", br_out, "output directory")->required();
  br_cmd->callback([&] {
    action = [&] {
      Manifest manifest("backrecon");
      manifest.add("modality", br_modality);
      const Matrix maps = read_input(br_maps, manifest);
      const fs::path dir(br_out);
      ensure_dir(dir);
      if (br_modality == "fmri") {
        for (std::size_t s = 0; s < br_data.size(); ++s) {
          const Matrix tc = back_reconstruct_fmri(read_input(br_data[s], manifest), maps);
          emit(dir, "tc_" + std::to_string(s + 1) + ".clp", tc, manifest);
        }
      } else {
        std::vector<Matrix> parts;
        for (const auto& p : br_data) parts.push_back(read_input(p, manifest));
        emit(dir, "loadings.clp", back_reconstruct_smri(stack_rows(parts), maps), manifest);
      }
      manifest.write(dir / "manifest.txt");
      out << "backrecon: wrote " << dir.string() << '\n';
    };
  });

  // fnc
  std::vector<std::string> fnc_tc;
  std::string fnc_config, fnc_out;
  double fnc_tr = 0.0;
  auto* fnc_cmd = app.add_subcommand("fnc", "functional network connectivity per subject");
  fnc_cmd->add_option("--tc", fnc_tc, "time-course files (time x components)")->required();
  fnc_cmd->add_option("--config", fnc_config, "run configuration (tr_seconds, band_lo, band_hi, fnc_order)");
  fnc_cmd->add_option("--tr", fnc_tr, "sampling interval in seconds (overrides config)");
  fnc_cmd->add_option("--out", fnc_out, "output directory")->required();
  fnc_cmd->callback([&] {
    action = [&] {
      Manifest manifest("fnc");
      RunConfig cfg;
      if (!fnc_config.empty()) {
        manifest.input(fnc_config);
        cfg = load_run_config(fnc_config);
      }
      FncOptions opts = cfg.fnc_options();
      if (fnc_tr > 0.0) opts.tr_seconds = fnc_tr;
      manifest.add("tr_seconds", fmt(opts.tr_seconds));
      manifest.add("band", fmt(opts.band_lo) + "," + fmt(opts.band_hi));
      manifest.add("order", opts.order == FncOrder::DespikeThenFilter ? "detrend,despike,bandpass"
                                                                      : "detrend,bandpass,despike");
      std::vector<Matrix> tcs;
      for (const auto& p : fnc_tc) tcs.push_back(read_input(p, manifest));
      std::vector<Matrix> results(tcs.size());
#pragma omp parallel for schedule(dynamic, 1)
      for (std::size_t s = 0; s < tcs.size(); ++s) results[s] = fnc_pipeline(tcs[s], opts);
      const fs::path dir(fnc_out);
      ensure_dir(dir);
      Matrix mean = Matrix::Zero(results.front().rows(), results.front().cols());
      for (std::size_t s = 0; s < results.size(); ++s) {
        if (results[s].rows() != mean.rows()) throw Error(ErrorKind::ShapeMismatch, "subjects differ in component count");
        emit(dir, "fnc_" + std::to_string(s + 1) + ".clp", results[s], manifest);
        mean += results[s];
      }
      mean /= static_cast<double>(results.size());
      emit(dir, "fnc_mean.clp", mean, manifest);
      manifest.write(dir / "manifest.txt");
      out << "fnc: " << results.size() << " subjects\n";
    };
  });

  // snc
  std::string snc_loadings, snc_out;
  double snc_alpha = 0.05;
  auto* snc_cmd = app.add_subcommand("snc", "structural network covariation of loadings");
  snc_cmd->add_option("--loadings", snc_loadings, "loadings (subjects x components)")->required();
  snc_cmd->add_option("--alpha", snc_alpha, "one-sided significance level");
  snc_cmd->add_option("--out", snc_out, "output directory")->required();
  snc_cmd->callback([&] {
    action = [&] {
      Manifest manifest("snc");
      manifest.add("alpha", fmt(snc_alpha));
      const SncMatrix s = snc(read_input(snc_loadings, manifest), snc_alpha);
      const fs::path dir(snc_out);
      ensure_dir(dir);
      emit(dir, "snc_r.clp", s.r, manifest);
      emit(dir, "snc_p.clp", s.p, manifest);
      std::ostringstream csv;
      csv << "component_i,component_j,r,p,significant\n";
      for (Eigen::Index i = 0; i < s.r.rows(); ++i)
        for (Eigen::Index j = i + 1; j < s.r.cols(); ++j)
          csv << i + 1 << ',' << j + 1 << ',' << fmt(s.r(i, j)) << ',' << fmt(s.p(i, j)) << ','
              << (s.mask(i, j) ? 1 : 0) << '\n';
      emit_text(dir / "snc.csv", csv.str(), manifest);
      manifest.write(dir / "manifest.txt");
      out << "snc: " << s.mask.count() / 2 << " significant pairs\n";
    };
  });

  // stats
  std::vector<std::string> st_a, st_b;
  std::string st_out, st_kind = "fnc", st_ttest, st_config;
  double st_q = 0.05;
  auto* st_cmd = app.add_subcommand("stats", "two-sample group tests with FDR correction");
  st_cmd->add_option("--a", st_a, "group A files")->required();
  st_cmd->add_option("--b", st_b, "group B files")->required();
  st_cmd->add_option("--kind", st_kind, "fnc: one c x c matrix per subject; loadings: subjects x components")
      ->check(CLI::IsMember({"fnc", "loadings"}));
  st_cmd->add_option("--q", st_q, "FDR level");
  st_cmd->add_option("--ttest", st_ttest, "pooled | welch (overrides config)")->check(CLI::IsMember({"pooled", "welch"}));
  st_cmd->add_option("--config", st_config, "run configuration (ttest_variant)");
  st_cmd->add_option("--out", st_out, "output CSV")->required();
  st_cmd->callback([&] {
    action = [&] {
      Manifest manifest("stats");
      TTestVariant variant = TTestVariant::Pooled;
      if (!st_config.empty()) {
        manifest.input(st_config);
        variant = load_run_config(st_config).ttest_variant;
      }
      if (!st_ttest.empty()) variant = st_ttest == "welch" ? TTestVariant::Welch : TTestVariant::Pooled;
      manifest.add("kind", st_kind);
      manifest.add("q", fmt(st_q));
      manifest.add("ttest", variant == TTestVariant::Pooled ? "pooled" : "welch");

      std::vector<std::pair<int, int>> cells;
      auto load_group = [&](const std::vector<std::string>& files) {
        std::vector<Matrix> parts;
        for (const auto& p : files) parts.push_back(read_input(p, manifest));
        if (st_kind == "loadings") return stack_rows(parts);
        const Eigen::Index c = parts.front().rows();
        Matrix feats(static_cast<Eigen::Index>(parts.size()), c * (c - 1) / 2);
        for (std::size_t s = 0; s < parts.size(); ++s) {
          if (parts[s].rows() != c || parts[s].cols() != c) {
            throw Error(ErrorKind::ShapeMismatch, files[s] + ": expected a " + std::to_string(c) + "x" +
                                                      std::to_string(c) + " matrix");
          }
          Eigen::Index f = 0;
          for (Eigen::Index i = 0; i < c; ++i)
            for (Eigen::Index j = i + 1; j < c; ++j) feats(static_cast<Eigen::Index>(s), f++) = parts[s](i, j);
        }
        if (cells.empty()) {
          for (Eigen::Index i = 0; i < c; ++i)
            for (Eigen::Index j = i + 1; j < c; ++j) cells.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
        return feats;
      };
      const Matrix ga = load_group(st_a);
      const Matrix gb = load_group(st_b);
      if (ga.cols() != gb.cols()) throw Error(ErrorKind::ShapeMismatch, "groups differ in feature count");
      if (st_kind == "loadings") {
        for (Eigen::Index j = 0; j < ga.cols(); ++j) cells.emplace_back(static_cast<int>(j), static_cast<int>(j));
      }
      const auto stats = group_stats(ga, gb, st_q, variant);
      std::ostringstream csv;
      csv << "component_i,component_j,t,p,significant,signed_log_p\n";
      int n_sig = 0;
      for (std::size_t k = 0; k < stats.size(); ++k) {
        const auto& s = stats[k];
        n_sig += s.significant;
        csv << cells[k].first + 1 << ',' << cells[k].second + 1 << ',' << fmt(s.t) << ',' << fmt(s.p) << ','
            << (s.significant ? 1 : 0) << ',' << fmt(s.signed_log_p) << '\n';
      }
      const fs::path path(st_out);
      if (path.has_parent_path()) ensure_dir(path.parent_path());
      emit_text(path, csv.str(), manifest);
      manifest.write(path.string() + ".manifest.txt");
      out << "stats: " << n_sig << " of " << stats.size() << " cells significant after FDR\n";
    };
  });

  // heatmap
  std::string hm_in, hm_out, hm_labels, hm_groups;
  double hm_range = 0.0;
  auto* hm_cmd = app.add_subcommand("heatmap", "render a matrix as an SVG heat map");
  hm_cmd->add_option("--in", hm_in, "matrix file")->required();
  hm_cmd->add_option("--out", hm_out, "output SVG")->required();
  hm_cmd->add_option("--range", hm_range, "fixed symmetric colour range (default: max |value|)");
  hm_cmd->add_option("--labels", hm_labels, "one label per line");
  hm_cmd->add_option("--groups", hm_groups, "comma-separated component indices (0-based) per line; reorders display");
  hm_cmd->callback([&] {
    action = [&] {
      Manifest manifest("heatmap");
      if (!fs::exists(hm_in)) throw Error(ErrorKind::Io, "cannot read " + hm_in);
      manifest.input(hm_in);
      const std::string bytes = read_file(hm_in);
      Matrix m = fs::path(hm_in).extension() == ".csv" ? parse_csv_matrix(bytes, hm_in, true)
                                                       : decode_matrix(bytes, hm_in, true);
      HeatmapOptions opts;
      if (hm_range > 0.0) opts.color_range = hm_range;
      if (!hm_labels.empty()) opts.labels = read_labels(hm_labels);
      if (!hm_groups.empty()) {
        if (m.rows() != m.cols()) throw Error(ErrorKind::ShapeMismatch, "--groups needs a square matrix");
        const auto order = modular_order(m, read_groups(hm_groups));
        Matrix r(m.rows(), m.cols());
        std::vector<std::string> labels(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
          for (std::size_t j = 0; j < order.size(); ++j) r(i, j) = m(order[i], order[j]);
          labels[i] = static_cast<std::size_t>(order[i]) < opts.labels.size() ? opts.labels[order[i]]
                                                                              : std::to_string(order[i] + 1);
        }
        m = std::move(r);
        opts.labels = std::move(labels);
      }
      const Heatmap h = render_heatmap(m, opts);
      const fs::path path(hm_out);
      emit_text(path, h.svg, manifest);
      manifest.add("color_range", fmt(h.color_range));
      manifest.write(path.string() + ".manifest.txt");
      if (h.nan_cells > 0) err << "warning: " << h.nan_cells << " non-finite cells drawn grey\n";
      out << "heatmap: wrote " << path.string() << '\n';
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::RequiredError& e) {
    if (app.get_subcommands().empty()) {
      err << app.help();
      report_error(err, "usage", kExitUsage, args.empty() ? "no subcommand" : "unknown subcommand '" + args.front() + "'");
      return kExitUsage;
    }
    report_error(err, "missing_flag", kExitMissingFlag, e.what());
    return kExitMissingFlag;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    report_error(err, "usage", kExitUsage, e.what());
    return kExitUsage;
  }

  if (!action) {
    err << app.help();
    report_error(err, "usage", kExitUsage, "no subcommand");
    return kExitUsage;
  }
  try {
    action();
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, to_string(e.kind()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    report_error(err, "internal", kExitFailure, e.what());
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace clip
