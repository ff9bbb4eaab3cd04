#include "clip/cli.hpp"
#include "clip/config.hpp"
#include "clip/heatmap.hpp"
#include "clip/matrix_io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace clip {
namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("clip_test_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Accepts the subset of XML the renderer emits: elements, attributes, text.
bool well_formed_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = doc.find('<', pos)) != std::string::npos) {
    const std::size_t end = doc.find('>', pos);
    if (end == std::string::npos) return false;
    std::string tag = doc.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.starts_with("?") || tag.starts_with("!")) continue;
    if (tag.ends_with("/")) continue;
    if (tag.starts_with("/")) {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    stack.push_back(tag.substr(0, tag.find_first_of(" \t\n")));
  }
  return stack.empty();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

TEST(MatrixIo, BinaryRoundTripIsBitExact) {
  std::mt19937_64 rng(81);
  const Matrix m = test::random_matrix(7, 13, rng);
  const std::string bytes = encode_matrix(m);
  EXPECT_EQ(bytes.size(), 20u + 8u * 7u * 13u);
  EXPECT_EQ(bytes.substr(0, 4), "CLP1");
  std::uint64_t rows = 0;
  std::memcpy(&rows, bytes.data() + 4, 8);
  EXPECT_EQ(rows, 7u);
  EXPECT_EQ(std::memcmp(decode_matrix(bytes).data(), m.data(), 8 * 7 * 13), 0);

  TempDir dir;
  write_matrix(dir / "m.clp", m);
  EXPECT_EQ(read_matrix(dir / "m.clp"), m);
  write_matrix(dir / "m.csv", m);
  EXPECT_EQ(read_matrix(dir / "m.csv"), m);
  for (const auto& e : fs::directory_iterator(dir.path())) {
    EXPECT_TRUE(e.path().extension() == ".clp" || e.path().extension() == ".csv") << e.path();
  }
}

TEST(MatrixIo, TruncatedPayloadNamesByteCounts) {
  const std::string bytes = encode_matrix(Matrix::Ones(3, 4));
  try {
    decode_matrix(bytes.substr(0, bytes.size() - 5), "t.clp");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
    EXPECT_NE(std::string(e.what()).find("expected 116 bytes, got 111"), std::string::npos) << e.what();
  }
  EXPECT_THROW(decode_matrix(bytes.substr(0, 10)), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_matrix(bad), Error);
}

TEST(MatrixIo, NonFiniteRejectedWithPosition) {
  Matrix m = Matrix::Zero(3, 3);
  m(1, 2) = std::numeric_limits<double>::quiet_NaN();
  const std::string bytes = encode_matrix(m);
  try {
    decode_matrix(bytes, "n.clp");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
    EXPECT_NE(std::string(e.what()).find("row 1, col 2"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(std::isnan(decode_matrix(bytes, "n.clp", true)(1, 2)));
  TempDir dir;
  EXPECT_THROW(write_matrix(dir / "n.clp", m), Error);
  EXPECT_FALSE(fs::exists(dir / "n.clp"));
}

TEST(MatrixIo, Csv) {
  Matrix expect(2, 2);
  expect << 1, 2, 3, 4;
  EXPECT_EQ(parse_csv_matrix("1,2\n3,4"), expect);
  EXPECT_EQ(parse_csv_matrix("1, 2\r\n3 ,4\n\n"), expect);
  EXPECT_THROW(parse_csv_matrix("1,2\n3"), Error);
  EXPECT_THROW(parse_csv_matrix("1,x"), Error);
  EXPECT_THROW(parse_csv_matrix(""), Error);
  EXPECT_EQ(parse_csv_matrix(format_csv_matrix(expect * 0.1)), expect * 0.1);
}

TEST(MatrixIo, AtomicWriteReplaces) {
  TempDir dir;
  write_file_atomic(dir / "f.txt", "first");
  write_file_atomic(dir / "f.txt", "second");
  EXPECT_EQ(read_file(dir / "f.txt"), "second");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1);
  EXPECT_THROW(read_file(dir / "missing"), Error);
}

TEST(SigmaSchedule, Examples) {
  const auto s = sigma_schedule(0.95, 0.5, 75);
  ASSERT_EQ(s.size(), 75u);
  EXPECT_EQ(s.front(), 0.95);
  EXPECT_EQ(s.back(), 0.5);
  EXPECT_NEAR(s[1] - s[0], -0.45 / 74, 1e-15);
  EXPECT_NEAR(-0.45 / 74, -0.006081, 1e-6);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i], s[i - 1]);
  EXPECT_EQ(sigma_schedule(0.9, 0.9, 4), std::vector<double>(4, 0.9));
  EXPECT_EQ(sigma_schedule(0.7, 0.1, 1), std::vector<double>{0.7});
  EXPECT_EQ(parse_sigma_schedule("linspace:0.95,0.5", 75), s);
  EXPECT_EQ(parse_sigma_schedule("0.9, 0.8,0.1", 3), (std::vector<double>{0.9, 0.8, 0.1}));
  EXPECT_THROW(parse_sigma_schedule("0.9,0.8", 3), Error);
  EXPECT_THROW(parse_sigma_schedule("linspace:1.0,0.5", 3), Error);
}

TEST(RunConfigParse, KeysAndErrors) {
  const RunConfig c = parse_run_config(
      "# comment\nmodel_order = 3\nsigma_schedule = linspace:0.9,0.5\nepochs = 20\n"
      "learning_rate = 0.01  # inline\nseed = 18446744073709551615\nttest_variant = welch\n"
      "fnc_order = filter_despike\n");
  EXPECT_EQ(c.model_order, 3);
  EXPECT_EQ(c.sigma(), (std::vector<double>{0.9, 0.7, 0.5}));
  EXPECT_EQ(c.epochs, 20);
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.ttest_variant, TTestVariant::Welch);
  EXPECT_EQ(c.fnc_order, FncOrder::FilterThenDespike);
  EXPECT_EQ(parse_run_config(c.canonical()).canonical(), c.canonical());

  auto message = [](const std::string& text) {
    try {
      parse_run_config(text, "c.cfg");
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("epochs = 3\nbogus = 1\n").find("c.cfg:2: unknown key 'bogus'"), std::string::npos);
  EXPECT_NE(message("\n\nepochs = many\n").find("c.cfg:3"), std::string::npos);
  EXPECT_NE(message("epochs\n").find("c.cfg:1"), std::string::npos);
  EXPECT_NE(message("ttest_variant = paired\n").find("c.cfg:1"), std::string::npos);
  EXPECT_NE(message("epochs = 0\n").find("epochs"), std::string::npos);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Heatmap, IdentityHasFourCellsAndColorBar) {
  const Heatmap h = render_heatmap(Matrix::Identity(2, 2));
  EXPECT_EQ(count(h.svg, "class=\"cell\""), 4u);
  EXPECT_GT(count(h.svg, "class=\"bar\""), 0u);
  EXPECT_TRUE(well_formed_xml(h.svg));
  EXPECT_NE(h.svg.find("<svg"), std::string::npos);
  EXPECT_NE(h.svg.find("version=\"1.1\""), std::string::npos);
  EXPECT_EQ(h.color_range, 1.0);
  EXPECT_NE(h.svg.find("mode=auto"), std::string::npos);
  // Diverging palette centred at zero.
  EXPECT_NE(h.svg.find("#ffffff"), std::string::npos);
  EXPECT_NE(h.svg.find("#ff0000"), std::string::npos);
}

TEST(Heatmap, FixedRangeAndNanCells) {
  Matrix m(2, 2);
  m << 0.5, std::numeric_limits<double>::quiet_NaN(), -0.25, 0.0;
  HeatmapOptions opts;
  opts.color_range = 2.5;
  opts.labels = {"A&B", "C"};
  const Heatmap h = render_heatmap(m, opts);
  EXPECT_NE(h.svg.find("color-range=2.5 mode=fixed"), std::string::npos);
  EXPECT_EQ(h.nan_cells, 1);
  EXPECT_NE(h.svg.find("nan-cells=1"), std::string::npos);
  EXPECT_NE(h.svg.find("#808080"), std::string::npos);
  EXPECT_NE(h.svg.find("A&amp;B"), std::string::npos);
  EXPECT_TRUE(well_formed_xml(h.svg));
}

TEST(Cli, UsageAndMissingFlags) {
  const CliRun unknown = cli({"frobnicate"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("error code=usage exit=2"), std::string::npos);
  EXPECT_NE(unknown.err.find("simulate"), std::string::npos);
  EXPECT_EQ(cli({}).code, 2);
  const CliRun missing = cli({"fit", "--x1", "a.clp"});
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.err.find("error code=missing_flag exit=3"), std::string::npos);
  EXPECT_EQ(cli({"--version"}).out, "1.0.0\n");
}

TEST(Cli, ErrorsMapToDistinctExitCodes) {
  TempDir dir;
  write_file_atomic(dir / "bad.cfg", "nonsense_key = 1\n");
  write_file_atomic(dir / "ok.cfg", "model_order = 2\nepochs = 2\nalign_epochs = 1\n");
  write_matrix(dir / "a.clp", Matrix::Ones(3, 10));
  write_matrix(dir / "b.clp", Matrix::Ones(3, 12));
  write_file_atomic(dir / "junk.clp", "not a matrix");

  const CliRun io = cli({"snc", "--loadings", dir / "nope.clp", "--out", dir / "o"});
  EXPECT_EQ(io.code, 4);
  EXPECT_NE(io.err.find("error code=io exit=4"), std::string::npos);
  EXPECT_EQ(cli({"fit", "--config", dir / "ok.cfg", "--x1", dir / "a.clp", "--x2", dir / "b.clp", "--out",
                 dir / "o", "--reduced"})
                .code,
            5);
  EXPECT_EQ(cli({"fit", "--config", dir / "bad.cfg", "--x1", dir / "a.clp", "--x2", dir / "a.clp", "--out",
                 dir / "o"})
                .code,
            6);
  EXPECT_EQ(cli({"snc", "--loadings", dir / "junk.clp", "--out", dir / "o"}).code, 7);
  const CliRun one_line = cli({"snc", "--loadings", dir / "junk.clp", "--out", dir / "o"});
  EXPECT_EQ(count(one_line.err, "\n"), 1u);
  EXPECT_TRUE(std::regex_search(one_line.err, std::regex("^error code=format exit=7 message=\".*\"\n$")));
}

TEST(Cli, SimulateThenFitSmokePath) {
  TempDir dir;
  const std::string data = dir / "d", res = dir / "r";
  ASSERT_EQ(cli({"simulate", "--seed", "7", "--out", data, "--grid", "20"}).code, 0);
  for (const char* f : {"s1.clp", "s2.clp", "a1.clp", "a2.clp", "x1.clp", "x2.clp", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(fs::path(data) / f)) << f;
  }
  EXPECT_EQ(read_matrix(fs::path(data) / "x1.clp").rows(), 300);
  const std::string manifest = read_file(fs::path(data) / "manifest.txt");
  EXPECT_NE(manifest.find("seed = 7"), std::string::npos);
  EXPECT_NE(manifest.find("achieved_corr = "), std::string::npos);

  write_file_atomic(dir / "c.cfg", "model_order = 4\nsigma_schedule = linspace:0.9,0.9\nepochs = 10\n"
                                   "learning_rate = 0.01\nbatch_size = 128\nseed = 3\n");
  const CliRun r = cli({"fit", "--config", dir / "c.cfg", "--x1", data + "/x1.clp", "--x2", data + "/x2.clp",
                        "--out", res});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"w1.clp", "w2.clp", "y1.clp", "y2.clp", "pair_corr.csv", "nll_trace.csv", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(fs::path(res) / f)) << f;
  }
  EXPECT_EQ(read_matrix(fs::path(res) / "w1.clp").rows(), 4);
  const std::string fit_manifest = read_file(fs::path(res) / "manifest.txt");
  EXPECT_NE(fit_manifest.find("config_hash = "), std::string::npos);
  EXPECT_NE(fit_manifest.find("version = 1.0.0"), std::string::npos);
  EXPECT_NE(fit_manifest.find("input = x1.clp fnv1a="), std::string::npos);
  EXPECT_EQ(fit_manifest.find(dir.path().string()), std::string::npos);
  const std::string pc = read_file(fs::path(res) / "pair_corr.csv");
  EXPECT_EQ(count(pc, "\n"), 5u);
}

TEST(Cli, StatsOnSyntheticGroups) {
  TempDir dir;
  std::mt19937_64 rng(82);
  Matrix a = test::random_matrix(30, 12, rng), b = test::random_matrix(30, 12, rng);
  a.col(4).array() += 3.0;
  write_matrix(dir / "a.csv", a);
  write_matrix(dir / "b.clp", b);
  const std::string out = dir / "stats/result.csv";
  const CliRun r = cli({"stats", "--a", dir / "a.csv", "--b", dir / "b.clp", "--kind", "loadings", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file(out);
  EXPECT_TRUE(csv.starts_with("component_i,component_j,t,p,significant,signed_log_p\n"));
  EXPECT_EQ(count(csv, "\n"), 13u);
  EXPECT_NE(csv.find("\n5,5,"), std::string::npos);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  int flagged = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 6u);
    if (f[4] == "1") {
      ++flagged;
      EXPECT_EQ(f[0], "5");
    }
  }
  EXPECT_EQ(flagged, 1);
  EXPECT_TRUE(fs::exists(out + ".manifest.txt"));
}

TEST(Cli, FncStatsOnMatrices) {
  TempDir dir;
  std::mt19937_64 rng(83);
  std::vector<std::string> a_files, b_files;
  for (int s = 0; s < 6; ++s) {
    const std::string ta = dir / ("ta" + std::to_string(s) + ".clp");
    const std::string tb = dir / ("tb" + std::to_string(s) + ".clp");
    write_matrix(ta, test::random_matrix(60, 3, rng));
    write_matrix(tb, test::random_matrix(60, 3, rng));
    a_files.push_back(ta);
    b_files.push_back(tb);
  }
  std::vector<std::string> args{"fnc", "--out", dir / "fa", "--tr", "2", "--tc"};
  args.insert(args.end(), a_files.begin(), a_files.end());
  ASSERT_EQ(cli(args).code, 0);
  args = {"fnc", "--out", dir / "fb", "--tc"};
  args.insert(args.end(), b_files.begin(), b_files.end());
  ASSERT_EQ(cli(args).code, 0);
  const Matrix mean = read_matrix(dir / "fa/fnc_mean.clp");
  EXPECT_EQ(mean.rows(), 3);
  EXPECT_NEAR(mean(1, 1), 1.0, 1e-12);

  args = {"stats", "--kind", "fnc", "--out", dir / "s.csv", "--a"};
  for (int s = 1; s <= 6; ++s) args.push_back(dir / ("fa/fnc_" + std::to_string(s) + ".clp"));
  args.push_back("--b");
  for (int s = 1; s <= 6; ++s) args.push_back(dir / ("fb/fnc_" + std::to_string(s) + ".clp"));
  const CliRun r = cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file(dir / "s.csv");
  EXPECT_NE(csv.find("\n1,2,"), std::string::npos);
  EXPECT_NE(csv.find("\n2,3,"), std::string::npos);
  EXPECT_EQ(count(csv, "\n"), 4u);
}

TEST(Cli, BackreconSncAndHeatmap) {
  TempDir dir;
  std::mt19937_64 rng(84);
  const Matrix maps = test::random_matrix(3, 80, rng);
  const Matrix loads = test::random_matrix(20, 3, rng);
  write_matrix(dir / "maps.clp", maps);
  write_matrix(dir / "smri.clp", loads * maps);
  ASSERT_EQ(cli({"backrecon", "--maps", dir / "maps.clp", "--data", dir / "smri.clp", "--modality", "smri",
                 "--out", dir / "br"})
                .code,
            0);
  EXPECT_LT((read_matrix(dir / "br/loadings.clp") - loads).cwiseAbs().maxCoeff(), 1e-10);
  ASSERT_EQ(cli({"snc", "--loadings", dir / "br/loadings.clp", "--out", dir / "snc"}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "snc/snc.csv"));

  Matrix m(2, 2);
  m << 1.0, std::numeric_limits<double>::quiet_NaN(), 0.3, -1.0;
  write_file_atomic(dir / "m.clp", encode_matrix(m));
  const CliRun h = cli({"heatmap", "--in", dir / "m.clp", "--out", dir / "m.svg", "--range", "1.5"});
  ASSERT_EQ(h.code, 0) << h.err;
  EXPECT_NE(h.err.find("1 non-finite"), std::string::npos);
  const std::string svg = read_file(dir / "m.svg");
  EXPECT_NE(svg.find("color-range=1.5 mode=fixed"), std::string::npos);
  EXPECT_TRUE(well_formed_xml(svg));
}

TEST(Cli, BinaryReportsUsageExitCode) {
  const std::string cmd = std::string("\"") + CLIP_CLI_PATH + "\" frobnicate > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

}  // namespace
}  // namespace clip
