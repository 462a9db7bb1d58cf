#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "bsnse/io/csv.hpp"
#include "bsnse/io/manifest.hpp"

using namespace bsnse;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("bsnse_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(FieldCsv, RoundTripIsBitwise) {
  TempDir dir;
  const auto ms = ModeSet::box(2 * std::numbers::pi, 4);
  std::mt19937_64 rng(31);
  auto u = random_field(ms, rng, {.divergence_free = true, .decay = 1.0});
  u[0][0] = Complex(1.0 / 3.0, -std::numeric_limits<double>::denorm_min());
  u[1][1] = Complex(1e300, -0.1);
  write_field_csv(u, dir.file("u.csv"));
  const auto v = read_field_csv(dir.file("u.csv"), 2 * std::numbers::pi);
  ASSERT_TRUE(v.modes().same_as(u.modes()));
  for (std::size_t r = 0; r < u.rep_count(); ++r)
    for (int c = 0; c < 2; ++c) {
      EXPECT_TRUE(bitwise_equal(u[r][c].real(), v.at(u.modes().rep(r))[c].real()));
      EXPECT_TRUE(bitwise_equal(u[r][c].imag(), v.at(u.modes().rep(r))[c].imag()));
    }
}

TEST(FieldCsv, ZeroFieldAndHeader) {
  TempDir dir;
  const auto ms = ModeSet::box(2 * std::numbers::pi, 2);
  write_field_csv(VelocityField(ms), dir.file("z.csv"));
  const auto lines = read_lines(dir.file("z.csv"));
  ASSERT_EQ(lines.size(), ms->rep_count() + 1);
  EXPECT_EQ(lines[0], kFieldHeader);
  EXPECT_EQ(norm_h2(read_field_csv(dir.file("z.csv"), 2 * std::numbers::pi)), 0.0);
}

TEST(FieldCsv, MalformedInputIsAnIoError) {
  TempDir dir;
  const double a = 2 * std::numbers::pi;
  EXPECT_THROW(read_field_csv(dir.file("missing.csv"), a), IoError);
  write_text(dir.file("h.csv"), "kx,ky\n1,0\n");
  EXPECT_THROW(read_field_csv(dir.file("h.csv"), a), IoError);
  write_text(dir.file("c.csv"), std::string(kFieldHeader) + "\n1,0,1,2\n");
  EXPECT_THROW(read_field_csv(dir.file("c.csv"), a), IoError);
  write_text(dir.file("n.csv"), std::string(kFieldHeader) + "\n1,0,abc,0,0,0\n");
  EXPECT_THROW(read_field_csv(dir.file("n.csv"), a), IoError);
  write_text(dir.file("k.csv"), std::string(kFieldHeader) + "\n0,0,1,0,0,0\n");
  EXPECT_THROW(read_field_csv(dir.file("k.csv"), a), IoError);
  write_text(dir.file("e.csv"), std::string(kFieldHeader) + "\n");
  EXPECT_THROW(read_field_csv(dir.file("e.csv"), a), IoError);
}

TEST(SliceCsv, Schema) {
  TempDir dir;
  SolverConfig cfg;
  cfg.K = 2;
  cfg.M = 40;
  cfg.L = 4;
  cfg.budget_draws = 0;
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  TerminalCondition t;
  t.xi0 = shear_modes(ms, {{{1, 0}, 1.0}});
  t.psi_kind = PsiKind::tanh;
  const auto sol = solve_bsnse(cfg, ForcingModel::zero(), SigmaSchedule::constant(0.0, 0.0), t);
  write_slice_csv(sol, 2, 3, dir.file("s.csv"));
  const auto lines = read_lines(dir.file("s.csv"));
  ASSERT_EQ(lines.size(), 3 * ms->rep_count() + 1);
  EXPECT_EQ(lines[0], std::string("path,") + kFieldHeader);
  for (std::size_t j = 1; j < lines.size(); ++j) {
    EXPECT_EQ(std::count(lines[j].begin(), lines[j].end(), ','), 6);
    EXPECT_EQ(lines[j].substr(0, lines[j].find(',')), std::to_string((j - 1) / ms->rep_count()));
  }
  EXPECT_THROW(write_slice_csv(sol, 5, 3, dir.file("bad.csv")), ConfigError);
  EXPECT_THROW(write_slice_csv(sol, 0, 3, dir.file("no/such/dir.csv")), IoError);
}

TEST(Config, DefaultsResolve) {
  const Config c;
  const auto p = resolve_problem(c);
  EXPECT_EQ(p.solver.K, 4);
  EXPECT_EQ(p.solver.L, 64);
  EXPECT_EQ(p.model.kind(), ForcingKind::zero);
  EXPECT_GT(norm_h2(p.terminal.xi0), 0.0);
}

TEST(Config, ParsesCommentsAndWhitespace) {
  const auto c = Config::parse_string("# header\n  solver.nu = 0.25   # viscous\n\ngrid.K=3\n");
  EXPECT_EQ(c.num("solver.nu"), 0.25);
  EXPECT_EQ(c.integer("grid.K"), 3);
}

TEST(Config, UnknownRepeatedAndMalformedKeys) {
  EXPECT_THROW(Config::parse_string("solver.viscosity = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse_string("solver.nu = 1\nsolver.nu = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse_string("solver.nu 1\n"), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/run.cfg"), IoError);
  try {
    Config::parse_string("solver.nu = 1\nsolver.nu = 2\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(Config, BadValuesAreConfigErrors) {
  for (const char* text : {"solver.nu = abc\n", "solver.L = 0\n", "solver.M = -3\n", "forcing.kind = cubic\n",
                           "terminal.psi = sin\n", "terminal.modes = 1,0\n", "terminal.modes = 9,0:1\n",
                           "truncation.enabled = maybe\n", "grid.period = -1\n"}) {
    EXPECT_THROW(resolve_problem(Config::parse_string(text)), ConfigError) << text;
  }
}

TEST(Config, TextRoundTrip) {
  auto c = Config::parse_string("solver.nu = 0.1\nsigma.x = 0.30000000000000004\nforcing.kind = saturated\n");
  const auto back = Config::parse_string(c.to_text());
  EXPECT_EQ(back.values(), c.values());
  EXPECT_TRUE(bitwise_equal(back.num("sigma.x"), 0.30000000000000004));
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_TRUE(bitwise_equal(parse_double(format_double(std::nextafter(1.0, 2.0)), "x"), std::nextafter(1.0, 2.0)));
}

TEST(Manifest, Sha256OfKnownContent) {
  TempDir dir;
  write_text(dir.file("abc"), "abc");
  EXPECT_EQ(sha256_file(dir.file("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  write_text(dir.file("empty"), "");
  EXPECT_EQ(sha256_file(dir.file("empty")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_THROW(sha256_file(dir.file("missing")), IoError);
}

TEST(Manifest, WritesDigestsAndReloadsConfig) {
  TempDir dir;
  write_text(dir.file("out.csv"), "abc");
  RunManifest m;
  m.subcommand = "solve";
  m.config = Config::parse_string("solver.nu = 0.7\ngrid.K = 2\n");
  m.seed = 9;
  m.outputs["out.csv"] = "";
  m.write(dir.path());
  std::ifstream in(dir.file("manifest.json"));
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["outputs"]["out.csv"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(j["subcommand"], "solve");
  EXPECT_EQ(j["seed"], 9);
  const auto back = Config::load(dir.file("manifest.json"));
  EXPECT_EQ(back.values(), m.config.values());
}

TEST(Manifest, MalformedManifestIsAConfigError) {
  TempDir dir;
  write_text(dir.file("a.json"), "{ not json");
  EXPECT_THROW(Config::load(dir.file("a.json")), ConfigError);
  write_text(dir.file("b.json"), "{\"seed\": 1}");
  EXPECT_THROW(Config::load(dir.file("b.json")), ConfigError);
  write_text(dir.file("c.json"), "{\"config\": {\"solver.nu\": 1}}");
  EXPECT_THROW(Config::load(dir.file("c.json")), ConfigError);
}
