#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "nilrec/formats.hpp"

using namespace nilrec;
namespace fs = std::filesystem;

namespace {

std::string sample(const std::string& name) { return std::string(NILREC_SAMPLES) + "/" + name; }
std::string data(const std::string& name) { return std::string(NILREC_TEST_DATA) + "/" + name; }

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("nilrec-test-" + name);
  fs::remove_all(p);
  return p;
}

int parse_error_line(const std::string& text) {
  try {
    parse_config(text, "t.conf");
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::vector<std::string> csv_column(const std::string& csv, std::size_t col) {
  std::vector<std::string> out;
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string f;
    for (std::size_t i = 0; i <= col; ++i) std::getline(ls, f, ',');
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST(Config, ParsesKnownKeys) {
  auto c = parse_config("# comment\nsystem = a.system\neps = 0.2, 0.1\nhorizon = 500\nthreads = 2\n", "t.conf");
  EXPECT_EQ(c.system_path, "a.system");
  EXPECT_EQ(c.eps, (std::vector<double>{0.2, 0.1}));
  EXPECT_EQ(c.horizon, 500);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.line_of("horizon"), 4);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("eps = 0.1\nbogus = 3\n"), 2);
  EXPECT_EQ(parse_error_line("eps = 0.1\n\neps = 0.2\n"), 3);
  EXPECT_EQ(parse_error_line("horizon = 10\neps = -1\n"), 2);
  EXPECT_EQ(parse_error_line("eps = 0.1\nhorizon = 0\n"), 2);
  EXPECT_EQ(parse_error_line("eps = 0.1\ngrid_m = 2000000\n"), 2);
  EXPECT_EQ(parse_error_line("eps = 0.1\nno equals sign\n"), 2);
  EXPECT_EQ(parse_error_line("eps =\n"), 1);
}

TEST(Config, MergeOverridesAndCanonicalIsSorted) {
  auto base = parse_config("horizon = 10\neps = 0.1\n", "a");
  auto over = parse_config("horizon = 20\n", "b");
  auto m = merge_config(base, over);
  EXPECT_EQ(m.horizon, 20);
  EXPECT_EQ(m.eps, (std::vector<double>{0.1}));
  EXPECT_EQ(m.canonical(), "eps = 0.1\nhorizon = 20\n");
}

TEST(Config, ReadResolvesRelativePaths) {
  auto c = read_config(sample("recur.conf"));
  EXPECT_EQ(fs::path(c.system_path), fs::path(sample("skew.system")));
  EXPECT_EQ(c.eps.size(), 3u);
}

TEST(SystemFile, LineNumbersOnErrors) {
  try {
    read_system_file(data("bad_matrix.system"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5);
  }
}

TEST(SystemFile, SamplesRoundTrip) {
  for (const char* name : {"skew.system", "skew2.system"}) {
    auto sf = read_system_file(sample(name));
    auto text = write_system_file(sf.system, sf.basis);
    auto again = parse_system_file(text, "again");
    EXPECT_EQ(again.system.maps(), sf.system.maps());
    EXPECT_EQ(write_system_file(again.system, again.basis), text);
  }
}

TEST(Csv, Formatting) {
  CsvTable t({"a", "b"});
  t.row({"1", csv_double(0.1)});
  t.row({"x,y", "2"});
  EXPECT_EQ(t.to_text(), "a,b\n1,0.10000000000000001\n\"x,y\",2\n");
  EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
}

TEST(Cli, BohrMinPrintsFive) {
  auto dir = scratch("bohr");
  auto r = run({"bohr-min", "--alpha", "sqrt2", "--eps", "0.1", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("5"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "bohr-min.csv"));
  EXPECT_TRUE(fs::exists(dir / "bohr-min.summary.txt"));
  EXPECT_EQ(csv_column(read_text_file((dir / "bohr-min.csv").string()), 2), (std::vector<std::string>{"5"}));
}

TEST(Cli, ExitCodes) {
  auto dir = scratch("codes");
  EXPECT_EQ(run({}).code, cli::kConfigError);
  EXPECT_EQ(run({"nonsense"}).code, cli::kConfigError);
  EXPECT_EQ(run({"bohr-min", "--alpha", "sqrt2", "--eps", "", "--out", dir.string()}).code, cli::kConfigError);
  EXPECT_EQ(run({"recur", "--config", data("bad_key.conf"), "--out", dir.string()}).code, cli::kConfigError);
  auto missing = run({"recur", "--config", data("missing_system.conf"), "--out", dir.string()});
  EXPECT_EQ(missing.code, cli::kConfigError);
  EXPECT_FALSE(missing.err.empty());
  auto err = run({"recur", "--config", data("bad_key.conf"), "--out", dir.string()}).err;
  EXPECT_NE(err.find("bad_key.conf:3"), std::string::npos) << err;
}

TEST(Cli, NonMinimalSystemExitsWithWitness) {
  auto dir = scratch("nonmin");
  auto r = run({"pipeline", "--config", data("rational.conf"), "--out", dir.string()});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_NE(r.err.find("witness"), std::string::npos) << r.err;
}

TEST(Cli, CorrelateFloorSlope) {
  auto dir = scratch("corr");
  auto r = run({"correlate", "--config", sample("correlate.conf"), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto csv = read_text_file((dir / "correlate.csv").string());
  auto p = csv_column(csv, 3);
  ASSERT_FALSE(p.empty());
  EXPECT_NEAR(std::stod(p[0]), 0.70711, 0.01);
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns) {
  std::vector<std::pair<std::string, std::string>> cmds{
      {"recur", "recur.conf"}, {"correlate", "correlate.conf"}, {"simulate", "simulate.conf"}};
  for (const auto& [cmd, conf] : cmds) {
    auto a = scratch(cmd + "-a"), b = scratch(cmd + "-b");
    ASSERT_EQ(run({cmd, "--config", sample(conf), "--out", a.string(), "--threads", "1"}).code, 0);
    ASSERT_EQ(run({cmd, "--config", sample(conf), "--out", b.string(), "--threads", "4"}).code, 0);
    EXPECT_EQ(read_text_file((a / (cmd + ".csv")).string()), read_text_file((b / (cmd + ".csv")).string())) << cmd;
  }
}

TEST(Cli, OutDirFromEnvironment) {
  auto dir = scratch("env");
  ::setenv("NILREC_OUT", dir.string().c_str(), 1);
  auto r = run({"bohr-min", "--alpha", "sqrt3", "--eps", "0.1"});
  ::unsetenv("NILREC_OUT");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "bohr-min.csv"));
}
