// Drives the rpmap executable end to end.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "rpmap/io.hpp"

namespace {

namespace fs = std::filesystem;

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "rpmap_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliRun {
  int status;
  std::string output;
};

CliRun rpmap(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RPMAP_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kSmall = "--grid 40 --samples 200 --delta 0.25";

TEST(Cli, MissingModelFileIsAConfigError) {
  const fs::path dir = work_dir("missing");
  const CliRun r = rpmap("analyze --model-file " + (dir / "nope.json").string() + " --out " + dir.string(),
                      dir / "log.txt");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("config"), std::string::npos) << r.output;
}

TEST(Cli, OutOfRangeParameterIsAConfigError) {
  const fs::path dir = work_dir("range");
  EXPECT_EQ(rpmap("kernel --sigma2 2 --out " + dir.string(), dir / "log.txt").status, 2);
  EXPECT_EQ(rpmap("kernel --samples 10 --out " + dir.string(), dir / "log.txt").status, 2);
}

TEST(Cli, UnknownConfigKeyIsAConfigError) {
  const fs::path dir = work_dir("badkey");
  std::ofstream(dir / "c.json") << R"({"gird": [40]})";
  EXPECT_EQ(rpmap("kernel --config " + (dir / "c.json").string(), dir / "log.txt").status, 2);
}

TEST(Cli, FlagsOverrideTheConfigFile) {
  const fs::path dir = work_dir("override");
  std::ofstream(dir / "c.json") << R"({"grid": [30], "samples_per_cell": 150, "sigma2": [0.02]})";
  const CliRun r = rpmap("kernel --config " + (dir / "c.json").string() + " --grid 20 --out " + dir.string(),
                      dir / "log.txt");
  ASSERT_EQ(r.status, 0) << r.output;
  const rpmap::KernelArchive a = rpmap::read_kernel_file(dir / "kernel_s2_0.02.json");
  EXPECT_EQ(a.kernel.grid.counts, std::vector<int>{20});
  EXPECT_EQ(a.kernel.sample_counts.front(), 150);
}

TEST(Cli, OrbitsListsTheCatalogRadii) {
  const fs::path dir = work_dir("orbits");
  const CliRun r = rpmap("orbits --out " + dir.string(), dir / "log.txt");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("x* = 1 "), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("x* = 2.2 "), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("unstable"), std::string::npos) << r.output;
  EXPECT_TRUE(fs::exists(dir / "orbits.json"));
}

TEST(Cli, AnalyzeIsByteReproducible) {
  const fs::path a = work_dir("repro_a");
  const fs::path b = work_dir("repro_b");
  const std::string args = "analyze " + kSmall + " --sigma2 0.01 --checks exact --out ";
  const CliRun ra = rpmap(args + a.string(), a / "log.txt");
  ASSERT_EQ(ra.status, 0) << ra.output;
  ASSERT_EQ(rpmap(args + b.string() + " --threads 1", b / "log.txt").status, 0);
  int csvs = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    ++csvs;
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path().filename();
  }
  EXPECT_GE(csvs, 3);
  EXPECT_TRUE(fs::exists(a / "kernel_s2_0.01.json"));
  EXPECT_TRUE(fs::exists(a / "spectrum_s2_0.01.csv"));
  EXPECT_TRUE(fs::exists(a / "reports_s2_0.01.json"));
  EXPECT_TRUE(fs::exists(a / "summary.json"));
}

TEST(Cli, KernelThenVerifyExact) {
  const fs::path dir = work_dir("verify");
  ASSERT_EQ(rpmap("kernel " + kSmall + " --sigma2 0.01 --out " + dir.string(), dir / "log.txt").status, 0);
  const std::string k = (dir / "kernel_s2_0.01.json").string();
  const CliRun v = rpmap("verify --kernel " + k + " --suite exact --out " + dir.string(), dir / "log2.txt");
  EXPECT_EQ(v.status, 0) << v.output;
  EXPECT_NE(v.output.find("PASS"), std::string::npos) << v.output;

  const CliRun q = rpmap("qsd --kernel " + k + " --set ball:2 --out " + dir.string(), dir / "log3.txt");
  EXPECT_EQ(q.status, 0) << q.output;
  const CliRun c = rpmap("committor --kernel " + k + " --a ball:1 --b ball:2 --out " + dir.string(), dir / "log4.txt");
  EXPECT_EQ(c.status, 0) << c.output;
  const CliRun h = rpmap("hierarchy --kernel " + k + " --out " + dir.string(), dir / "log5.txt");
  EXPECT_EQ(h.status, 0) << h.output;
  const CliRun s = rpmap("spectrum --kernel " + k + " --out " + dir.string(), dir / "log6.txt");
  EXPECT_EQ(s.status, 0) << s.output;
}

TEST(Cli, MissingKernelFileIsAnIoError) {
  const fs::path dir = work_dir("nokernel");
  const CliRun r = rpmap("spectrum --kernel " + (dir / "absent.json").string(), dir / "log.txt");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.status, 1);
}

}  // namespace
