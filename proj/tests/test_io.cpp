#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rpmap/error.hpp"
#include "rpmap/io.hpp"
#include "rpmap/pipeline.hpp"
#include "support.hpp"

namespace rpmap {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "rpmap_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(gen) * std::pow(10.0, i % 40 - 20);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(KernelFile, RoundTripIsExact) {
  std::mt19937_64 gen(32);
  DiscretizedKernel K = kill(testing::toy(testing::random_stochastic(6, gen)), {0, 2, 3, 5});
  K.sigma = 0.1;
  K.sample_counts = {100, 101, 102, 103};
  KernelArchive a;
  a.kernel = K;
  a.structure = testing::toy_structure({{0}, {3, 5}});
  a.structure->delta = 0.25;
  a.structure->H(0, 1) = 0.04;
  a.structure->H(1, 0) = 0.09;
  a.model = ModelSpec{};
  a.build = Json{{"seed", 3}};
  const fs::path p = scratch("k.json");
  write_kernel_file(p, a);
  const KernelArchive b = read_kernel_file(p);
  EXPECT_EQ(b.kernel.matrix, K.matrix);
  EXPECT_EQ(b.kernel.kill_column, K.kill_column);
  EXPECT_EQ(b.kernel.states, K.states);
  EXPECT_EQ(b.kernel.sample_counts, K.sample_counts);
  EXPECT_EQ(b.kernel.grid, K.grid);
  EXPECT_EQ(b.kernel.sigma, 0.1);
  ASSERT_TRUE(b.structure.has_value());
  EXPECT_EQ(b.structure->balls, a.structure->balls);
  EXPECT_TRUE(std::isinf(b.structure->H(0, 0)));
  EXPECT_EQ(b.structure->H(1, 0), 0.09);
  ASSERT_TRUE(b.model.has_value());
  EXPECT_EQ(b.model->roots, a.model->roots);
  EXPECT_EQ(b.build["seed"], 3);
  EXPECT_EQ(read_json(p)["format"], "rpmap-kernel");
}

TEST(KernelFile, RejectsForeignDocuments) {
  const fs::path p = scratch("foreign.json");
  write_json(p, Json{{"format", "something-else"}});
  EXPECT_THROW(read_kernel_file(p), Error);
  EXPECT_THROW(read_kernel_file(scratch("missing.json")), Error);
}

TEST(ModelSpec, ParsesNameOrObject) {
  EXPECT_EQ(model_spec_from_json(Json("reference")).name, "reference");
  const ModelSpec s = model_spec_from_json(Json::parse(R"({"name": "radial", "roots": [1, 2, 3], "omega": 2})"));
  EXPECT_EQ(s.roots, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(s.omega, 2.0);
  EXPECT_EQ(model_spec_from_json(to_json(s)).roots, s.roots);
  EXPECT_THROW(model_spec_from_json(Json("lorenz")), Error);
  EXPECT_THROW(model_spec_from_json(Json::parse(R"({"confinement": "leaky"})")), Error);
}

TEST(Csv, HeadersAreDocumented) {
  const DiscretizedKernel K = kill(testing::toy(testing::K3()), {0, 2});
  const fs::path k = scratch("kernel.csv");
  write_kernel_csv(k, K);
  EXPECT_EQ(first_line(k), "cell,to_0,to_2,kill");
  const fs::path s = scratch("spectrum.csv");
  write_spectrum_csv(s, sorted_eigenvalues(testing::K3()));
  EXPECT_EQ(first_line(s), "index,re,im,modulus");
  const fs::path e = scratch("eigenvectors.csv");
  write_eigenvectors_csv(e, testing::toy(testing::K3()), spectral_decomposition(testing::K3(), 1));
  EXPECT_EQ(first_line(e), "cell,x0,phi0_re,phi0_im,pi0_re,pi0_im");
}

TEST(PipelineConfig, UnknownKeysAreConfigErrors) {
  try {
    config_from_json(Json::parse(R"({"smaples_per_cell": 10})"));
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(PipelineConfig, JsonRoundTrip) {
  PipelineConfig c;
  c.sigma2 = {0.03, 0.01};
  c.grid = {50};
  c.checks = {"exact"};
  const PipelineConfig d = config_from_json(to_json(c));
  EXPECT_EQ(d.sigma2, c.sigma2);
  EXPECT_EQ(d.grid, c.grid);
  EXPECT_EQ(d.checks, c.checks);
}

TEST(PipelineConfig, FinalizeChecksRanges) {
  PipelineConfig c;
  c.sigma2 = {2.0};
  EXPECT_THROW(finalize(c), StageError);
  PipelineConfig d;
  d.model_file = scratch("no_such_model.json");
  EXPECT_THROW(finalize(d), StageError);
}

TEST(ParseSet, BallsAndCellRanges) {
  std::mt19937_64 gen(1);
  KernelArchive a;
  a.kernel = testing::toy(testing::random_stochastic(8, gen));
  a.structure = testing::toy_structure({{0, 1}, {5}});
  a.structure->order = {1, 0};
  EXPECT_EQ(parse_set("ball:1", a), (CellSet{5}));
  EXPECT_EQ(parse_set("ball:2", a), (CellSet{0, 1}));
  EXPECT_EQ(parse_set("cells:2-4,7", a), (CellSet{2, 3, 4, 7}));
  EXPECT_THROW(parse_set("ball:3", a), std::exception);
  EXPECT_THROW(parse_set("blob", a), std::exception);
}

TEST(Sigma2Tag, ShortestText) { EXPECT_EQ(sigma2_tag(0.01), "s2_0.01"); }

}  // namespace
}  // namespace rpmap
