#include <gtest/gtest.h>

#include <cmath>

#include "cli_runner.hpp"
#include "liesym.hpp"

using namespace liesym;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = cli::scratch(::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  void TearDown() override { fs::remove_all(dir); }

  int run(const std::string& args) { return cli::run(args, dir / "log.txt"); }
  std::string log() { return cli::slurp(dir / "log.txt"); }
  std::string path(const std::string& name) { return (dir / name).string(); }
  void write(const std::string& name, const std::string& text) { cli::spit(dir / name, text); }

  fs::path dir;
};

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

TEST_F(Cli, GenerateWritesOneGroupPerInitialCondition) {
  write("g.json", R"({"equation": "riccati", "initial_conditions": [1.0, 2.0, 3.0]})");
  ASSERT_EQ(run("generate --config " + quoted(path("g.json")) + " --out " + quoted(path("o"))), 0) << log();
  const auto trajs = read_trajectory_csv(path("o/trajectories.csv"));
  ASSERT_EQ(trajs.size(), 3u);
  for (const auto& t : trajs) EXPECT_EQ(t.size(), 400u);
  EXPECT_NE(log().find("noise sigma"), std::string::npos);
  const auto meta = cli::read_json(path("o/generate.json"));
  EXPECT_EQ(meta["config"]["seed"].get<int>(), 0);
  EXPECT_EQ(meta["points"].get<int>(), 1200);
}

TEST_F(Cli, GenerateExponentialEndsAtE) {
  write("g.json", R"({"equation": "linear_x", "t0": 0, "t1": 1, "initial_conditions": [1.0]})");
  ASSERT_EQ(run("generate --config " + quoted(path("g.json")) + " --out " + quoted(path("o"))), 0) << log();
  const auto trajs = read_trajectory_csv(path("o/trajectories.csv"));
  ASSERT_EQ(trajs.size(), 1u);
  EXPECT_EQ(trajs[0].times.back(), 1.0);
  EXPECT_NEAR(trajs[0].states.back(), std::exp(1.0), 1e-8);
}

TEST_F(Cli, GenerateInlineEquation) {
  write("g.json", R"({"equation": {"name": "mix", "terms": [[1.0, 1, 0], [-0.5, 0, 1]]},
                      "t0": 0, "t1": 1, "initial_conditions": [0.0, 1.0]})");
  ASSERT_EQ(run("generate --config " + quoted(path("g.json")) + " --out " + quoted(path("o"))), 0) << log();
  EXPECT_EQ(read_trajectory_csv(path("o/trajectories.csv")).size(), 2u);
}

TEST_F(Cli, GenerateSameSeedByteIdentical) {
  ASSERT_EQ(run("generate --seed 5 --out " + quoted(path("a"))), 0);
  ASSERT_EQ(run("generate --seed 5 --out " + quoted(path("b"))), 0);
  EXPECT_EQ(cli::slurp(path("a/trajectories.csv")), cli::slurp(path("b/trajectories.csv")));
  ASSERT_EQ(run("generate --seed 5 --noise 1e-3 --out " + quoted(path("c"))), 0);
  ASSERT_EQ(run("generate --seed 5 --noise 1e-3 --out " + quoted(path("d"))), 0);
  EXPECT_EQ(cli::slurp(path("c/trajectories.csv")), cli::slurp(path("d/trajectories.csv")));
  ASSERT_EQ(run("generate --seed 6 --noise 1e-3 --out " + quoted(path("e"))), 0);
  EXPECT_NE(cli::slurp(path("c/trajectories.csv")), cli::slurp(path("e/trajectories.csv")));
}

TEST_F(Cli, GeneratePoleCrossingIsInputError) {
  EXPECT_EQ(run("generate --t0 -1 --t1 1 --out " + quoted(path("o"))), 2);
  EXPECT_NE(log().find("pole"), std::string::npos) << log();
}

TEST_F(Cli, UnknownConfigKeyRejected) {
  write("g.json", R"({"equation": "riccati", "stpes": 10})");
  EXPECT_EQ(run("generate --config " + quoted(path("g.json")) + " --out " + quoted(path("o"))), 2);
  EXPECT_NE(log().find("stpes"), std::string::npos);
  write("d.json", R"({"input": "x.csv", "denoise": {"mu": 1, "seed": 3}})");
  EXPECT_EQ(run("discover --config " + quoted(path("d.json")) + " --out " + quoted(path("o"))), 2);
  write("bad.json", "{not json");
  EXPECT_EQ(run("generate --config " + quoted(path("bad.json")) + " --out " + quoted(path("o"))), 2);
}

TEST_F(Cli, DiscoverRiccatiScaling) {
  ASSERT_EQ(run("generate --out " + quoted(path("g"))), 0);
  ASSERT_EQ(run("discover --input " + quoted(path("g/trajectories.csv")) + " --out " + quoted(path("d"))), 0)
      << log();
  const auto j = cli::read_json(path("d/discover.json"));
  const auto& r = j["result"];
  ASSERT_TRUE(r["found"].get<bool>());
  // Cosine against xi_t = t, xi_x = -3x.
  double dotp = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < r["t_basis"].size(); ++i) {
    const double c = r["eta_t"][i].get<double>();
    nn += c * c;
    if (r["t_basis"][i] == nlohmann::json::array({1, 0})) dotp += c;
  }
  for (std::size_t i = 0; i < r["x_basis"].size(); ++i) {
    const double c = r["eta_x"][i].get<double>();
    nn += c * c;
    if (r["x_basis"][i] == nlohmann::json::array({0, 1})) dotp += -3.0 * c;
  }
  EXPECT_GE(std::abs(dotp) / std::sqrt(nn * 10.0), 0.99);
  EXPECT_TRUE(j["readout"]["refused"].get<bool>());
  EXPECT_EQ(j["config"]["seed"].get<int>(), 0);
  EXPECT_TRUE(j["config"].contains("denoise"));
  EXPECT_NE(log().find("xi_t = "), std::string::npos);
}

TEST_F(Cli, DiscoverRandomDataFindsNothing) {
  Rng rng(3);
  std::string csv = "traj_id,t,x\n";
  for (int k = 0; k < 5; ++k)
    for (int i = 0; i < 200; ++i) csv += std::to_string(k) + "," + std::to_string(1 + i * 0.005) + "," + std::to_string(rng.uniform()) + "\n";
  write("r.csv", csv);
  EXPECT_EQ(run("discover --input " + quoted(path("r.csv")) + " --out " + quoted(path("d"))), 3) << log();
  const auto j = cli::read_json(path("d/discover.json"));
  EXPECT_FALSE(j["result"]["found"].get<bool>());
  EXPECT_FALSE(j.contains("readout"));
}

TEST_F(Cli, DiscoverExponentialReadout) {
  ASSERT_EQ(run("generate --equation linear_x --out " + quoted(path("g"))), 0);
  ASSERT_EQ(run("discover --input " + quoted(path("g/trajectories.csv")) + " --out " + quoted(path("d"))), 0)
      << log();
  const auto j = cli::read_json(path("d/discover.json"));
  const auto& ro = j["readout"];
  ASSERT_FALSE(ro["refused"].get<bool>());
  EXPECT_LE(ro["residual_rms"].get<double>(), 1e-6);
  const double x0 = ro["grid"]["x_min"].get<double>(), x1 = ro["grid"]["x_max"].get<double>();
  const std::size_t nx = ro["grid"]["nx"].get<std::size_t>();
  for (const auto& row : ro["f_hat"])
    for (std::size_t jx = 0; jx < nx; ++jx) {
      const double x = x0 + (x1 - x0) * jx / (nx - 1);
      EXPECT_NEAR(row[jx].get<double>(), x, 1e-4 * x);
    }
}

TEST_F(Cli, DiscoverMalformedCsv) {
  write("bad.csv", "traj_id,t,x\n0,1,2\n0,oops,3\n");
  EXPECT_EQ(run("discover --input " + quoted(path("bad.csv")) + " --out " + quoted(path("d"))), 2);
  EXPECT_EQ(run("discover --input " + quoted(path("missing.csv")) + " --out " + quoted(path("d"))), 2);
  EXPECT_EQ(run("discover --out " + quoted(path("d"))), 2);
}

TEST_F(Cli, CompletePlantedImage) {
  ASSERT_EQ(run("complete --out " + quoted(path("c"))), 0) << log();
  const auto j = cli::read_json(path("c/complete.json"));
  EXPECT_LE(j["rel_error"].get<double>(), 0.05);
  EXPECT_EQ(j["config"]["rank"].get<int>(), 3);
  EXPECT_EQ(j["config"]["fraction"].get<double>(), 0.5);
  for (const char* f : {"truncated.pgm", "corrupted.pgm", "recovered.pgm"})
    EXPECT_NO_THROW(read_pgm(path(std::string("c/") + f)));
}

TEST_F(Cli, CompleteFractionZeroRecoversTruncated) {
  ASSERT_EQ(run("complete --fraction 0 --out " + quoted(path("c"))), 0) << log();
  EXPECT_EQ(cli::slurp(path("c/recovered.pgm")), cli::slurp(path("c/truncated.pgm")));
}

TEST_F(Cli, CompleteFullRankNoCorruptionReproducesInput) {
  Rng rng(8);
  GrayImage img(12, 10);
  for (double& v : img.pixels) v = static_cast<double>(rng.below(256)) / 255.0;
  write_pgm(path("in.pgm"), img);
  ASSERT_EQ(run("complete --input " + quoted(path("in.pgm")) + " --rank 10 --fraction 0 --out " + quoted(path("c"))), 0)
      << log();
  const std::string in = cli::slurp(path("in.pgm"));
  for (const char* f : {"truncated.pgm", "corrupted.pgm", "recovered.pgm"})
    EXPECT_EQ(cli::slurp(path(std::string("c/") + f)), in) << f;
}

TEST_F(Cli, CompleteMalformedPgm) {
  write("bad.pgm", "P2\n2 2\n255\n1 2 3\n");
  EXPECT_EQ(run("complete --input " + quoted(path("bad.pgm")) + " --out " + quoted(path("c"))), 2);
  EXPECT_EQ(run("complete --rank 99 --out " + quoted(path("c"))), 2);
}

TEST_F(Cli, DenoiseVerdicts) {
  // Planted rank n-1 plus small noise.
  Rng rng(2);
  DenseMatrix a(30, 5);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 4; ++j) a(i, j) = rng.normal();
    a(i, 4) = a(i, 0) + a(i, 1) + 1e-4 * rng.normal();
  }
  write_matrix_csv(path("def.csv"), a);
  ASSERT_EQ(run("denoise --input " + quoted(path("def.csv")) + " --out " + quoted(path("a"))), 0) << log();
  auto j = cli::read_json(path("a/denoise.json"));
  EXPECT_TRUE(j["verdict"].get<bool>());
  EXPECT_EQ(j["test"]["raw_sigma"].size(), 5u);
  EXPECT_EQ(j["test"]["denoised_sigma"].size(), 5u);

  DenseMatrix b(30, 5);
  for (double& v : b.data()) v = rng.normal();
  write_matrix_csv(path("full.csv"), b);
  ASSERT_EQ(run("denoise --input " + quoted(path("full.csv")) + " --out " + quoted(path("b"))), 0) << log();
  j = cli::read_json(path("b/denoise.json"));
  EXPECT_FALSE(j["verdict"].get<bool>());

  write_matrix_csv(path("zero.csv"), DenseMatrix(4, 3));
  ASSERT_EQ(run("denoise --input " + quoted(path("zero.csv")) + " --out " + quoted(path("z"))), 0) << log();
  j = cli::read_json(path("z/denoise.json"));
  EXPECT_TRUE(j["test"]["degenerate"].get<bool>());
  EXPECT_FALSE(j["verdict"].get<bool>());
  EXPECT_NE(log().find("degenerate"), std::string::npos);
}

TEST_F(Cli, DenoiseMalformedMatrix) {
  write("bad.csv", "1,2\n3\n");
  EXPECT_EQ(run("denoise --input " + quoted(path("bad.csv")) + " --out " + quoted(path("o"))), 2);
}

TEST_F(Cli, DenoiseNonConvergenceExitCode) {
  Rng rng(2);
  DenseMatrix a(12, 4);
  for (double& v : a.data()) v = rng.normal();
  write_matrix_csv(path("m.csv"), a);
  write("c.json", R"({"denoise": {"max_outer": 1, "orthonormal_projections": false}})");
  EXPECT_EQ(run("denoise --input " + quoted(path("m.csv")) + " --config " + quoted(path("c.json")) +
                " -p 8 --out " + quoted(path("o"))),
            4)
      << log();
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("generate --steps notanumber"), 2);
  EXPECT_EQ(run("--help"), 0);
}
