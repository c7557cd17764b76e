#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bless/io.hpp"
#include "cli.hpp"

namespace bless {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bless_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "bless");
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run({"simulate", "--p", "4", "--k", "2", "--n", "200", "--seed", "5",
                 "--out-dir", path("a")}),
            0);
  ASSERT_EQ(run({"simulate", "--p", "4", "--k", "2", "--n", "200", "--seed", "5",
                 "--out-dir", path("b")}),
            0);
  EXPECT_EQ(slurp(path("a/sim_data.csv")), slurp(path("b/sim_data.csv")));
  EXPECT_EQ(slurp(path("a/sim_model.json")), slurp(path("b/sim_model.json")));
  const Json meta = read_json(path("a/sim_data.meta.json"));
  EXPECT_EQ(meta["seed"], 5);
  EXPECT_EQ(meta["model_hash"], model_hash(read_model(path("a/sim_model.json"))));
  EXPECT_TRUE(fs::exists(path("a/sim_manifest.json")));
}

TEST_F(CliTest, SimulateTemplatesAndSurface) {
  ASSERT_EQ(run({"simulate", "--k", "3", "--g-template", "two-children", "--surface-latent",
                 "1", "--n", "50", "--out-dir", dir_.string(), "--prefix", "s"}),
            0);
  const BlessModel m = read_model(path("s_model.json"));
  EXPECT_EQ(m.g, GraphicalMatrix::identity_stack(3, 2));
  EXPECT_EQ(run({"simulate", "--p", "5", "--k", "3", "--g-template", "two-children"}), 2);
}

TEST_F(CliTest, FitKnownAndUnknownGraph) {
  ASSERT_EQ(run({"simulate", "--k", "2", "--g-template", "three-children", "--gap", "0.3",
                 "--n", "1000", "--seed", "2", "--out-dir", dir_.string()}),
            0);
  write_text("g.json", "[[1,0],[0,1],[1,0],[0,1],[1,0],[0,1]]");
  EXPECT_EQ(run({"fit", "--data", path("sim_data.csv"), "--g", path("g.json"), "--restarts",
                 "2", "--out", path("fit.json")}),
            0);
  const Json fit = read_json(path("fit.json"));
  EXPECT_TRUE(fit["converged"].get<bool>());
  EXPECT_FALSE(fit["g_estimated"].get<bool>());
  EXPECT_TRUE(fs::exists(path("fit.manifest.json")));

  EXPECT_EQ(run({"fit", "--data", path("sim_data.csv"), "--k", "2", "--restarts", "2",
                 "--out", path("fit_unknown.json")}),
            0);
  EXPECT_TRUE(read_json(path("fit_unknown.json"))["g_estimated"].get<bool>());
  EXPECT_EQ(run({"fit", "--data", path("sim_data.csv"), "--g", path("g.json"), "--max-iters",
                 "1", "--out", path("short.json")}),
            3);
  EXPECT_EQ(run({"fit", "--data", path("sim_data.csv"), "--out", path("x.json")}), 2);
}

TEST_F(CliTest, CheckGraphVerdicts) {
  write_text("single.json", "[[1,0,0],[0,1,0],[0,0,1],[0,1,0],[0,0,1]]");
  EXPECT_EQ(run({"check-graph", "--g", path("single.json"), "--out", path("a.json")}), 4);
  EXPECT_EQ(read_json(path("a.json"))["overall"], "non-identifiable");
  write_text("mixed.json", R"({"g": [[1,0,0],[0,1,0],[0,0,1],[1,0,0],[0,1,0],[0,0,1],[1,0,0]]})");
  EXPECT_EQ(run({"check-graph", "--g", path("mixed.json"), "--out", path("b.json")}), 0);
  const Json b = read_json(path("b.json"));
  EXPECT_EQ(b["overall"], "generic");
  EXPECT_EQ(b["latents"][0]["verdict"], "strict");
  EXPECT_EQ(b["latents"][1]["verdict"], "generic-boundary");
}

TEST_F(CliTest, TestIdentifiabilityExitCodes) {
  ASSERT_EQ(run({"simulate", "--k", "2", "--g-template", "two-children", "--surface-latent",
                 "1", "--n", "300", "--seed", "3", "--out-dir", dir_.string()}),
            0);
  write_text("g.json", "[[1,0],[0,1],[1,0],[0,1]]");
  const int code = run({"test-id", "--data", path("sim_data.csv"), "--g", path("g.json"),
                        "--latent", "1", "--out", path("t.json")});
  EXPECT_TRUE(code == 0 || code == 5);
  const Json t = read_json(path("t.json"));
  EXPECT_EQ(t["evidence"].get<bool>(), code == 0);

  write_text("dep.json", R"({"p":4,"k":2,"d":2,"g":[[1,0],[0,1],[1,0],[0,1]],
    "theta0":[[0.1,0.9],[0.1,0.9],[0.1,0.9],[0.1,0.9]],
    "theta1":[[0.9,0.1],[0.9,0.1],[0.9,0.1],[0.9,0.1]],
    "nu":[0.45,0.05,0.05,0.45]})");
  ASSERT_EQ(run({"simulate", "--model", path("dep.json"), "--n", "2000", "--prefix", "dep",
                 "--out-dir", dir_.string()}),
            0);
  EXPECT_EQ(run({"test-id", "--data", path("dep_data.csv"), "--g", path("g.json"), "--all",
                 "--bonferroni", "--out", path("t2.json")}),
            0);
  EXPECT_EQ(run({"test-id", "--data", path("dep_data.csv"), "--g", path("g.json")}), 2);
}

TEST_F(CliTest, ConstructAlternatives) {
  write_text("dep.json", R"({"p":4,"k":2,"d":2,"g":[[1,0],[0,1],[1,0],[0,1]],
    "theta0":[[0.1,0.9],[0.1,0.9],[0.1,0.9],[0.1,0.9]],
    "theta1":[[0.9,0.1],[0.9,0.1],[0.9,0.1],[0.9,0.1]],
    "nu":[0.45,0.05,0.05,0.45]})");
  EXPECT_EQ(run({"construct-alt", "--model", path("dep.json"), "--mode", "thm2b", "--latent",
                 "1", "--out", path("f.json")}),
            6);
  EXPECT_NE(err_.str().find("dependent"), std::string::npos);

  ASSERT_EQ(run({"simulate", "--k", "2", "--g-template", "two-children", "--surface-latent",
                 "1", "--n", "10", "--d", "2", "--gap", "0.3", "--out-dir", dir_.string()}),
            0);
  EXPECT_EQ(run({"construct-alt", "--model", path("sim_model.json"), "--mode", "thm2b",
                 "--latent", "1", "--count", "0", "--out", path("empty.json")}),
            0);
  EXPECT_TRUE(read_json(path("empty.json"))["members"].empty());
  EXPECT_EQ(run({"construct-alt", "--model", path("sim_model.json"), "--mode", "thm2b",
                 "--latent", "1", "--count", "6", "--out", path("six.json")}),
            0);
  EXPECT_EQ(read_json(path("six.json"))["members"].size(), 6u);
  EXPECT_EQ(run({"construct-alt", "--model", path("sim_model.json"), "--mode", "prop1",
                 "--item", "1", "--out", path("p.json")}),
            6);
}

TEST_F(CliTest, ExperimentsAtReducedScale) {
  EXPECT_EQ(run({"experiment", "prop1-figure", "--count", "10", "--out-dir", path("p")}), 0);
  EXPECT_TRUE(fs::exists(path("p/report.json")));
  EXPECT_TRUE(fs::exists(path("p/manifest.json")));
  EXPECT_EQ(run({"experiment", "surface-nonid", "--count", "10", "--out-dir", path("s")}), 0);
  EXPECT_EQ(run({"experiment", "blessing-mse", "--models", "4", "--datasets", "2", "--n",
                 "300", "--restarts", "2", "--out-dir", path("b")}),
            0);
  EXPECT_TRUE(fs::exists(path("b/blessing_mse.csv")));
  EXPECT_EQ(run({"experiment", "unknown"}), 2);
}

TEST_F(CliTest, MalformedInputIsExitTwo) {
  write_text("bad.csv", "y1,y2\n1,2\n1\n");
  write_text("g.json", "[[1],[1]]");
  EXPECT_EQ(run({"fit", "--data", path("bad.csv"), "--g", path("g.json")}), 2);
  EXPECT_FALSE(err_.str().empty());
  write_text("broken.json", "{not json");
  EXPECT_EQ(run({"check-graph", "--g", path("broken.json")}), 2);
  EXPECT_EQ(run({"no-such-command"}), 2);
  EXPECT_EQ(run({"--version"}), 0);
}

}  // namespace
}  // namespace bless
