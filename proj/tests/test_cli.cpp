#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = LSTMLRP_CLI_PATH;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture_stderr(const std::string& args) {
  const fs::path tmp = fs::temp_directory_path() / "lstmlrp_cli_stderr.txt";
  const std::string cmd = kCli + " " + args + " >/dev/null 2>" + tmp.string();
  if (std::system(cmd.c_str()) == -1) return {};
  std::ifstream in(tmp);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("lstmlrp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string out(const std::string& name) const { return (dir / name).string(); }

  // Small addition dataset plus a briefly trained model.
  void make_model() {
    ASSERT_EQ(run("--out " + out("data") +
                  " gen --task addition --train-count 200 --val-count 40 --test-count 10"),
              0);
    ASSERT_EQ(run("--out " + out("model") + " train --train " + out("data/train.jsonl") +
                  " --val " + out("data/val.jsonl") + " --epochs 3"),
              0);
  }

  fs::path dir;
};

}  // namespace

TEST_F(CliTest, HelpForEverySubcommand) {
  EXPECT_EQ(run("--help"), 0);
  for (const char* sub : {"gen", "train", "explain", "dtd-grid", "audit", "experiment",
                          "experiment fidelity", "experiment cells", "experiment selectivity",
                          "experiment redistribute"}) {
    EXPECT_EQ(run(std::string(sub) + " --help"), 0) << sub;
  }
  EXPECT_EQ(run("--version"), 0);
}

TEST_F(CliTest, DistinctExitCodes) {
  EXPECT_EQ(run("gen --task addition --bogus-flag"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("gen --task multiplication"), 3);
  EXPECT_EQ(run("explain --model " + out("none.json") + " --data " + out("none.jsonl")), 4);
  EXPECT_EQ(run("--config " + out("missing.toml") + " gen --task addition"), 4);
  EXPECT_EQ(run("--out " + out("d") + " dtd-grid --signal sigmoid"), 3);
}

TEST_F(CliTest, ErrorsAreOneLine) {
  const std::string err = capture_stderr("explain --model " + out("x.json") + " --data y");
  EXPECT_EQ(err.rfind("error code=4 kind=file", 0), 0u) << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
}

TEST_F(CliTest, ExplainWritesRelevanceAndStamps) {
  make_model();
  ASSERT_EQ(run("--out " + out("rel") + " explain --model " + out("model/model.json") +
                " --data " + out("data/test.jsonl") + " --rule all --eps 0.001"),
            0);
  const std::string csv = slurp(dir / "rel/relevance.csv");
  EXPECT_EQ(csv.rfind("t,dim,relevance\n", 0), 0u);
  EXPECT_TRUE(fs::exists(dir / "rel/relevance.json"));
  const std::string config = slurp(dir / "rel/config.ini");
  EXPECT_NE(config.find("explain.rule=\"all\""), std::string::npos);
  EXPECT_NE(config.find("explain.eps=0.001"), std::string::npos);
  EXPECT_NE(slurp(dir / "rel/versions.txt").find("lstmlrp "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "model/history.csv"));
}

TEST_F(CliTest, PropDefaultsToLargerStabilizer) {
  make_model();
  const std::string base = " explain --model " + out("model/model.json") + " --data " +
                           out("data/test.jsonl") + " --rule prop";
  ASSERT_EQ(run("--out " + out("a") + base), 0);
  ASSERT_EQ(run("--out " + out("b") + base + " --eps-product 0.2"), 0);
  ASSERT_EQ(run("--out " + out("c") + base + " --eps-product 0.001"), 0);
  EXPECT_EQ(slurp(dir / "a/relevance.csv"), slurp(dir / "b/relevance.csv"));
  EXPECT_NE(slurp(dir / "a/relevance.csv"), slurp(dir / "c/relevance.csv"));
}

TEST_F(CliTest, AuditAndDtdGrid) {
  make_model();
  ASSERT_EQ(run("--out " + out("audit") + " audit --model " + out("model/model.json") +
                " --data " + out("data/test.jsonl")),
            0);
  EXPECT_EQ(slurp(dir / "audit/audit.csv").rfind("item,output_relevance_in,", 0), 0u);
  ASSERT_EQ(run("--out " + out("grid") + " dtd-grid --g-n 4 --s-n 5"), 0);
  EXPECT_EQ(slurp(dir / "grid/dtd_grid.csv").rfind("z_g,z_s,model_value,R_g_term,R_s_term,remainder", 0),
            0u);
}

TEST_F(CliTest, ConfigFileAndPrecedence) {
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "seed = 7\n[gen]\ntask = \"subtraction\"\ntrain-count = 30\nval-count = 5\ntest-count = 5\n";
  }
  ASSERT_EQ(run("--config " + out("run.toml") + " --out " + out("g1") + " gen"), 0);
  EXPECT_NE(slurp(dir / "g1/config.ini").find("seed=7"), std::string::npos);
  EXPECT_NE(slurp(dir / "g1/config.ini").find("gen.task=\"subtraction\""), std::string::npos);
  ASSERT_EQ(run("--config " + out("run.toml") + " --seed 8 --out " + out("g2") + " gen"), 0);
  EXPECT_NE(slurp(dir / "g2/config.ini").find("seed=8"), std::string::npos);
  EXPECT_NE(slurp(dir / "g1/train.jsonl"), slurp(dir / "g2/train.jsonl"));
  ASSERT_EQ(run("--seed 7 --out " + out("g3") +
                " gen --task subtraction --train-count 30 --val-count 5 --test-count 5"),
            0);
  EXPECT_EQ(slurp(dir / "g1/train.jsonl"), slurp(dir / "g3/train.jsonl"));
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  ASSERT_EQ(run("gen --task grid --train-count 5 --val-count 5 --test-count 5",
                "LSTMLRP_OUT=" + out("envdir")),
            0);
  EXPECT_TRUE(fs::exists(dir / "envdir/train.jsonl"));
}

TEST_F(CliTest, FidelityRunsAreByteIdentical) {
  const std::string args =
      " experiment fidelity --task addition --models 1 --max-attempts 6 --threshold 1e-3"
      " --train-count 2000 --val-count 200 --test-count 100";
  const char* files[] = {"fidelity.json", "fidelity.csv", "config.ini", "versions.txt"};
  ASSERT_EQ(run("--seed 1 --out " + out("f") + args), 0);
  std::vector<std::string> first;
  for (const char* f : files) first.push_back(slurp(dir / "f" / f));
  fs::remove_all(dir / "f");
  ASSERT_EQ(run("--seed 1 --out " + out("f") + args), 0);
  for (std::size_t k = 0; k < first.size(); ++k) {
    EXPECT_FALSE(first[k].empty()) << files[k];
    EXPECT_EQ(slurp(dir / "f" / files[k]), first[k]) << files[k];
  }
}
