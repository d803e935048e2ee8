#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "dtud/csv.hpp"
#include "dtud/rules.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = DTUD_CLI_PATH;
const fs::path kData = DTUD_DATA_DIR;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("dtud_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Outcome exec(const std::string& args) const {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = "\"" + kCli + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  Outcome train(const std::string& tree) const {
    return exec("train --data " + (kData / "valve.csv").string() + " --uncertainty 0.1 --max-layers 3 --out " +
               path(tree).string());
  }

  fs::path dir_;
};

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

TEST_F(Cli, TrainWritesTreeAndManifest) {
  const auto r = train("tree.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("training accuracy"), std::string::npos);
  const auto tree = nlohmann::json::parse(slurp(path("tree.json")));
  EXPECT_EQ(tree.at("labels"), (std::vector<std::string>{"HR", "LR"}));
  const auto manifest = nlohmann::json::parse(slurp(path("tree.json.manifest.json")));
  ASSERT_TRUE(manifest.contains("outputs"));
  const auto digest = manifest.at("outputs").at(path("tree.json").string()).get<std::string>();
  EXPECT_EQ(digest.size(), 64u);
}

TEST_F(Cli, UnmetThresholdExitsWithSelectionCode) {
  ASSERT_EQ(train("tree.json").code, 0);
  const auto r = exec("rules --tree " + path("tree.json").string() + " --data " + (kData / "valve.csv").string() +
                     " --uncertainty 0.1 --label LR --min-lp 1.01 --out " + path("rules.json").string());
  EXPECT_EQ(r.code, 4);
  const auto err = lines_of(r.err);
  ASSERT_FALSE(err.empty());
  EXPECT_EQ(err.back().rfind("dtud: error code=4 kind=", 0), 0u) << err.back();
  EXPECT_NE(err.back().find("message=\""), std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(path("rules.json")));
  EXPECT_TRUE(doc.at("selected").is_null());
}

TEST_F(Cli, SampledDesignsSatisfySelectedRule) {
  ASSERT_EQ(train("tree.json").code, 0);
  const auto rules = exec("rules --tree " + path("tree.json").string() + " --data " + (kData / "valve.csv").string() +
                         " --uncertainty 0.1 --label LR --min-lp 0.85 --bounds " +
                         (kData / "valve_bounds.csv").string() + " --out " + path("rules.json").string());
  ASSERT_EQ(rules.code, 0) << rules.err;
  EXPECT_EQ(lines_of(rules.out).front(), "branch,acc,ctt,tuples");
  EXPECT_NE(rules.out.find("selected: b"), std::string::npos);

  const auto sample = exec("sample --rules " + path("rules.json").string() + " --n 20 --seed 3 --out " +
                          path("designs.csv").string());
  ASSERT_EQ(sample.code, 0) << sample.err;
  EXPECT_NE(sample.out.find("samples: 20"), std::string::npos);

  const auto doc = nlohmann::json::parse(slurp(path("rules.json")));
  const auto names = doc.at("attributes").get<std::vector<std::string>>();
  const auto rule = dtud::selected_rule_from_json(doc, names);
  const auto rows = lines_of(slurp(path("designs.csv")));
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(rows.front(), "Tk,De,Pe");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<double> x;
    for (const auto& f : dtud::csv::split(rows[i])) x.push_back(std::stod(f));
    EXPECT_TRUE(rule.contains(x)) << rows[i];
  }

  const auto screen = exec("screen --tree " + path("tree.json").string() + " --designs " + path("designs.csv").string() +
                          " --uncertainty 0.1 --label LR --top 10 --out " + path("screen.csv").string());
  ASSERT_EQ(screen.code, 0) << screen.err;
  const auto ranked = lines_of(slurp(path("screen.csv")));
  ASSERT_EQ(ranked.size(), 11u);
  EXPECT_EQ(ranked.front(), "id,lp_LR,lp_HR,rank");
}

TEST_F(Cli, MissingInputExitsWithInputCode) {
  const auto r = exec("train --data " + path("absent.csv").string() + " --out " + path("tree.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("dtud: error code=2"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("tree.json")));
}

TEST_F(Cli, MalformedInputNamesLineAndColumn) {
  std::ofstream(path("bad.csv")) << "a,b,label\n1,2,x\n3,oops,y\n";
  const auto r = exec("train --data " + path("bad.csv").string() + " --out " + path("tree.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3, column 'b'"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownOptionIsUsageError) {
  const auto r = exec("train --bogus 1");
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, DemoIsDeterministicAndReplays) {
  const auto spec = (kData / "demo_surrogate.json").string();
  const auto a = exec("demo --spec " + spec + " --seed 7 --out " + path("a").string());
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = exec("demo --spec " + spec + " --seed 7 --out " + path("b").string());
  ASSERT_EQ(b.code, 0) << b.err;

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(path("a"))) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    const auto twin = path("b") / fs::relative(entry.path(), path("a"));
    ASSERT_TRUE(fs::exists(twin)) << twin;
    EXPECT_EQ(slurp(entry.path()), slurp(twin)) << entry.path();
    ++compared;
  }
  EXPECT_GE(compared, 23u);
  EXPECT_EQ(lines_of(slurp(path("a") / "systems.csv")).size(), 21u);

  const auto replay = exec("replay " + (path("a") / "manifest.json").string());
  EXPECT_EQ(replay.code, 0) << replay.err;
}

TEST_F(Cli, ReplayDetectsTamperedOutput) {
  ASSERT_EQ(train("tree.json").code, 0);
  const auto manifest = path("tree.json.manifest.json");
  std::ofstream(path("tree.json"), std::ios::app) << " ";
  // replay rewrites the output, so the digest matches again
  EXPECT_EQ(exec("replay " + manifest.string()).code, 0);
  auto doc = nlohmann::json::parse(slurp(manifest));
  doc["outputs"][path("tree.json").string()] = std::string(64, '0');
  std::ofstream(manifest) << doc.dump();
  EXPECT_EQ(exec("replay " + manifest.string()).code, 5);
}

TEST_F(Cli, MetricsReportsAllQuantities) {
  const auto r = exec("metrics --curve " + (kData / "crush_curve.csv").string() + " --mass 2.5 --histories " +
                     (kData / "intrusion.csv").string() + " --out " + path("metrics.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(path("metrics.json")));
  for (const char* key : {"avgstiff_kN_per_m", "peak_force_kN", "energy_J", "SEA_J_per_kg", "peak_intrusion_mm"})
    EXPECT_TRUE(doc.contains(key)) << key;
  EXPECT_NEAR(doc.at("SEA_J_per_kg").get<double>() * 2.5, doc.at("energy_J").get<double>(), 1e-6);
}

TEST_F(Cli, MorphPreservesNodeIds) {
  const auto r = exec("morph --original " + (kData / "mcp_original.csv").string() + " --displaced " +
                     (kData / "mcp_displaced.csv").string() + " --nodes " + (kData / "patch_nodes.csv").string() +
                     " --out " + path("morphed.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto in = lines_of(slurp(kData / "patch_nodes.csv"));
  const auto out = lines_of(slurp(path("morphed.csv")));
  ASSERT_EQ(in.size(), out.size());
  for (std::size_t i = 1; i < in.size(); ++i)
    EXPECT_EQ(dtud::csv::split(in[i]).front(), dtud::csv::split(out[i]).front());
}

TEST_F(Cli, CoplanarControlPointsFailNumerically) {
  std::ofstream(path("flat.csv")) << "id,x,y,z\n1,0,0,0\n2,1,0,0\n3,0,1,0\n4,1,1,0\n5,2,2,0\n";
  std::ofstream(path("flat_moved.csv")) << "id,x,y,z\n1,0,0,0\n2,1,0,0\n3,0,1,0\n4,1,1,1\n5,2,2,0\n";
  const auto r = exec("morph --original " + path("flat.csv").string() + " --displaced " +
                     path("flat_moved.csv").string() + " --nodes " + path("flat.csv").string() + " --out " +
                     path("m.csv").string());
  EXPECT_EQ(r.code, 5);
}

TEST_F(Cli, CrossValidationAndClassify) {
  const auto cv = exec("cv --data " + (kData / "valve.csv").string() + " --uncertainty 0.1 --max-layers 3 --k 5 --seed 1 --out " +
                      path("cv.json").string());
  ASSERT_EQ(cv.code, 0) << cv.err;
  EXPECT_NE(cv.out.find("fold 5:"), std::string::npos);

  ASSERT_EQ(train("tree.json").code, 0);
  const auto cl = exec("classify --tree " + path("tree.json").string() + " --data " + (kData / "valve.csv").string() +
                      " --out " + path("pred.csv").string());
  ASSERT_EQ(cl.code, 0) << cl.err;
  EXPECT_NE(cl.out.find("test accuracy"), std::string::npos);
  const auto rows = lines_of(slurp(path("pred.csv")));
  EXPECT_EQ(rows.size(), 201u);
  EXPECT_EQ(rows.front(), "id,lp_LR,lp_HR,predicted");
}
