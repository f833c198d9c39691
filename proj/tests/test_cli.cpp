#include "stiffid/cli.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace stiffid;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "stiffid");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("stiffid_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesSixFieldsAndManifest) {
  const auto r = invoke({"simulate", "--out", (dir_ / "sim").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "sim")) {
    if (e.path().extension() == ".csv") {
      ++files;
      const auto f = read_field_csv(e.path());
      EXPECT_EQ(f.size(), 1331u);
    }
  }
  EXPECT_EQ(files, 6);
  EXPECT_TRUE(fs::exists(dir_ / "sim" / "manifest.json"));
}

TEST_F(CliTest, SimulateIsByteDeterministic) {
  ASSERT_EQ(invoke({"simulate", "--sigma", "5.6e-5", "--seed", "7", "--out", (dir_ / "a").string()}).code, 0);
  ASSERT_EQ(invoke({"simulate", "--sigma", "5.6e-5", "--seed", "7", "--out", (dir_ / "b").string()}).code, 0);
  ASSERT_EQ(invoke({"simulate", "--sigma", "5.6e-5", "--seed", "8", "--out", (dir_ / "c").string()}).code, 0);
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / name)) << name;
  }
  EXPECT_NE(slurp(dir_ / "a" / "field_2_Fy.csv"), slurp(dir_ / "c" / "field_2_Fy.csv"));
}

TEST_F(CliTest, IdentifyRecoversBeamAndIsDeterministic) {
  ASSERT_EQ(invoke({"simulate", "--out", (dir_ / "sim").string()}).code, 0);
  const auto manifest = (dir_ / "sim" / "manifest.json").string();
  const auto a = invoke({"identify", manifest, "--out", (dir_ / "o1").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = invoke({"identify", manifest, "--out", (dir_ / "o2").string()});
  for (const char* f : {"compliance.json", "significance.json", "compliance.txt", "run_log.json"}) {
    ASSERT_TRUE(fs::exists(dir_ / "o1" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "o1" / f), slurp(dir_ / "o2" / f)) << f;
  }
  const auto c = compliance_from_json(Json::parse(slurp(dir_ / "o1" / "compliance.json")));
  const Mat6 truth = beam_compliance_oracle(BeamSpec{}).k;
  for (int i = 0; i < 36; ++i) {
    const double t = truth.data()[i];
    if (t != 0.0) {
      EXPECT_NEAR(c.k.data()[i] / t, 1.0, 1e-10);
    } else {
      EXPECT_LE(std::abs(c.k.data()[i]), 1e-15);
    }
  }
  const auto log = Json::parse(slurp(dir_ / "o1" / "run_log.json"));
  EXPECT_EQ(log["experiments"].size(), 6u);
  EXPECT_EQ(log["experiments"][0]["nodes_removed"], 134);
}

TEST_F(CliTest, TorqueUnitsGiveIdenticalMatrix) {
  std::ofstream(dir_ / "spec.json") << R"({"sigma_mm": 5e-5, "seed": 3, "torque_unit": "N*m"})";
  ASSERT_EQ(invoke({"simulate", (dir_ / "spec.json").string(), "--out", (dir_ / "nm").string()}).code, 0);
  ASSERT_EQ(invoke({"simulate", "--sigma", "5e-5", "--seed", "3", "--out", (dir_ / "nmm").string()}).code, 0);
  const auto a = invoke({"identify", (dir_ / "nm" / "manifest.json").string(), "--format", "csv"});
  const auto b = invoke({"identify", (dir_ / "nmm" / "manifest.json").string(), "--format", "csv"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(slurp(dir_ / "nm" / "manifest.json"), slurp(dir_ / "nmm" / "manifest.json"));
}

TEST_F(CliTest, FiveExperimentsExitThree) {
  ASSERT_EQ(invoke({"simulate", "--out", (dir_ / "sim").string()}).code, 0);
  auto m = Json::parse(slurp(dir_ / "sim" / "manifest.json"));
  m["experiments"].erase(5);
  std::ofstream(dir_ / "sim" / "five.json") << m.dump();
  const auto r = invoke({"identify", (dir_ / "sim" / "five.json").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("insufficient experiments"), std::string::npos);
  const auto diag = Json::parse(r.err);
  EXPECT_EQ(diag["exit_code"], 3);
}

TEST_F(CliTest, MalformedFieldExitTwoWithLine) {
  ASSERT_EQ(invoke({"simulate", "--out", (dir_ / "sim").string()}).code, 0);
  std::ofstream(dir_ / "sim" / "field_3_Fz.csv", std::ios::app) << "1,2,3,4,5\n";
  const auto r = invoke({"identify", (dir_ / "sim" / "manifest.json").string()});
  EXPECT_EQ(r.code, 2);
  const auto diag = Json::parse(r.err);
  EXPECT_EQ(diag["line"], 1334);
  EXPECT_EQ(diag["experiment"], 2);
  EXPECT_NE(diag["file"].get<std::string>().find("field_3_Fz.csv"), std::string::npos);
}

TEST_F(CliTest, DegenerateFieldExitThreeWithExperiment) {
  ASSERT_EQ(invoke({"simulate", "--out", (dir_ / "sim").string()}).code, 0);
  std::ofstream(dir_ / "sim" / "field_4_Mx.csv") << "x,y,z,dx,dy,dz\n1000,0,0,0,0,0\n1001,0,0,0,0,0\n1002,0,0,0,0,0\n";
  const auto r = invoke({"identify", (dir_ / "sim" / "manifest.json").string(), "--outlier-fraction", "0"});
  EXPECT_EQ(r.code, 3);
  const auto diag = Json::parse(r.err);
  EXPECT_EQ(diag["error"], "DegenerateGeometry");
  EXPECT_EQ(diag["experiment"], 3);
}

TEST_F(CliTest, UsageAndIoErrors) {
  EXPECT_EQ(invoke({"identify", (dir_ / "missing.json").string()}).code, 2);
  EXPECT_EQ(invoke({"identify"}).code, 2);
  EXPECT_EQ(invoke({"benchmark", "nonsense"}).code, 2);
  EXPECT_EQ(invoke({"identify", "x.json", "--estimator", "qr"}).code, 2);
  std::ofstream(dir_ / "file") << "x";
  const auto r = invoke({"simulate", "--out", (dir_ / "file" / "sub").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(Json::parse(r.err).contains("error"));
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(CliTest, OverridesReachThePipeline) {
  ASSERT_EQ(invoke({"simulate", "--sigma", "5.6e-5", "--out", (dir_ / "sim").string()}).code, 0);
  const auto r = invoke({"identify", (dir_ / "sim" / "manifest.json").string(), "--estimator", "svd", "--angles",
                      "plus", "--outlier-fraction", "0.2", "--confidence-multiplier", "4", "--no-symmetrize"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = Json::parse(r.out);
  EXPECT_EQ(j["run"]["options"]["estimator"], "svd");
  EXPECT_EQ(j["run"]["options"]["angles"], "plus");
  EXPECT_EQ(j["run"]["experiments"][0]["nodes_removed"], 267);
  EXPECT_EQ(j["compliance"]["symmetrized"], false);
  EXPECT_EQ(j["significance"]["confidence_multiplier"], 4.0);
}

TEST_F(CliTest, BenchmarkNoiseFreeAndFiles) {
  const auto r = invoke({"benchmark", "noise", "--sigma", "0", "--trials", "3", "--out", dir_.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "noise.csv"));
  EXPECT_TRUE(Json::parse(slurp(dir_ / "noise.json"))["passed"].get<bool>());
}

TEST_F(CliTest, BenchmarkExitCodeFollowsVerdict) {
  // Two trials give a very rough spread estimate; whatever the verdict, the
  // exit code has to follow it.
  const auto r = invoke({"benchmark", "noise", "--trials", "2", "--seed", "1"});
  const auto j = Json::parse(r.out);
  EXPECT_EQ(r.code, j["passed"].get<bool>() ? 0 : 4);
}

TEST_F(CliTest, BenchmarkAmplitudeCsv) {
  const auto r = invoke({"benchmark", "amplitude", "--format", "csv"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("method,b_deg=0.01,", 0), 0u);
  EXPECT_NE(r.out.find("\nLIN,"), std::string::npos);
}
