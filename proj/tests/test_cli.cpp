#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mather/io.hpp"

namespace fs = std::filesystem;
using mather::io::json;

namespace {

const std::string kCli = MATHER_CLI_PATH;
const std::string kSamples = MATHER_SAMPLES_DIR;

const fs::path kRoot = fs::temp_directory_path() / ("mather_cli_test_" + std::to_string(::getpid()));

struct RemoveRoot : ::testing::Environment {
    void TearDown() override { fs::remove_all(kRoot); }
};
const auto* const kCleanup = ::testing::AddGlobalTestEnvironment(new RemoveRoot);

fs::path scratch_dir(const std::string& name) {
    const fs::path p = kRoot / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string sample(const std::string& name) { return "'" + kSamples + "/" + name + "'"; }

}  // namespace

TEST(Cli, CompareHomotheticConfig) {
    const auto out = scratch_dir("compare");
    const int code = run("compare --config " + sample("compare_homothetic.json") + " --starts 4 --levels 1 --grid 64 --out-dir '" +
                         out.string() + "'");
    ASSERT_EQ(code, 0);
    const json doc = json::parse(slurp(out / "compare.json"));
    EXPECT_EQ(doc["exit_code"], 0);
    EXPECT_EQ(doc["seed"], 7);
    EXPECT_EQ(doc["config_hash"].get<std::string>().size(), 16u);
    EXPECT_NEAR(doc["result"]["C"].get<double>(), 2.0, 1e-9);
    EXPECT_EQ(doc["result"]["entries"].size(), 4u);
    for (const auto& e : doc["result"]["entries"]) EXPECT_TRUE(e["equality"].get<bool>());
    const std::string csv = slurp(out / "compare.csv");
    EXPECT_EQ(csv.rfind("# tool=mather version=", 0), 0u);
    EXPECT_NE(csv.find("config_hash=" + doc["config_hash"].get<std::string>()), std::string::npos);
    const json manifest = json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["config_hash"], doc["config_hash"]);
    EXPECT_TRUE(manifest.contains("created"));
}

TEST(Cli, ReproducibleAcrossRunsAndWorkers) {
    const auto a = scratch_dir("repro_a");
    const auto b = scratch_dir("repro_b");
    const std::string args = "compare --metric " + sample("flat_identity.json") + " --metric2 " + sample("dip.json") +
                             " --classes '1,0;1,1' --starts 3 --levels 1 --grid 32 --seed 5";
    ASSERT_EQ(run(args + " --workers 1 --out-dir '" + a.string() + "'"), 0);
    ASSERT_EQ(run(args + " --workers 2 --out-dir '" + b.string() + "'"), 0);
    EXPECT_EQ(slurp(a / "compare.json"), slurp(b / "compare.json"));
    EXPECT_EQ(slurp(a / "compare.csv"), slurp(b / "compare.csv"));
}

TEST(Cli, FlagsOverrideConfig) {
    const auto out = scratch_dir("override");
    ASSERT_EQ(run("compare --config " + sample("compare_homothetic.json") + " --classes '1,0' --seed 9 --starts 2 --levels 0 " +
                  "--grid 32 --out-dir '" + out.string() + "'"),
              0);
    const json doc = json::parse(slurp(out / "compare.json"));
    EXPECT_EQ(doc["seed"], 9);
    EXPECT_EQ(doc["result"]["entries"].size(), 1u);
}

TEST(Cli, EnvironmentOutputDirectory) {
    const auto out = scratch_dir("env");
    ASSERT_EQ(run("beta --metric " + sample("flat_diag.json") + " --classes '1,1' --starts 2 --levels 0 --sweep 1",
                  "MATHER_OUT_DIR='" + out.string() + "'"),
              0);
    const json doc = json::parse(slurp(out / "beta.json"));
    EXPECT_NEAR(doc["result"][0]["beta"].get<double>(), 2.5, 1e-8);
}

TEST(Cli, ConfigErrorsExitOne) {
    const auto out = scratch_dir("errors");
    const std::string o = " --out-dir '" + out.string() + "'";
    EXPECT_EQ(run("beta --metric /nonexistent.json --classes '1,0'" + o), 1);
    EXPECT_EQ(run("beta --metric " + sample("dip.json") + " --classes ''" + o), 1);
    EXPECT_EQ(run("beta --metric " + sample("dip.json") + " --classes '0,0'" + o), 1);
    EXPECT_EQ(run("beta --metric " + sample("dip.json") + " --classes '1,x'" + o), 1);
    EXPECT_EQ(run("beta --metric " + sample("dip.json") + " --classes '1,0' --starts 0" + o), 1);
    EXPECT_EQ(run("beta --metric " + sample("dip.json") + " --bogus 3" + o), 1);
    EXPECT_EQ(run("compare --metric " + sample("dip.json") + " --classes '1,0'" + o), 1);
    EXPECT_EQ(run("flat-rigidity --metric " + sample("liouville.json") + " --classes '1,0'" + o), 1);
    EXPECT_EQ(run(""), 1);
    EXPECT_FALSE(fs::exists(out / "beta.json"));
}

TEST(Cli, FlatRigidityExitCodes) {
    const auto out = scratch_dir("flat");
    const std::string common = " --classes '1,0;0,1;1,1' --starts 4 --levels 1 --grid 64 --out-dir '" + out.string() + "'";
    EXPECT_EQ(run("flat-rigidity --metric " + sample("dip.json") + common), 0);
    EXPECT_EQ(json::parse(slurp(out / "flat-rigidity.json"))["result"]["verdict"], "not flat");
    EXPECT_EQ(run("flat-rigidity --metric " + sample("faint_ripple.json") + common), 3);
    EXPECT_EQ(json::parse(slurp(out / "flat-rigidity.json"))["result"]["verdict"], "inconclusive");
}

TEST(Cli, NonConvergenceExitsThree) {
    const auto out = scratch_dir("nonconv");
    EXPECT_EQ(run("beta --metric " + sample("dip.json") + " --classes '1,1' --starts 1 --levels 0 --max-iters 1 --sweep 1" +
                  " --out-dir '" + out.string() + "'"),
              3);
}

TEST(Cli, ManeAndGradcheck) {
    const auto out = scratch_dir("mane");
    EXPECT_EQ(run("mane --metric " + sample("mane_separable.json") + " --classes '1,0;0,1' --m-max 1 --starts 4 --levels 1" +
                  " --out-dir '" + out.string() + "'"),
              0);
    const json doc = json::parse(slurp(out / "mane.json"));
    EXPECT_EQ(doc["result"]["verdict"], "V != 0");
    EXPECT_EQ(run("gradcheck --fixtures 4 --out-dir '" + out.string() + "'"), 0);
    EXPECT_EQ(json::parse(slurp(out / "gradcheck.json"))["result"].size(), 8u);
}

TEST(Cli, BumpPairHasNoEquality) {
    const auto out = scratch_dir("bump");
    ASSERT_EQ(run("compare --metric " + sample("flat_identity.json") + " --metric2 " + sample("bump.json") +
                  " --classes '1,0;0,1;1,1' --starts 4 --levels 1 --grid 64 --out-dir '" + out.string() + "'"),
              0);
    const json doc = json::parse(slurp(out / "compare.json"));
    for (const auto& e : doc["result"]["entries"]) EXPECT_FALSE(e["equality"].get<bool>());
}

TEST(Cli, CorruptedSpecExitsOne) {
    const auto out = scratch_dir("corrupt");
    std::ofstream(out / "broken.json") << R"J({"type": "conformal", "factor": "1 + 0.5*exp(-50*((x-0.5)^2 + )"}J";
    std::ofstream(out / "truncated.json") << R"J({"type": "flat", "matrix": [[1, 0], [0)J";
    for (const char* name : {"broken.json", "truncated.json"})
        EXPECT_EQ(run("compare --metric '" + (out / name).string() + "' --metric2 " + sample("dip.json") +
                      " --classes '1,0' --out-dir '" + out.string() + "'"),
                  1)
            << name;
}
