#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "tpfilm/cli.hpp"

using namespace tpfilm;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "tpfilm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        ::unsetenv(kOutputRootEnv);
        root_ = fs::temp_directory_path() / ("tpfilm_cli_" + std::to_string(::getpid()));
        fs::remove_all(root_);
        fs::create_directories(root_);
        ScenarioConfig c = load_config(std::string(TPFILM_CONFIG_DIR) + "/demo.cfg");
        c.n = 8;
        c.t_end = 2e-4;
        c.sample_every = 1e-4;
        c.output_dir = (root_ / "from_config").string();
        cfg_ = (root_ / "small.cfg").string();
        write_text_atomic(cfg_, config_to_text(c));
    }
    void TearDown() override {
        ::unsetenv(kOutputRootEnv);
        fs::remove_all(root_);
    }
    fs::path root_;
    std::string cfg_;
};

}  // namespace

TEST_F(CliTest, RunSucceedsAndWritesToOut) {
    const auto r = call({"run", "--config", cfg_, "--out", (root_ / "o").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("run: completed"), std::string::npos);
    EXPECT_TRUE(fs::exists(root_ / "o" / "diagnostics.csv"));
    EXPECT_FALSE(fs::exists(root_ / "from_config"));
}

TEST_F(CliTest, OutputDirectoryPrecedence) {
    ASSERT_EQ(call({"run", "--config", cfg_}).code, 0);
    EXPECT_TRUE(fs::exists(root_ / "from_config" / "manifest.json"));
    ::setenv(kOutputRootEnv, (root_ / "from_env").c_str(), 1);
    ASSERT_EQ(call({"run", "--config", cfg_}).code, 0);
    EXPECT_TRUE(fs::exists(root_ / "from_env" / "manifest.json"));
    ASSERT_EQ(call({"run", "--config", cfg_, "--out", (root_ / "from_flag").string()}).code, 0);
    EXPECT_TRUE(fs::exists(root_ / "from_flag" / "manifest.json"));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(call({}).code, 2);
    EXPECT_EQ(call({"fly"}).code, 2);
    EXPECT_EQ(call({"run"}).code, 2);
    EXPECT_EQ(call({"run", "--config", (root_ / "missing.cfg").string()}).code, 2);
    EXPECT_EQ(call({"run", "--config", cfg_, "--jobs", "0"}).code, 2);
    EXPECT_EQ(call({"run", "--config", cfg_, "--bogus"}).code, 2);
    write_text_atomic(root_ / "bad.cfg", "n = 4\nwhatever = 1\n");
    const auto r = call({"run", "--config", (root_ / "bad.cfg").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("whatever"), std::string::npos);
    write_text_atomic(root_ / "dom.cfg", "eps = 2\n");
    EXPECT_EQ(call({"run", "--config", (root_ / "dom.cfg").string()}).code, 2);
    EXPECT_EQ(call({"--help"}).code, 0);
}

TEST_F(CliTest, IntegrationFailureExitsOne) {
    std::string text = read_text(cfg_);
    text.replace(text.find("max_steps = "), std::string("max_steps = ").size(), "max_steps = 2 # ");
    write_text_atomic(root_ / "short.cfg", text);
    const auto r = call({"run", "--config", (root_ / "short.cfg").string(), "--out", (root_ / "f").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("FAILED"), std::string::npos);
}

TEST_F(CliTest, ResumeChecksTheConfig) {
    const std::string dir = (root_ / "r").string();
    ASSERT_EQ(call({"run", "--config", cfg_, "--out", dir}).code, 0);
    const auto ok = call({"resume", "--config", cfg_, "--out", dir});
    EXPECT_EQ(ok.code, 0) << ok.err;
    std::string text = read_text(cfg_);
    text.replace(text.find("eps = "), std::string("eps = ").size(), "eps = 0.02 # ");
    write_text_atomic(root_ / "other.cfg", text);
    EXPECT_EQ(call({"resume", "--config", (root_ / "other.cfg").string(), "--out", dir}).code, 2);
    EXPECT_EQ(call({"resume", "--config", cfg_, "--out", (root_ / "none").string()}).code, 2);
}

TEST_F(CliTest, CheckMollifierNeedsNoConfig) {
    const auto r = call({"check-mollifier"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(CliTest, ValidateClosureReportsConstants) {
    const auto r = call({"validate-closure", "--config", cfg_});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("R>S: yes"), std::string::npos);
    EXPECT_NE(r.out.find("regularization.tau.identity"), std::string::npos);
}

TEST_F(CliTest, FailedCriterionExitsOne) {
    ScenarioConfig c = load_config(std::string(TPFILM_CONFIG_DIR) + "/touchzero.cfg");
    c.n = 8;
    c.t_end = 1e-4;
    c.sample_every = 5e-5;
    c.sweep_eps = {1e-1, 1e-2};
    write_text_atomic(root_ / "tz.cfg", config_to_text(c));
    const auto r = call({"sweep-eps", "--config", (root_ / "tz.cfg").string(), "--out", (root_ / "tz").string()});
    const json rep = read_json(root_ / "tz" / "eps_sweep.json");
    EXPECT_EQ(r.code, rep["slope_pass"].get<bool>() && rep["gamma_pass"].get<bool>() ? 0 : 1);
    EXPECT_FALSE(rep["slope_pass"].get<bool>());
    EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}
