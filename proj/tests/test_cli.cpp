#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cmtsim/cli.hpp"

using namespace cmtsim;
using namespace cmtsim::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cmtsim_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  Options options(std::vector<std::string> sets, const std::string& out = "out") {
    Options o;
    o.overrides = std::move(sets);
    o.out_dir = (dir_ / out).string();
    return o;
  }

  fs::path dir_;
  std::ostringstream log_;
  std::ostringstream err_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(Config, EveryKeyHasAValidDocumentedDefault) {
  Config cfg;
  for (const auto& def : config_schema()) {
    EXPECT_FALSE(def.help.empty()) << def.key;
    EXPECT_NO_THROW(cfg.set(std::string(def.key), std::string(def.default_value))) << def.key;
  }
  const auto sc = cfg.sim_config();
  EXPECT_EQ(sc.cc.mtu, 1500.0);
  EXPECT_EQ(sc.cc.initial_cwnd, 3000.0);
  EXPECT_EQ(sc.cc.initial_ssthresh, 16777216.0);
  EXPECT_EQ(sc.transport.dupthresh, 4u);
  EXPECT_EQ(sc.transport.rtx_policy, RtxPolicy::Ssthresh);
  EXPECT_EQ(sc.scenario.file_size, 60'000'000u);
  EXPECT_EQ(sc.scenario.queue_capacity, 50u);
  EXPECT_EQ(sc.scenario.prop_delay, 0.010);
}

TEST(Config, UnknownKeyNamedWithLine) {
  Config cfg;
  try {
    cfg.parse_string("# comment\ncc.algoz = cmt-berp\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "cc.algoz");
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("cc.algoz"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Config, CommentsAndWhitespace) {
  Config cfg;
  cfg.parse_string("\n   # full-line comment\ncc.algo=cmt-cc   # trailing\n  scenario.loss =  0.07\n\n");
  EXPECT_EQ(cfg.get("cc.algo"), "cmt-cc");
  EXPECT_DOUBLE_EQ(cfg.real("scenario.loss"), 0.07);
}

TEST(Config, RejectsBadValues) {
  Config cfg;
  for (const char* bad : {"cc.algo=reno", "transport.dupthresh=0", "scenario.loss=1.5", "engine.master_seed=-3",
                          "scenario.load=0", "transport.rtx_policy=rtx-fastest", "scenario.template=D",
                          "cc.p=1", "link.queue_capacity=abc", "scenario.seeds=5-2", "scenario.grid=0.1,x",
                          "scenario.algos=cmt-cc,,cmt-berp", "nonsense"}) {
    EXPECT_THROW(cfg.apply_override(bad), ConfigError) << bad;
  }
  EXPECT_THROW(cfg.parse_string("scenario.loss 0.1\n"), ConfigError);
}

TEST(Config, ScientificIntegers) {
  Config cfg;
  cfg.apply_override("scenario.file_size=60e6");
  EXPECT_EQ(cfg.unsigned_value("scenario.file_size"), 60'000'000u);
  EXPECT_THROW(cfg.apply_override("scenario.file_size=1.5"), ConfigError);
}

TEST(Config, SeedExpansion) {
  EXPECT_EQ(Config::expand_seeds("1-3,9"), (std::vector<std::uint64_t>{1, 2, 3, 9}));
  EXPECT_EQ(Config::expand_seeds("4"), (std::vector<std::uint64_t>{4}));
  EXPECT_TRUE(Config::expand_seeds("").empty());
}

TEST(Config, EmptySeedListRejected) {
  Config cfg;
  try {
    cfg.apply_override("scenario.seeds=");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "scenario.seeds");
  }
}

TEST(Config, DefaultGridsPerTemplate) {
  Config cfg;
  auto spec = cfg.scenario_spec();
  ASSERT_EQ(spec.grid.size(), 10u);
  EXPECT_DOUBLE_EQ(spec.grid.front(), 0.01);
  EXPECT_DOUBLE_EQ(spec.grid.back(), 0.10);
  EXPECT_EQ(spec.seeds.size(), 10u);
  cfg.apply_override("scenario.template=C");
  spec = cfg.scenario_spec();
  EXPECT_DOUBLE_EQ(spec.grid.front(), 0.1);
  EXPECT_DOUBLE_EQ(spec.grid.back(), 1.0);
  EXPECT_DOUBLE_EQ(cfg.point_value(), 0.9);
}

// ---------------------------------------------------------------------------
// Commands

TEST_F(CliTest, RunWritesOneRowAndIsDeterministic) {
  const auto cfg = write_config("a.cfg", "scenario.template = A\nscenario.file_size = 400000\n");
  auto opt = options({"cc.algo=cmt-berp", "scenario.loss=0.10", "engine.master_seed=7"});
  opt.config_path = cfg.string();
  ASSERT_EQ(cmd_run(opt, log_, err_), kOk) << err_.str();
  const auto first = slurp(dir_ / "out" / "results.csv");
  const auto rows = lines_of(dir_ / "out" / "results.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], kResultsHeader);
  EXPECT_EQ(rows[1].rfind("A,cmt-berp,7,0.1000,", 0), 0u) << rows[1];
  ASSERT_EQ(cmd_run(opt, log_, err_), kOk);
  EXPECT_EQ(slurp(dir_ / "out" / "results.csv"), first);
  EXPECT_EQ(first.find('\r'), std::string::npos);
}

TEST_F(CliTest, BadKeyExitsTwoAndNamesIt) {
  auto opt = options({"cc.algoz=cmt-berp"});
  EXPECT_EQ(cmd_run(opt, log_, err_), kConfigError);
  EXPECT_NE(err_.str().find("cc.algoz"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "results.csv"));
}

TEST_F(CliTest, BadKeyInFileReportsLine) {
  auto opt = options({});
  opt.config_path = write_config("bad.cfg", "scenario.template = B\n\ncc.algoz = x\n").string();
  EXPECT_EQ(cmd_sweep(opt, log_, err_), kConfigError);
  EXPECT_NE(err_.str().find("line 3"), std::string::npos) << err_.str();
}

TEST_F(CliTest, OverridesBeatConfigFileWhichBeatsPreset) {
  auto opt = options({"scenario.loss=0.03"});
  opt.config_path = write_config("p.cfg", "scenario.loss = 0.02\nscenario.template = B\n").string();
  const auto cfg = load_config(opt, figure_preset(3));
  EXPECT_EQ(cfg.get("scenario.template"), "B");
  EXPECT_DOUBLE_EQ(cfg.real("scenario.loss"), 0.03);
}

TEST_F(CliTest, MissingConfigFileIsAnIoError) {
  auto opt = options({});
  opt.config_path = (dir_ / "absent.cfg").string();
  EXPECT_EQ(cmd_run(opt, log_, err_), kIoError);
}

TEST_F(CliTest, UnwritableOutputIsAnIoError) {
  auto opt = options({"scenario.file_size=100000"});
  opt.out_dir = "/proc/cmtsim-no-such-dir";
  EXPECT_EQ(cmd_run(opt, log_, err_), kIoError) << err_.str();
}

TEST_F(CliTest, TimedOutRunExitsThree) {
  auto opt = options({"scenario.time_cap=2"});
  EXPECT_EQ(cmd_run(opt, log_, err_), kSimTimeout);
  const auto rows = lines_of(dir_ / "out" / "results.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].back(), '1');  // timed_out column
}

TEST_F(CliTest, FigureMustMatchCommand) {
  auto opt = options({});
  opt.figure = 2;
  EXPECT_EQ(cmd_run(opt, log_, err_), kConfigError);
  EXPECT_EQ(cmd_trace(opt, log_, err_), kConfigError);
  opt.figure = 3;
  EXPECT_EQ(cmd_sweep(opt, log_, err_), kConfigError);
  opt.figure = 4;
  EXPECT_EQ(cmd_sweep(opt, log_, err_), kConfigError);
}

TEST_F(CliTest, SweepWritesRowsAndSummary) {
  auto opt = options({"scenario.grid=0.02,0.05", "scenario.seeds=1-3", "scenario.file_size=200000"});
  opt.jobs = 2;
  ASSERT_EQ(cmd_sweep(opt, log_, err_), kOk) << err_.str();
  EXPECT_EQ(lines_of(dir_ / "out" / "results.csv").size(), 1u + 2 * 2 * 3);
  const auto summary = lines_of(dir_ / "out" / "summary.csv");
  ASSERT_EQ(summary.size(), 1u + 2 * 2);
  EXPECT_EQ(summary[0], kSummaryHeader);
}

TEST_F(CliTest, SweepExitsThreeOnlyWhenEveryPointTimesOut) {
  auto opt = options({"scenario.grid=0.05", "scenario.seeds=1-2", "scenario.time_cap=1"});
  EXPECT_EQ(cmd_sweep(opt, log_, err_), kSimTimeout);
  opt = options({"scenario.grid=0.01", "scenario.seeds=1", "scenario.file_size=1500000",
                 "scenario.time_cap=13", "scenario.algos=cmt-cc,cmt-berp,mptcp-coupled"});
  const int code = cmd_sweep(opt, log_, err_);
  const auto rows = lines_of(dir_ / "out" / "results.csv");
  std::size_t timed_out = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) timed_out += rows[i].back() == '1' ? 1 : 0;
  EXPECT_EQ(code, timed_out == rows.size() - 1 ? kSimTimeout : kOk);
}

TEST_F(CliTest, FigureTwoPresetEmitsAxesTable) {
  auto opt = options({"scenario.seeds=1-2", "scenario.file_size=150000"});
  opt.figure = 2;
  ASSERT_EQ(cmd_sweep(opt, log_, err_), kOk) << err_.str();
  const auto fig = lines_of(dir_ / "out" / "fig2.csv");
  ASSERT_EQ(fig.size(), 1u + 10 * 2);
  EXPECT_EQ(fig[0], "loss,algo,mean_transfer_time_s,stdev_transfer_time_s");
  EXPECT_EQ(fig[1].rfind("0.0100,cmt-berp,", 0), 0u) << fig[1];
}

TEST_F(CliTest, FigureEightPresetUsesThroughput) {
  auto opt = options({"scenario.seeds=1", "scenario.file_size=100000", "scenario.grid=0.5"});
  opt.figure = 8;
  ASSERT_EQ(cmd_sweep(opt, log_, err_), kOk) << err_.str();
  const auto fig = lines_of(dir_ / "out" / "fig8.csv");
  ASSERT_EQ(fig.size(), 3u);
  EXPECT_EQ(fig[0], "load,algo,mean_goodput_bps,stdev_goodput_bps");
}

TEST_F(CliTest, TraceFileShape) {
  auto opt = options({"scenario.file_size=600000", "scenario.loss=0.10", "output.trace_interval=0.1"});
  ASSERT_EQ(cmd_trace(opt, log_, err_), kOk) << err_.str();
  const auto rows = lines_of(dir_ / "out" / "trace.csv");
  ASSERT_GT(rows.size(), 10u);
  EXPECT_EQ(rows[0], kTraceHeader);
  std::map<int, double> last_time;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double t = 0, cwnd = 0;
    int path = 0;
    ASSERT_EQ(std::sscanf(rows[i].c_str(), "%lf,%d,%lf", &t, &path, &cwnd), 3) << rows[i];
    if (last_time.count(path)) {
      EXPECT_NEAR(t - last_time[path], 0.1, 1e-9);
    }
    last_time[path] = t;
    EXPECT_GE(cwnd, 1500.0);
  }
  EXPECT_EQ(last_time.size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "trace.gp"));
  EXPECT_EQ(lines_of(dir_ / "out" / "trace.events.csv").at(0), kEventsHeader);
}

TEST_F(CliTest, TraceRejectsNonPositiveInterval) {
  auto opt = options({"output.trace_interval=0"});
  EXPECT_EQ(cmd_trace(opt, log_, err_), kConfigError);
}

TEST_F(CliTest, FigureThreePresetTracesBothControllers) {
  auto opt = options({"scenario.file_size=300000"});
  opt.figure = 3;
  ASSERT_EQ(cmd_trace(opt, log_, err_), kOk) << err_.str();
  for (const char* f : {"fig3_cmt-cc.csv", "fig3_cmt-berp.csv", "fig3_cmt-cc.events.csv", "fig3.gp", "results.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
  const auto gp = slurp(dir_ / "out" / "fig3.gp");
  EXPECT_NE(gp.find("fig3_cmt-berp.csv"), std::string::npos);
  const auto first = slurp(dir_ / "out" / "fig3_cmt-berp.csv");
  ASSERT_EQ(cmd_trace(opt, log_, err_), kOk);
  EXPECT_EQ(slurp(dir_ / "out" / "fig3_cmt-berp.csv"), first);
}

TEST_F(CliTest, RunWritesTraceOnlyWhenAsked) {
  auto opt = options({"scenario.file_size=200000"});
  ASSERT_EQ(cmd_run(opt, log_, err_), kOk);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "trace.csv"));
  opt.overrides.push_back("output.trace_path=point.csv");
  ASSERT_EQ(cmd_run(opt, log_, err_), kOk);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "point.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "point.events.csv"));
}
