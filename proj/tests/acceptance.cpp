// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "cmtsim/cli.hpp"

using namespace cmtsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass{true};
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { notes.push_back("     " + what); }
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  return format_row(f, args...);
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every completed record seen by the sweep criteria, for the conservation check.
std::vector<MetricsRecord> g_all_records;

std::map<std::pair<std::string, double>, std::vector<MetricsRecord>> run_grid(ScenarioTemplate t,
                                                                             std::vector<double> grid) {
  ScenarioSpec spec;
  spec.scenario = t;
  spec.grid = std::move(grid);
  for (std::uint64_t s = 1; s <= 10; ++s) spec.seeds.push_back(s);
  spec.algos = {CcAlgo::CmtCc, CcAlgo::CmtBerp};
  const auto rows = sweep(spec, jobs());
  std::map<std::pair<std::string, double>, std::vector<MetricsRecord>> out;
  for (const auto& r : rows) {
    out[{r.algo, r.variable}].push_back(r);
    g_all_records.push_back(r);
  }
  return out;
}

double mean_time(const std::vector<MetricsRecord>& rs) {
  double s = 0.0;
  for (const auto& r : rs) s += r.transfer_time;
  return s / static_cast<double>(rs.size());
}

double mean_goodput(const std::vector<MetricsRecord>& rs) {
  double s = 0.0;
  for (const auto& r : rs) s += r.goodput_bps;
  return s / static_cast<double>(rs.size());
}

// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
double sign_test_p(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
    p += c;
  }
  return p / std::pow(2.0, n);
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> w_dist(1500.0, 1e6), s_dist(1e-3, 1.0);
  double worst_single = 0.0, worst_sym = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> w{w_dist(g)}, s{s_dist(g)}, b{0.5};
    worst_single = std::max(worst_single, std::abs(compute_alpha(w, s, b) - 1.0));
    const double ws = w_dist(g), ss = s_dist(g);
    const std::vector<double> w2{ws, ws}, s2{ss, ss}, b2{0.5, 0.5};
    worst_sym = std::max(worst_sym, std::abs(compute_alpha(w2, s2, b2) - 0.5));
  }
  const double elapsed = seconds_since(t0);
  o.check(worst_single <= 1e-12, fmt("single path, beta 0.5: max |alpha-1| = %.3g over 1000 states", worst_single));
  o.check(worst_sym <= 1e-12, fmt("symmetric two paths: max |alpha-0.5| = %.3g over 1000 states", worst_sym));
  o.check(elapsed < 1.0, fmt("runtime %.4f s", elapsed));
  return o;
}

Outcome criterion_2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> b{3e6, 1e6};
  const auto beta = compute_beta(b);
  o.check(beta[0] == 0.75 && beta[1] == 0.25, fmt("compute_beta([3e6,1e6]) = [%.17g, %.17g]", beta[0], beta[1]));
  const double f = bwe_filter(1000, 2000, 1000, 0.9);
  o.check(f == 1050.0, fmt("bwe_filter(1000, 2000, 1000) = %.17g", f));
  double worst = 0.0;
  for (double c : {1.0, 145200.0, 1.25e5, 3.3e6, 7.77e7}) {
    double x = c;
    for (int k = 0; k < 50; ++k) {
      x = bwe_filter(x, c, c, 0.9);
      worst = std::max(worst, std::abs(x - c) / c);
    }
  }
  o.check(worst <= 1e-12, fmt("fixed point over 50 iterations: max relative drift %.3g", worst));
  o.check(seconds_since(t0) < 1.0, fmt("runtime %.4f s", seconds_since(t0)));
  return o;
}

Outcome criterion_3() {
  Outcome o;
  const double mtu = 1500.0, floor = 6000.0;
  // Worked rows, then a grid across both sides of the floor.
  struct Row {
    double w, beta, s_fast, w_timeout_s;
  };
  const std::vector<Row> worked{{100000, 0.25, 75000, 75000}, {5000, 0.9, 6000, 6000}, {20000, 0.5, 10000, 10000},
                                {4000, 0.5, 6000, 6000},      {1500, 0.5, 6000, 6000}};
  int rows = 0, bad = 0, floor_rows = 0;
  for (const auto& r : worked) {
    ++rows;
    const auto f = berp_fast_rtx(r.w, r.beta, mtu);
    const auto t = berp_timeout(r.w, r.beta, mtu);
    if (!(f.ssthresh == r.s_fast && f.cwnd == r.s_fast && t.ssthresh == r.w_timeout_s && t.cwnd == mtu)) ++bad;
  }
  for (double w : {1500.0, 3000.0, 6000.0, 8000.0, 12000.0, 30000.0, 100000.0, 1e6}) {
    for (double beta : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
      ++rows;
      const double reduced = w - beta * w;
      const double expect_s = reduced > floor ? reduced : floor;
      if (expect_s == floor) ++floor_rows;
      const auto f = berp_fast_rtx(w, beta, mtu);
      const auto t = berp_timeout(w, beta, mtu);
      if (!(f.ssthresh == expect_s && f.cwnd == expect_s && t.ssthresh == expect_s && t.cwnd == mtu)) ++bad;
    }
  }
  // Consecutive timeouts through the controller.
  BerpController cc(2, CcParams{});
  cc.set_window(0, 100000, 50000);
  cc.on_timeout(0);
  cc.on_timeout(0);
  const bool consecutive = cc.cwnd(0) == mtu && cc.ssthresh(0) == floor;
  o.check(bad == 0, fmt("%d rows (%d with the 4 MTU floor binding), %d mismatches", rows, floor_rows, bad));
  o.check(consecutive, fmt("two consecutive timeouts: cwnd %.0f, ssthresh %.0f", cc.cwnd(0), cc.ssthresh(0)));
  return o;
}

Outcome criterion_4() {
  Outcome o;
  SimConfig cfg;
  cfg.algo = CcAlgo::MptcpCoupled;
  Simulation sim(describe_scenario_a(0.05, cfg.scenario), cfg);
  const auto m = sim.run();
  const double mtu = 1500.0;
  int mismatches = 0, fast = 0, timeouts = 0;
  for (const auto& e : sim.congestion_events()) {
    const auto want = e.kind == CongestionEventKind::FastRtx ? halving_fast_rtx(e.cwnd_before, mtu)
                                                             : halving_timeout(e.cwnd_before, mtu);
    (e.kind == CongestionEventKind::FastRtx ? fast : timeouts)++;
    if (!(e.cwnd_after == want.cwnd && e.ssthresh_after == want.ssthresh && e.beta == 0.5)) ++mismatches;
  }
  o.check(!m.timed_out, fmt("run completed in %.1f s", m.transfer_time));
  o.check(fast + timeouts > 0 && mismatches == 0,
          fmt("%d fast_rtx + %d timeout decreases, %d differ from halving", fast, timeouts, mismatches));
  return o;
}

std::map<std::pair<std::string, double>, std::vector<MetricsRecord>> g_a, g_b;

Outcome criterion_5() {
  Outcome o;
  g_a = run_grid(ScenarioTemplate::A, {0.05, 0.08, 0.10});
  for (double loss : {0.05, 0.08, 0.10}) {
    const auto& cc = g_a[{"cmt-cc", loss}];
    const auto& berp = g_a[{"cmt-berp", loss}];
    const double mc = mean_time(cc), mb = mean_time(berp);
    o.check(mb < mc, fmt("loss %.2f: mean time BERP %.1f s vs CMT-CC %.1f s", loss, mb, mc));
    if (loss == 0.10) {
      int wins = 0;
      for (std::size_t i = 0; i < cc.size(); ++i) wins += berp[i].transfer_time < cc[i].transfer_time ? 1 : 0;
      const double p = sign_test_p(wins, static_cast<int>(cc.size()));
      o.check(p < 0.05, fmt("loss 0.10 sign test: BERP faster on %d/%zu seeds, p = %.4f", wins, cc.size(), p));
    }
  }
  return o;
}

Outcome criterion_6() {
  Outcome o;
  g_b = run_grid(ScenarioTemplate::B, {0.05, 0.10});
  for (double loss : {0.05, 0.10}) {
    const double mc = mean_time(g_b[{"cmt-cc", loss}]), mb = mean_time(g_b[{"cmt-berp", loss}]);
    o.check(mb < mc, fmt("scenario B loss %.2f: mean time BERP %.1f s vs CMT-CC %.1f s", loss, mb, mc));
  }
  for (double loss : {0.05, 0.10}) {
    for (const char* algo : {"cmt-cc", "cmt-berp"}) {
      const double ta = mean_time(g_a[{algo, loss}]), tb = mean_time(g_b[{algo, loss}]);
      o.check(tb > ta, fmt("%s loss %.2f: scenario B %.1f s > scenario A %.1f s", algo, loss, tb, ta));
    }
  }
  return o;
}

Outcome criterion_7() {
  Outcome o;
  const auto c = run_grid(ScenarioTemplate::C, {0.3, 0.6, 0.9});
  for (double load : {0.3, 0.6, 0.9}) {
    const double gc = mean_goodput(c.at({"cmt-cc", load})), gb = mean_goodput(c.at({"cmt-berp", load}));
    const double rel = std::abs(gb - gc) / gc;
    o.check(rel <= 0.15, fmt("load %.1f: goodput BERP %.0f vs CMT-CC %.0f bit/s, relative difference %.4f", load, gb,
                             gc, rel));
  }
  return o;
}

Outcome criterion_8() {
  Outcome o;
  std::size_t completed = 0, bad_delivery = 0, bad_counters = 0, timed_out = 0;
  for (const auto& r : g_all_records) {
    if (r.timed_out) {
      ++timed_out;
      continue;
    }
    ++completed;
    if (!(r.delivered_bytes == 60'000'000u && r.in_order_exactly_once)) ++bad_delivery;
    if (!r.counters_conserved) ++bad_counters;
  }
  o.check(completed > 0 && bad_delivery == 0,
          fmt("%zu completed runs (%zu timed out): %zu without exact in-order 60 MB delivery", completed, timed_out,
              bad_delivery));
  o.check(bad_counters == 0, fmt("%zu runs violate link counter conservation", bad_counters));
  SimConfig cfg;
  cfg.scenario.edge_loss = 0.0;
  for (CcAlgo algo : {CcAlgo::CmtCc, CcAlgo::CmtBerp}) {
    cfg.algo = algo;
    Simulation sim(describe_scenario_a(0.0, cfg.scenario), cfg);
    const auto m = sim.run();
    o.check(!m.timed_out && std::abs(m.transfer_time - 240.0) <= 24.0,
            fmt("zero loss, %s: %.2f s against 240 s", std::string(to_string(algo)).c_str(), m.transfer_time));
  }
  return o;
}

fs::path g_work;

std::uint64_t hash_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return fnv1a64(s.str());
}

// Reduced sweep presets keep the doubled runs short; trace presets run in full.
Outcome criterion_9() {
  Outcome o;
  const std::vector<std::string> reduced{"scenario.seeds=1-2", "scenario.file_size=5000000", "engine.master_seed=1"};
  struct Preset {
    int figure;
    bool trace;
    std::vector<std::string> files;
  };
  const std::vector<Preset> presets{
      {2, false, {"results.csv", "summary.csv", "fig2.csv"}},
      {5, false, {"results.csv", "summary.csv", "fig5.csv"}},
      {8, false, {"results.csv", "summary.csv", "fig8.csv"}},
      {3, true, {"results.csv", "fig3_cmt-cc.csv", "fig3_cmt-berp.csv", "fig3_cmt-berp.events.csv", "fig3.gp"}},
      {6, true, {"results.csv", "fig6_cmt-cc.csv", "fig6_cmt-berp.csv", "fig6_cmt-berp.events.csv", "fig6.gp"}},
      {9, true, {"results.csv", "fig9_cmt-cc.csv", "fig9_cmt-berp.csv", "fig9_cmt-berp.events.csv", "fig9.gp"}},
  };
  std::ostringstream sink;
  for (const auto& p : presets) {
    std::vector<std::uint64_t> hashes[2];
    bool ran = true;
    for (int rep = 0; rep < 2; ++rep) {
      cli::Options opt;
      opt.figure = p.figure;
      opt.jobs = jobs();
      opt.out_dir = (g_work / ("fig" + std::to_string(p.figure) + "_" + std::to_string(rep))).string();
      if (!p.trace) opt.overrides = reduced;
      const int code = p.trace ? cli::cmd_trace(opt, sink, sink) : cli::cmd_sweep(opt, sink, sink);
      ran = ran && code == cli::kOk;
      for (const auto& f : p.files) hashes[rep].push_back(hash_file(fs::path(opt.out_dir) / f));
    }
    o.check(ran && hashes[0] == hashes[1],
            fmt("figure %d: %zu files, results.csv hash %016llx on both runs", p.figure, p.files.size(),
                static_cast<unsigned long long>(hashes[0].front())));
  }
  return o;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      if (cell == "fast_rtx") row.push_back(0);
      else if (cell == "timeout") row.push_back(1);
      else row.push_back(std::stod(cell));
    }
    rows.push_back(row);
  }
  return rows;
}

// Uses the figure-3 BERP trace and event log written by criterion 9.
Outcome criterion_10() {
  Outcome o;
  const fs::path dir = g_work / "fig3_0";
  const auto trace = read_csv(dir / "fig3_cmt-berp.csv");
  const auto events = read_csv(dir / "fig3_cmt-berp.events.csv");
  o.check(!trace.empty() && !events.empty(), fmt("%zu trace rows, %zu logged decreases", trace.size(), events.size()));

  double min_cwnd = 1e300;
  for (const auto& r : trace) min_cwnd = std::min(min_cwnd, r[2]);
  o.check(min_cwnd >= 1500.0, fmt("minimum traced cwnd %.0f bytes", min_cwnd));

  // Trace columns: time,path,cwnd,... ; event columns: time,path,kind,...
  std::map<int, std::pair<double, double>> last;  // path -> (time, cwnd)
  int drops = 0, unexplained = 0;
  for (const auto& r : trace) {
    const int path = static_cast<int>(r[1]);
    auto it = last.find(path);
    if (it != last.end() && r[2] < it->second.second) {
      ++drops;
      const double t0 = it->second.first, t1 = r[0];
      bool logged = false;
      for (const auto& e : events) {
        logged = logged || (static_cast<int>(e[1]) == path && e[0] > t0 - 5e-4 && e[0] <= t1 + 5e-4);
      }
      if (!logged) ++unexplained;
    }
    last[path] = {r[0], r[2]};
  }
  o.check(drops > 0 && unexplained == 0, fmt("%d cwnd drops between samples, %d without a logged event", drops,
                                             unexplained));

  int fast = 0, mismatched = 0;
  for (const auto& e : events) {
    if (e[2] != 0) continue;
    ++fast;
    const double w = e[3], beta = e[5];
    const double expect = std::max((1.0 - beta) * w, 4.0 * 1500.0);
    if (std::abs(e[8] - expect) > 1e-9 * expect) ++mismatched;
  }
  o.check(fast > 0 && mismatched == 0,
          fmt("%d fast_rtx rows, %d with ssthresh off max((1-beta)w, 4 MTU)", fast, mismatched));
  return o;
}

}  // namespace

int main() {
  g_work = fs::temp_directory_path() / ("cmtsim_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1  alpha identities", criterion_1},
      {"2  beta and filter unit checks", criterion_2},
      {"3  detection-rule table", criterion_3},
      {"4  beta=0.5 equals halving (mptcp-coupled, A 5%)", criterion_4},
      {"5  scenario A ordering BERP < CMT-CC", criterion_5},
      {"6  scenario B ordering and B > A", criterion_6},
      {"7  scenario C goodput parity", criterion_7},
      {"8  conservation, reliability, zero-loss time", criterion_8},
      {"9  figure preset determinism", criterion_9},
      {"10 scenario A 10% BERP trace sanity", criterion_10},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s  criterion %s  (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0));
    for (const auto& n : o.notes) std::printf("      %s\n", n.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%zu criteria, %d passed, %d failed\n", criteria.size(), static_cast<int>(criteria.size()) - failed,
              failed);
  fs::remove_all(g_work);
  return failed == 0 ? 0 : 1;
}
