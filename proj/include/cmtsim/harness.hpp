#pragma once

// Scenario construction, traffic applications, metric collection and
// parameter sweeps.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "cmtsim/congestion.hpp"
#include "cmtsim/engine.hpp"
#include "cmtsim/netsim.hpp"
#include "cmtsim/transport.hpp"

namespace cmtsim {

enum class ScenarioTemplate { A, B, C };

inline char to_char(ScenarioTemplate t) {
  switch (t) {
    case ScenarioTemplate::A: return 'A';
    case ScenarioTemplate::B: return 'B';
    case ScenarioTemplate::C: return 'C';
  }
  return '?';
}

inline std::optional<ScenarioTemplate> parse_template(std::string_view s) {
  if (s == "A" || s == "a") return ScenarioTemplate::A;
  if (s == "B" || s == "b") return ScenarioTemplate::B;
  if (s == "C" || s == "c") return ScenarioTemplate::C;
  return std::nullopt;
}

/// Physical parameters shared by the scenario builders.
struct ScenarioParams {
  double access_bps{10e6};
  double bottleneck_bps{1e6};
  double reverse_bps{10e6};
  double edge_loss{0.01};
  double scenario_c_edge_loss{0.0};
  double prop_delay{0.010};
  std::uint32_t queue_capacity{50};
  std::uint32_t cbr_packet_bytes{512};
  std::uint64_t file_size{60'000'000};
  double time_cap{1e4};
};

struct CbrSpec {
  std::uint32_t id{0};
  std::size_t link{0};  // index into Topology::links
  double rate_bps{0.0};
  std::uint32_t packet_bytes{512};

  double interval() const { return packet_bytes * 8.0 / rate_bps; }
};

/// Plain description of a scenario network; Simulation instantiates it.
struct Topology {
  ScenarioTemplate scenario{ScenarioTemplate::A};
  double variable{0.0};
  std::vector<LinkParams> links;
  std::vector<std::vector<std::size_t>> data_paths;  // forward hops per path
  std::vector<std::vector<std::size_t>> sack_paths;  // reverse hops per path
  std::vector<CbrSpec> cbr;
};

namespace detail {

inline LinkParams make_link(std::string from, std::string to, double bps, double loss,
                            const ScenarioParams& sp) {
  return LinkParams{std::move(from), std::move(to), bps, sp.prop_delay, loss, sp.queue_capacity};
}

/// Two disjoint three-hop paths S -> N1 -> N3 -> D and S -> N2 -> N4 -> D.
inline Topology disjoint_paths(double edge_loss, double mid_loss, const ScenarioParams& sp) {
  Topology t;
  auto& L = t.links;
  L.push_back(make_link("S.if1", "N1", sp.access_bps, edge_loss, sp));      // 0
  L.push_back(make_link("N1", "N3", sp.bottleneck_bps, mid_loss, sp));      // 1
  L.push_back(make_link("N3", "D.if1", sp.access_bps, edge_loss, sp));      // 2
  L.push_back(make_link("S.if2", "N2", sp.access_bps, edge_loss, sp));      // 3
  L.push_back(make_link("N2", "N4", sp.bottleneck_bps, mid_loss, sp));      // 4
  L.push_back(make_link("N4", "D.if2", sp.access_bps, edge_loss, sp));      // 5
  L.push_back(make_link("D.if1", "N3", sp.reverse_bps, 0.0, sp));           // 6
  L.push_back(make_link("N3", "N1", sp.reverse_bps, 0.0, sp));              // 7
  L.push_back(make_link("N1", "S.if1", sp.reverse_bps, 0.0, sp));           // 8
  L.push_back(make_link("D.if2", "N4", sp.reverse_bps, 0.0, sp));           // 9
  L.push_back(make_link("N4", "N2", sp.reverse_bps, 0.0, sp));              // 10
  L.push_back(make_link("N2", "S.if2", sp.reverse_bps, 0.0, sp));           // 11
  t.data_paths = {{0, 1, 2}, {3, 4, 5}};
  t.sack_paths = {{6, 7, 8}, {9, 10, 11}};
  return t;
}

}  // namespace detail

/// Disjoint paths with random loss: 10 Mbps edges at `edge_loss`, 1 Mbps
/// middle links at `loss_mid`.
inline Topology describe_scenario_a(double loss_mid, const ScenarioParams& sp = {}) {
  if (!(loss_mid >= 0.0 && loss_mid <= 1.0)) throw std::invalid_argument("loss_mid must lie in [0,1]");
  Topology t = detail::disjoint_paths(sp.edge_loss, loss_mid, sp);
  t.scenario = ScenarioTemplate::A;
  t.variable = loss_mid;
  return t;
}

/// Both paths cross one shared 1 Mbps N1 -> N2 link with loss `loss_shared`.
inline Topology describe_scenario_b(double loss_shared, const ScenarioParams& sp = {}) {
  if (!(loss_shared >= 0.0 && loss_shared <= 1.0)) throw std::invalid_argument("loss_shared must lie in [0,1]");
  using detail::make_link;
  Topology t;
  t.scenario = ScenarioTemplate::B;
  t.variable = loss_shared;
  auto& L = t.links;
  L.push_back(make_link("S.if1", "N1", sp.access_bps, sp.edge_loss, sp));     // 0
  L.push_back(make_link("S.if2", "N1", sp.access_bps, sp.edge_loss, sp));     // 1
  L.push_back(make_link("N1", "N2", sp.bottleneck_bps, loss_shared, sp));     // 2 shared
  L.push_back(make_link("N2", "N3", sp.access_bps, 0.0, sp));                 // 3
  L.push_back(make_link("N3", "D.if1", sp.access_bps, sp.edge_loss, sp));     // 4
  L.push_back(make_link("N2", "N4", sp.access_bps, 0.0, sp));                 // 5
  L.push_back(make_link("N4", "D.if2", sp.access_bps, sp.edge_loss, sp));     // 6
  L.push_back(make_link("D.if1", "N3", sp.reverse_bps, 0.0, sp));             // 7
  L.push_back(make_link("N3", "N2", sp.reverse_bps, 0.0, sp));                // 8
  L.push_back(make_link("D.if2", "N4", sp.reverse_bps, 0.0, sp));             // 9
  L.push_back(make_link("N4", "N2", sp.reverse_bps, 0.0, sp));                // 10
  L.push_back(make_link("N2", "N1", sp.reverse_bps, 0.0, sp));                // 11 shared
  L.push_back(make_link("N1", "S.if1", sp.reverse_bps, 0.0, sp));             // 12
  L.push_back(make_link("N1", "S.if2", sp.reverse_bps, 0.0, sp));             // 13
  t.data_paths = {{0, 2, 3, 4}, {1, 2, 5, 6}};
  t.sack_paths = {{7, 8, 11, 12}, {9, 10, 11, 13}};
  return t;
}

/// Scenario A topology without random loss on the middle links, with CBR
/// cross traffic at `load` x bottleneck capacity on N1 -> N3 and N2 -> N4.
inline Topology describe_scenario_c(double load, const ScenarioParams& sp = {}) {
  if (!(load > 0.0 && load <= 1.0)) throw std::invalid_argument("load must lie in (0,1]");
  Topology t = detail::disjoint_paths(sp.scenario_c_edge_loss, 0.0, sp);
  t.scenario = ScenarioTemplate::C;
  t.variable = load;
  t.cbr.push_back(CbrSpec{1, 1, load * sp.bottleneck_bps, sp.cbr_packet_bytes});
  t.cbr.push_back(CbrSpec{2, 4, load * sp.bottleneck_bps, sp.cbr_packet_bytes});
  return t;
}

inline Topology describe_scenario(ScenarioTemplate t, double variable, const ScenarioParams& sp) {
  switch (t) {
    case ScenarioTemplate::A: return describe_scenario_a(variable, sp);
    case ScenarioTemplate::B: return describe_scenario_b(variable, sp);
    case ScenarioTemplate::C: return describe_scenario_c(variable, sp);
  }
  throw std::invalid_argument("unknown scenario template");
}

struct SimConfig {
  ScenarioParams scenario;
  CcAlgo algo{CcAlgo::CmtBerp};
  CcParams cc;
  TransportParams transport;
  std::uint64_t seed{1};
  double trace_interval{0.0};  // 0 disables periodic cwnd sampling
};

struct CwndTraceSample {
  double time;
  std::size_t path;
  double cwnd;
  double ssthresh;
  double srtt;
  double bwe;
  double alpha;
  double beta;
};

struct MetricsRecord {
  char scenario{'A'};
  std::string algo;
  std::uint64_t seed{0};
  double variable{0.0};
  double transfer_time{0.0};
  double goodput_bps{0.0};
  std::uint64_t file_size{0};
  std::uint64_t delivered_bytes{0};
  std::vector<std::uint64_t> fast_rtx;  // per path
  std::vector<std::uint64_t> timeouts;  // per path
  std::uint64_t err_drops{0};
  std::uint64_t queue_drops{0};
  std::uint64_t retransmissions{0};
  bool timed_out{false};
  bool in_order_exactly_once{false};
  bool counters_conserved{false};
  std::vector<LinkCounters> link_counters;

  std::uint64_t total_fast_rtx() const { return std::accumulate(fast_rtx.begin(), fast_rtx.end(), std::uint64_t{0}); }
  std::uint64_t total_timeouts() const { return std::accumulate(timeouts.begin(), timeouts.end(), std::uint64_t{0}); }
};

/// Constant-bit-rate UDP source injecting into one link.
class CbrSource {
 public:
  CbrSource(EventQueue& events, Network& net, RouteId route, CbrSpec spec, std::uint64_t seed)
      : events_(&events), net_(&net), route_(route), spec_(spec), rng_(seed, "app.cbr." + std::to_string(spec.id)) {
    if (!(spec.rate_bps > 0.0)) throw std::invalid_argument("CBR rate must be > 0");
  }

  void start() {
    const double jitter = rng_.draw_uniform() * spec_.interval();
    first_ = events_->now() + jitter;
    events_->schedule(first_, [this] { emit(); });
  }

  std::uint64_t sent() const { return sent_; }
  double first_send_time() const { return first_; }

 private:
  void emit() {
    Packet p;
    p.kind = PacketKind::Udp;
    p.size = spec_.packet_bytes;
    p.flow_id = 100 + spec_.id;
    net_->send(route_, std::move(p));
    ++sent_;
    // Absolute schedule avoids drift from repeated addition.
    events_->schedule(first_ + static_cast<double>(sent_) * spec_.interval(), [this] { emit(); });
  }

  EventQueue* events_;
  Network* net_;
  RouteId route_;
  CbrSpec spec_;
  RngStream rng_;
  double first_{0.0};
  std::uint64_t sent_{0};
};

/// One independent simulation instance: topology, endpoints, controller,
/// applications and recorders.
class Simulation {
 public:
  Simulation(Topology topology, SimConfig config)
      : topo_(std::move(topology)), cfg_(std::move(config)), net_(events_, cfg_.seed) {
    for (const auto& lp : topo_.links) net_.add_link(lp);
    const std::size_t paths = topo_.data_paths.size();

    cfg_.cc.mtu = cfg_.transport.chunk_bytes + cfg_.transport.data_overhead;
    cfg_.cc.srtt_placeholder = cfg_.transport.rto_initial;
    cc_ = make_controller(cfg_.algo, paths, cfg_.cc);

    std::vector<RouteId> data_routes;
    std::vector<RouteId> sack_routes;
    for (std::size_t i = 0; i < paths; ++i) {
      data_routes.push_back(net_.add_route(Route{0, static_cast<std::uint32_t>(i), as_link_ids(topo_.data_paths[i])},
                                           [this](Packet&& p) { receiver_->on_data_arrival(p.data, p.path_id); }));
    }
    for (std::size_t i = 0; i < paths; ++i) {
      sack_routes.push_back(net_.add_route(Route{0, static_cast<std::uint32_t>(i), as_link_ids(topo_.sack_paths[i])},
                                           [this](Packet&& p) { sender_->on_sack(p.sack, p.path_id); }));
    }
    sender_ = std::make_unique<Sender>(events_, net_, data_routes, *cc_, cfg_.transport, cfg_.scenario.file_size);
    receiver_ = std::make_unique<Receiver>(events_, net_, sack_routes, cfg_.transport);

    receiver_->set_delivery_callback([this](Tsn tsn, std::uint32_t) {
      if (tsn != last_delivered_ + 1) in_order_ = false;
      last_delivered_ = tsn;
      if (receiver_->delivered_bytes() >= cfg_.scenario.file_size && !completion_) {
        completion_ = events_.now();
        events_.stop();
      }
    });
    sender_->set_congestion_event_callback([this](const CongestionEvent& e) { events_log_.push_back(e); });

    for (const auto& spec : topo_.cbr) {
      const RouteId r = net_.add_route(Route{100 + spec.id, 0, {static_cast<LinkId>(spec.link)}},
                                       [this](Packet&&) { ++cbr_received_; });
      cbr_.push_back(std::make_unique<CbrSource>(events_, net_, r, spec, cfg_.seed));
    }
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs to completion of the file transfer or to the time cap.
  MetricsRecord run() {
    for (auto& c : cbr_) c->start();
    if (cfg_.trace_interval > 0.0) schedule_trace_sample(0);
    sender_->start();
    events_.run_until(cfg_.scenario.time_cap);
    return collect();
  }

  EventQueue& events() { return events_; }
  Network& network() { return net_; }
  Sender& sender() { return *sender_; }
  Receiver& receiver() { return *receiver_; }
  const CongestionController& controller() const { return *cc_; }
  const Topology& topology() const { return topo_; }
  const SimConfig& config() const { return cfg_; }
  const std::vector<CongestionEvent>& congestion_events() const { return events_log_; }
  const std::vector<CwndTraceSample>& trace() const { return trace_; }
  const std::vector<std::unique_ptr<CbrSource>>& cbr_sources() const { return cbr_; }
  std::uint64_t cbr_received() const { return cbr_received_; }
  std::optional<SimTime> completion_time() const { return completion_; }

 private:
  static std::vector<LinkId> as_link_ids(const std::vector<std::size_t>& hops) {
    return {hops.begin(), hops.end()};
  }

  void schedule_trace_sample(std::uint64_t k) {
    events_.schedule(static_cast<double>(k) * cfg_.trace_interval, [this, k] {
      const double t = static_cast<double>(k) * cfg_.trace_interval;
      for (std::size_t i = 0; i < cc_->path_count(); ++i) {
        const auto& ps = sender_->path(i);
        trace_.push_back(CwndTraceSample{t, i, cc_->cwnd(i), cc_->ssthresh(i), ps.has_rtt ? ps.srtt : 0.0,
                                         cc_->bwe(i).b_hat, cc_->alpha(), cc_->beta(i)});
      }
      schedule_trace_sample(k + 1);
    });
  }

  MetricsRecord collect() const {
    MetricsRecord m;
    m.scenario = to_char(topo_.scenario);
    m.algo = std::string(to_string(cfg_.algo));
    m.seed = cfg_.seed;
    m.variable = topo_.variable;
    m.file_size = cfg_.scenario.file_size;
    m.delivered_bytes = receiver_->delivered_bytes();
    m.timed_out = !completion_.has_value();
    m.transfer_time = completion_ ? *completion_ : cfg_.scenario.time_cap;
    m.goodput_bps = static_cast<double>(m.delivered_bytes) * 8.0 / m.transfer_time;
    for (std::size_t i = 0; i < sender_->path_count(); ++i) {
      m.fast_rtx.push_back(sender_->path(i).fast_rtx_count);
      m.timeouts.push_back(sender_->path(i).timeout_count);
    }
    m.retransmissions = sender_->retransmissions();
    m.counters_conserved = true;
    for (std::size_t l = 0; l < net_.link_count(); ++l) {
      const auto& c = net_.link(static_cast<LinkId>(l)).counters();
      m.err_drops += c.error_dropped;
      m.queue_drops += c.queue_dropped;
      m.counters_conserved = m.counters_conserved && c.conserved();
      m.link_counters.push_back(c);
    }
    m.in_order_exactly_once = in_order_ && (m.timed_out || (receiver_->delivered_digest() == sender_->sent_digest() &&
                                                            m.delivered_bytes == m.file_size));
    return m;
  }

  Topology topo_;
  SimConfig cfg_;
  EventQueue events_;
  Network net_;
  std::unique_ptr<CongestionController> cc_;
  std::unique_ptr<Sender> sender_;
  std::unique_ptr<Receiver> receiver_;
  std::vector<std::unique_ptr<CbrSource>> cbr_;
  std::vector<CongestionEvent> events_log_;
  std::vector<CwndTraceSample> trace_;
  std::optional<SimTime> completion_;
  Tsn last_delivered_{0};
  bool in_order_{true};
  std::uint64_t cbr_received_{0};
};

inline std::unique_ptr<Simulation> build_scenario_a(double loss_mid, SimConfig cfg) {
  return std::make_unique<Simulation>(describe_scenario_a(loss_mid, cfg.scenario), std::move(cfg));
}
inline std::unique_ptr<Simulation> build_scenario_b(double loss_shared, SimConfig cfg) {
  return std::make_unique<Simulation>(describe_scenario_b(loss_shared, cfg.scenario), std::move(cfg));
}
inline std::unique_ptr<Simulation> build_scenario_c(double load, SimConfig cfg) {
  return std::make_unique<Simulation>(describe_scenario_c(load, cfg.scenario), std::move(cfg));
}

/// Runs one (scenario point, controller, seed) on a fresh instance.
inline MetricsRecord run_experiment(ScenarioTemplate scenario, double variable, CcAlgo algo, std::uint64_t seed,
                                    SimConfig base = {}) {
  base.algo = algo;
  base.seed = seed;
  Simulation sim(describe_scenario(scenario, variable, base.scenario), base);
  return sim.run();
}

// ---------------------------------------------------------------------------
// Sweeps

struct ScenarioSpec {
  ScenarioTemplate scenario{ScenarioTemplate::A};
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;
  std::vector<CcAlgo> algos{CcAlgo::CmtCc, CcAlgo::CmtBerp};
  SimConfig base;

  void validate() const {
    if (grid.empty()) throw std::invalid_argument("scenario grid is empty");
    if (seeds.empty()) throw std::invalid_argument("seed list is empty");
    if (algos.empty()) throw std::invalid_argument("algorithm list is empty");
    for (double v : grid) {
      if (scenario == ScenarioTemplate::C) {
        if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("load values must lie in (0,1]");
      } else if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("loss values must lie in [0,1]");
      }
    }
  }
};

inline std::vector<double> default_grid(ScenarioTemplate t) {
  std::vector<double> g;
  if (t == ScenarioTemplate::C) {
    for (int i = 1; i <= 10; ++i) g.push_back(i / 10.0);
  } else {
    for (int i = 1; i <= 10; ++i) g.push_back(i / 100.0);
  }
  return g;
}

inline bool row_less(const MetricsRecord& a, const MetricsRecord& b) {
  return std::tie(a.scenario, a.algo, a.variable, a.seed) < std::tie(b.scenario, b.algo, b.variable, b.seed);
}

/// Runs every (grid value, algo, seed) point, `jobs` instances at a time.
/// Rows come back sorted, so the result does not depend on `jobs`.
inline std::vector<MetricsRecord> sweep(const ScenarioSpec& spec, unsigned jobs = 1) {
  spec.validate();
  struct Point {
    double variable;
    CcAlgo algo;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  for (double v : spec.grid) {
    for (CcAlgo a : spec.algos) {
      for (std::uint64_t s : spec.seeds) points.push_back({v, a, s});
    }
  }
  std::vector<MetricsRecord> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        rows[i] = run_experiment(spec.scenario, points[i].variable, points[i].algo, points[i].seed, spec.base);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

struct SummaryRow {
  char scenario;
  std::string algo;
  double variable;
  std::size_t runs;
  std::size_t completed;
  double mean_transfer_time;
  double stdev_transfer_time;
  double mean_goodput;
  double stdev_goodput;
};

inline std::pair<double, double> mean_stdev(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// Mean and sample standard deviation over seeds for each (scenario, algo,
/// variable). Expects rows sorted by row_less.
inline std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& rows) {
  std::vector<SummaryRow> out;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<double> times;
    std::vector<double> goodputs;
    std::size_t completed = 0;
    while (j < rows.size() && rows[j].scenario == rows[i].scenario && rows[j].algo == rows[i].algo &&
           rows[j].variable == rows[i].variable) {
      times.push_back(rows[j].transfer_time);
      goodputs.push_back(rows[j].goodput_bps);
      if (!rows[j].timed_out) ++completed;
      ++j;
    }
    const auto [mt, st] = mean_stdev(times);
    const auto [mg, sg] = mean_stdev(goodputs);
    out.push_back(SummaryRow{rows[i].scenario, rows[i].algo, rows[i].variable, j - i, completed, mt, st, mg, sg});
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV emission. Fixed formats keep files byte-identical across runs.

inline constexpr const char* kResultsHeader =
    "scenario,algo,seed,variable,transfer_time_s,goodput_bps,fast_rtx,timeouts,err_drops,queue_drops,timed_out";
inline constexpr const char* kSummaryHeader =
    "scenario,algo,variable,runs,completed,mean_transfer_time_s,stdev_transfer_time_s,mean_goodput_bps,stdev_goodput_bps";
inline constexpr const char* kTraceHeader = "time,path,cwnd,ssthresh,srtt,bwe,alpha,beta";
inline constexpr const char* kEventsHeader =
    "time,path,event,cwnd_before,ssthresh_before,beta,alpha,cwnd_after,ssthresh_after";

inline std::string format_row(const char* fmt, auto... args) {
  char buf[512];
  const int n = std::snprintf(buf, sizeof buf, fmt, args...);
  return std::string(buf, static_cast<std::size_t>(std::max(0, n)));
}

inline void write_results_csv(std::ostream& out, const std::vector<MetricsRecord>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << format_row("%c,%s,%llu,%.4f,%.6f,%.3f,%llu,%llu,%llu,%llu,%d\n", r.scenario, r.algo.c_str(),
                      static_cast<unsigned long long>(r.seed), r.variable, r.transfer_time, r.goodput_bps,
                      static_cast<unsigned long long>(r.total_fast_rtx()),
                      static_cast<unsigned long long>(r.total_timeouts()),
                      static_cast<unsigned long long>(r.err_drops), static_cast<unsigned long long>(r.queue_drops),
                      r.timed_out ? 1 : 0);
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    out << format_row("%c,%s,%.4f,%zu,%zu,%.6f,%.6f,%.3f,%.3f\n", s.scenario, s.algo.c_str(), s.variable, s.runs,
                      s.completed, s.mean_transfer_time, s.stdev_transfer_time, s.mean_goodput, s.stdev_goodput);
  }
}

/// Path numbers are 1-based in emitted files.
inline void write_trace_csv(std::ostream& out, const std::vector<CwndTraceSample>& samples) {
  out << kTraceHeader << '\n';
  for (const auto& s : samples) {
    out << format_row("%.3f,%zu,%.3f,%.3f,%.6f,%.3f,%.9f,%.9f\n", s.time, s.path + 1, s.cwnd, s.ssthresh, s.srtt,
                      s.bwe, s.alpha, s.beta);
  }
}

inline void write_events_csv(std::ostream& out, const std::vector<CongestionEvent>& events) {
  out << kEventsHeader << '\n';
  for (const auto& e : events) {
    out << format_row("%.6f,%zu,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.time, e.path + 1,
                      e.kind == CongestionEventKind::FastRtx ? "fast_rtx" : "timeout", e.cwnd_before,
                      e.ssthresh_before, e.beta, e.alpha, e.cwnd_after, e.ssthresh_after);
  }
}

}  // namespace cmtsim
