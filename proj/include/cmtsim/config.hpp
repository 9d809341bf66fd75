#pragma once

// Flat dotted-key configuration: `key = value` lines, `#` comments.
// Every key has a default; unknown keys and malformed values are rejected
// with the key and line named.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cmtsim/harness.hpp"

namespace cmtsim {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& what)
      : std::runtime_error(describe(key, line, what)), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string describe(const std::string& key, int line, const std::string& what) {
    std::string s = "config error";
    if (line > 0) s += " at line " + std::to_string(line);
    if (!key.empty()) s += " for key '" + key + "'";
    return s + ": " + what;
  }

  std::string key_;
  int line_;
};

enum class ValueKind { Real, Unsigned, Choice, RealList, SeedList, AlgoList, Text };

struct KeyDef {
  std::string_view key;
  ValueKind kind;
  std::string_view default_value;
  std::string_view choices;  // '|' separated, for Choice
  std::string_view help;
};

// clang-format off
inline const std::vector<KeyDef>& config_schema() {
  static const std::vector<KeyDef> schema = {
      {"engine.master_seed", ValueKind::Unsigned, "1", "", "seed for every random stream of a single run"},
      {"link.prop_delay", ValueKind::Real, "0.010", "", "propagation delay of every link (s)"},
      {"link.queue_capacity", ValueKind::Unsigned, "50", "", "drop-tail queue size (packets)"},
      {"link.data_overhead", ValueKind::Unsigned, "48", "", "IP+SCTP+chunk header bytes per DATA packet"},
      {"link.sack_base", ValueKind::Unsigned, "60", "", "SACK packet size without gap blocks (bytes)"},
      {"link.sack_per_gap", ValueKind::Unsigned, "4", "", "extra SACK bytes per gap block"},
      {"link.access_bps", ValueKind::Real, "10e6", "", "edge link capacity (bit/s)"},
      {"link.bottleneck_bps", ValueKind::Real, "1e6", "", "middle/shared link capacity (bit/s)"},
      {"link.reverse_bps", ValueKind::Real, "10e6", "", "SACK-direction link capacity (bit/s)"},
      {"transport.chunk_bytes", ValueKind::Unsigned, "1452", "", "user bytes per DATA chunk"},
      {"transport.dupthresh", ValueKind::Unsigned, "4", "", "missing reports that trigger fast retransmit"},
      {"transport.rto_initial", ValueKind::Real, "1.0", "", "RTO before the first RTT sample (s)"},
      {"transport.rto_min", ValueKind::Real, "1.0", "", "lower RTO clamp (s)"},
      {"transport.rto_max", ValueKind::Real, "60", "", "upper RTO clamp (s)"},
      {"transport.rtx_policy", ValueKind::Choice, "rtx-ssthresh", "rtx-ssthresh|rtx-same", "retransmission path policy"},
      {"transport.delayed_ack_factor", ValueKind::Unsigned, "2", "", "in-order packets per delayed SACK"},
      {"transport.delayed_ack_timeout", ValueKind::Real, "0.2", "", "delayed SACK timer (s)"},
      {"transport.rwnd", ValueKind::Unsigned, "16777216", "", "advertised receiver window (bytes)"},
      {"cc.algo", ValueKind::Choice, "cmt-berp", "cmt-cc|cmt-berp|mptcp-coupled", "congestion controller for run/trace"},
      {"cc.p", ValueKind::Real, "0.9", "", "bandwidth filter constant"},
      {"cc.pa_scope", ValueKind::Choice, "per-path", "per-path|global", "partial_bytes_acked accumulator scope"},
      {"scenario.template", ValueKind::Choice, "A", "A|B|C", "topology template"},
      {"scenario.loss", ValueKind::Real, "0.10", "", "loss of the middle/shared link for run/trace (A, B)"},
      {"scenario.load", ValueKind::Real, "0.9", "", "CBR load as a fraction of bottleneck capacity (C)"},
      {"scenario.edge_loss", ValueKind::Real, "0.01", "", "loss of edge links in A and B"},
      {"scenario_c.edge_loss", ValueKind::Real, "0.0", "", "loss of edge links in C"},
      {"scenario.grid", ValueKind::RealList, "", "", "sweep values; empty selects 0.01..0.10 (A, B) or 0.1..1.0 (C)"},
      {"scenario.seeds", ValueKind::SeedList, "1-10", "", "sweep seeds, e.g. 1-10 or 3,5,7"},
      {"scenario.algos", ValueKind::AlgoList, "cmt-cc,cmt-berp", "", "controllers compared by sweep and figure traces"},
      {"scenario.file_size", ValueKind::Unsigned, "60000000", "", "bytes transferred per run"},
      {"scenario.cbr_packet_bytes", ValueKind::Unsigned, "512", "", "CBR packet size (C)"},
      {"scenario.time_cap", ValueKind::Real, "10000", "", "simulated-time cap per run (s)"},
      {"output.results_path", ValueKind::Text, "results.csv", "", "results CSV"},
      {"output.summary_path", ValueKind::Text, "summary.csv", "", "sweep summary CSV"},
      {"output.trace_path", ValueKind::Text, "", "", "cwnd trace CSV; run writes one only when set"},
      {"output.trace_interval", ValueKind::Real, "0.1", "", "trace sampling interval (s)"},
  };
  return schema;
}
// clang-format on

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

inline bool parse_unsigned(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  // Accept integral values written in scientific notation, e.g. 60e6.
  if (s.find_first_of("eE.") != std::string::npos) {
    double d = 0;
    if (!parse_real(s, d) || d < 0 || d != std::floor(d) || d > 1.8e19) return false;
    out = static_cast<std::uint64_t>(d);
    return true;
  }
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

}  // namespace detail

class Config {
 public:
  Config() {
    for (const auto& def : config_schema()) values_[std::string(def.key)] = std::string(def.default_value);
  }

  static const KeyDef* find_key(std::string_view key) {
    const auto& schema = config_schema();
    auto it = std::find_if(schema.begin(), schema.end(), [&](const KeyDef& d) { return d.key == key; });
    return it == schema.end() ? nullptr : &*it;
  }

  /// Sets one key after validating its value. `line` is 0 for overrides.
  void set(const std::string& key, const std::string& value, int line = 0) {
    const KeyDef* def = find_key(key);
    if (!def) throw ConfigError(key, line, "unknown key");
    validate(*def, value, line);
    values_[key] = value;
  }

  /// Parses `key = value` lines.
  void parse(std::istream& in) {
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string text = detail::trim(std::string_view(raw).substr(0, hash));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw ConfigError("", line, "expected 'key = value'");
      set(detail::trim(std::string_view(text).substr(0, eq)), detail::trim(std::string_view(text).substr(eq + 1)),
          line);
    }
  }

  void parse_string(const std::string& text) {
    std::istringstream in(text);
    parse(in);
  }

  /// Applies a `key=value` override.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, 0, "override must be key=value");
    set(detail::trim(std::string_view(assignment).substr(0, eq)),
        detail::trim(std::string_view(assignment).substr(eq + 1)));
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, 0, "unknown key");
    return it->second;
  }

  double real(const std::string& key) const {
    double v = 0;
    detail::parse_real(get(key), v);
    return v;
  }

  std::uint64_t unsigned_value(const std::string& key) const {
    std::uint64_t v = 0;
    detail::parse_unsigned(get(key), v);
    return v;
  }

  std::vector<double> real_list(const std::string& key) const {
    std::vector<double> out;
    if (get(key).empty()) return out;
    for (const auto& item : detail::split(get(key), ',')) {
      double v = 0;
      detail::parse_real(item, v);
      out.push_back(v);
    }
    return out;
  }

  std::vector<std::uint64_t> seed_list(const std::string& key) const { return expand_seeds(get(key)); }

  std::vector<CcAlgo> algo_list(const std::string& key) const {
    std::vector<CcAlgo> out;
    for (const auto& item : detail::split(get(key), ',')) out.push_back(*parse_cc_algo(item));
    return out;
  }

  ScenarioTemplate scenario_template() const { return *parse_template(get("scenario.template")); }

  /// Configuration of a single simulation instance (algo and seed from
  /// cc.algo and engine.master_seed).
  SimConfig sim_config() const {
    SimConfig c;
    auto& sp = c.scenario;
    sp.access_bps = real("link.access_bps");
    sp.bottleneck_bps = real("link.bottleneck_bps");
    sp.reverse_bps = real("link.reverse_bps");
    sp.edge_loss = real("scenario.edge_loss");
    sp.scenario_c_edge_loss = real("scenario_c.edge_loss");
    sp.prop_delay = real("link.prop_delay");
    sp.queue_capacity = static_cast<std::uint32_t>(unsigned_value("link.queue_capacity"));
    sp.cbr_packet_bytes = static_cast<std::uint32_t>(unsigned_value("scenario.cbr_packet_bytes"));
    sp.file_size = unsigned_value("scenario.file_size");
    sp.time_cap = real("scenario.time_cap");

    auto& tp = c.transport;
    tp.chunk_bytes = static_cast<std::uint32_t>(unsigned_value("transport.chunk_bytes"));
    tp.data_overhead = static_cast<std::uint32_t>(unsigned_value("link.data_overhead"));
    tp.sack_base_bytes = static_cast<std::uint32_t>(unsigned_value("link.sack_base"));
    tp.sack_gap_bytes = static_cast<std::uint32_t>(unsigned_value("link.sack_per_gap"));
    tp.dupthresh = static_cast<std::uint32_t>(unsigned_value("transport.dupthresh"));
    tp.rto_initial = real("transport.rto_initial");
    tp.rto_min = real("transport.rto_min");
    tp.rto_max = real("transport.rto_max");
    tp.rtx_policy = *parse_rtx_policy(get("transport.rtx_policy"));
    tp.delayed_ack_factor = static_cast<std::uint32_t>(unsigned_value("transport.delayed_ack_factor"));
    tp.delayed_ack_timeout = real("transport.delayed_ack_timeout");
    tp.rwnd = unsigned_value("transport.rwnd");

    c.cc.filter_p = real("cc.p");
    c.cc.pa_scope = get("cc.pa_scope") == "global" ? PaScope::Global : PaScope::PerPath;
    const double mtu = tp.chunk_bytes + tp.data_overhead;
    c.cc.mtu = mtu;
    c.cc.initial_cwnd = 2.0 * mtu;
    c.cc.initial_ssthresh = static_cast<double>(tp.rwnd);
    c.cc.srtt_placeholder = tp.rto_initial;

    c.algo = *parse_cc_algo(get("cc.algo"));
    c.seed = unsigned_value("engine.master_seed");
    c.trace_interval = real("output.trace_interval");
    return c;
  }

  /// Grid value for run/trace: scenario.load for C, scenario.loss otherwise.
  double point_value() const {
    return scenario_template() == ScenarioTemplate::C ? real("scenario.load") : real("scenario.loss");
  }

  ScenarioSpec scenario_spec() const {
    ScenarioSpec spec;
    spec.scenario = scenario_template();
    spec.grid = real_list("scenario.grid");
    if (spec.grid.empty()) spec.grid = default_grid(spec.scenario);
    spec.seeds = seed_list("scenario.seeds");
    spec.algos = algo_list("scenario.algos");
    spec.base = sim_config();
    spec.base.trace_interval = 0.0;
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("scenario.grid", 0, e.what());
    }
    return spec;
  }

  /// Expands "1-10" / "3,5,7" / "1-3,9".
  static std::vector<std::uint64_t> expand_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    if (detail::trim(text).empty()) return out;
    for (const auto& item : detail::split(text, ',')) {
      const auto dash = item.find('-');
      std::uint64_t lo = 0;
      std::uint64_t hi = 0;
      if (dash == std::string::npos) {
        if (!detail::parse_unsigned(item, lo)) throw std::invalid_argument("bad seed '" + item + "'");
        hi = lo;
      } else if (!detail::parse_unsigned(detail::trim(item.substr(0, dash)), lo) ||
                 !detail::parse_unsigned(detail::trim(item.substr(dash + 1)), hi) || hi < lo) {
        throw std::invalid_argument("bad seed range '" + item + "'");
      }
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    }
    return out;
  }

 private:
  static void validate(const KeyDef& def, const std::string& value, int line) {
    const std::string key(def.key);
    auto fail = [&](const std::string& why) { throw ConfigError(key, line, why + " (got '" + value + "')"); };
    switch (def.kind) {
      case ValueKind::Real: {
        double v = 0;
        if (!detail::parse_real(value, v)) fail("expected a real number");
        if (v < 0) fail("must be non-negative");
        if (key.find("loss") != std::string::npos && v > 1.0) fail("loss must lie in [0,1]");
        if (key == "scenario.load" && !(v > 0.0 && v <= 1.0)) fail("load must lie in (0,1]");
        if (key == "cc.p" && !(v < 1.0)) fail("filter constant must lie in [0,1)");
        if ((key.ends_with("_bps") || key == "scenario.time_cap" || key == "transport.rto_min") && !(v > 0))
          fail("must be positive");
        break;
      }
      case ValueKind::Unsigned: {
        std::uint64_t v = 0;
        if (!detail::parse_unsigned(value, v)) fail("expected a non-negative integer");
        if ((key == "link.queue_capacity" || key == "transport.chunk_bytes" || key == "transport.dupthresh" ||
             key == "transport.delayed_ack_factor" || key == "scenario.file_size" ||
             key == "scenario.cbr_packet_bytes") &&
            v == 0)
          fail("must be at least 1");
        break;
      }
      case ValueKind::Choice: {
        const auto options = detail::split(def.choices, '|');
        if (std::find(options.begin(), options.end(), value) == options.end()) {
          fail("expected one of " + std::string(def.choices));
        }
        break;
      }
      case ValueKind::RealList: {
        if (value.empty()) break;
        for (const auto& item : detail::split(value, ',')) {
          double v = 0;
          if (!detail::parse_real(item, v) || v < 0 || v > 1) fail("expected comma-separated values in [0,1]");
        }
        break;
      }
      case ValueKind::SeedList: {
        try {
          if (expand_seeds(value).empty()) fail("seed list is empty");
        } catch (const std::invalid_argument& e) {
          fail(e.what());
        }
        break;
      }
      case ValueKind::AlgoList: {
        for (const auto& item : detail::split(value, ',')) {
          if (!parse_cc_algo(item)) fail("unknown controller '" + item + "'");
        }
        break;
      }
      case ValueKind::Text: break;
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace cmtsim
