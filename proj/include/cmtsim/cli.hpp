#pragma once

// run | sweep | trace commands. main() in tools/ only parses arguments.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cmtsim/config.hpp"
#include "cmtsim/harness.hpp"

namespace cmtsim::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSimTimeout = 3, kIoError = 4 };

struct Options {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<int> figure;
  unsigned jobs{1};
  std::string out_dir{"."};
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FigurePreset {
  int number;
  bool is_trace;  // 3/6/9 are trace presets, 2/5/8 sweeps
  std::vector<std::string> settings;
};

inline std::optional<FigurePreset> figure_preset(int n) {
  switch (n) {
    case 2: return FigurePreset{2, false, {"scenario.template=A", "scenario.grid=", "scenario.algos=cmt-cc,cmt-berp"}};
    case 5: return FigurePreset{5, false, {"scenario.template=B", "scenario.grid=", "scenario.algos=cmt-cc,cmt-berp"}};
    case 8: return FigurePreset{8, false, {"scenario.template=C", "scenario.grid=", "scenario.algos=cmt-cc,cmt-berp"}};
    case 3: return FigurePreset{3, true, {"scenario.template=A", "scenario.loss=0.10", "scenario.algos=cmt-cc,cmt-berp"}};
    case 6: return FigurePreset{6, true, {"scenario.template=B", "scenario.loss=0.10", "scenario.algos=cmt-cc,cmt-berp"}};
    case 9: return FigurePreset{9, true, {"scenario.template=C", "scenario.load=0.9", "scenario.algos=cmt-cc,cmt-berp"}};
    default: return std::nullopt;
  }
}

/// Preset settings first, then the config file, then --set overrides.
inline Config load_config(const Options& opt, std::optional<FigurePreset> preset = std::nullopt) {
  Config cfg;
  if (preset) {
    for (const auto& s : preset->settings) cfg.apply_override(s);
  }
  if (opt.config_path) {
    std::ifstream in(*opt.config_path);
    if (!in) throw IoError("cannot read config file '" + *opt.config_path + "'");
    cfg.parse(in);
  }
  for (const auto& s : opt.overrides) cfg.apply_override(s);
  return cfg;
}

inline std::filesystem::path output_path(const Options& opt, const std::string& name) {
  std::filesystem::path p(name);
  if (p.is_absolute()) return p;
  return std::filesystem::path(opt.out_dir) / p;
}

/// Opens a file for writing with LF line endings, creating parent directories.
inline std::ofstream open_output(const std::filesystem::path& p) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

inline std::string with_suffix(const std::filesystem::path& p, const std::string& suffix, const std::string& ext) {
  auto stem = p;
  stem.replace_extension();
  return stem.string() + suffix + ext;
}

inline void write_gnuplot(const std::filesystem::path& script, const std::vector<std::filesystem::path>& traces,
                          const std::vector<std::string>& labels) {
  auto out = open_output(script);
  out << "# cwnd evolution per path; run with: gnuplot -p " << script.filename().string() << "\n"
      << "set datafile separator ','\n"
      << "set xlabel 'time (s)'\n"
      << "set ylabel 'cwnd (bytes)'\n"
      << "set key outside\n"
      << "plot \\\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const std::string f = traces[i].filename().string();
    for (int path = 1; path <= 2; ++path) {
      out << "  '" << f << "' every ::1 using 1:($2==" << path << " ? $3 : 1/0) with lines title '" << labels[i]
          << " path " << path << "'";
      out << ((i + 1 == traces.size() && path == 2) ? "\n" : ", \\\n");
    }
  }
  finish(out, script);
}

/// Runs one traced point and writes trace, events and returns the record.
inline MetricsRecord traced_run(const Config& cfg, CcAlgo algo, const std::filesystem::path& trace_file) {
  SimConfig sc = cfg.sim_config();
  sc.algo = algo;
  Simulation sim(describe_scenario(cfg.scenario_template(), cfg.point_value(), sc.scenario), sc);
  MetricsRecord m = sim.run();
  auto out = open_output(trace_file);
  write_trace_csv(out, sim.trace());
  finish(out, trace_file);
  const std::filesystem::path events_file = with_suffix(trace_file, ".events", ".csv");
  auto ev = open_output(events_file);
  write_events_csv(ev, sim.congestion_events());
  finish(ev, events_file);
  return m;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

/// Single (scenario, algo, seed) point: one results row, optional trace.
inline int cmd_run(const Options& opt, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.figure) throw ConfigError("--figure", 0, "figure presets apply to sweep and trace");
    const Config cfg = load_config(opt);
    MetricsRecord m;
    if (!cfg.get("output.trace_path").empty()) {
      m = traced_run(cfg, *parse_cc_algo(cfg.get("cc.algo")), output_path(opt, cfg.get("output.trace_path")));
    } else {
      SimConfig sc = cfg.sim_config();
      sc.trace_interval = 0.0;
      Simulation sim(describe_scenario(cfg.scenario_template(), cfg.point_value(), sc.scenario), sc);
      m = sim.run();
    }
    const auto path = output_path(opt, cfg.get("output.results_path"));
    auto out = open_output(path);
    write_results_csv(out, {m});
    finish(out, path);
    log << m.scenario << ' ' << m.algo << " seed " << m.seed << " variable " << m.variable << ": "
        << (m.timed_out ? "TIMED OUT" : "transfer_time_s=" + std::to_string(m.transfer_time)) << '\n';
    return m.timed_out ? kSimTimeout : kOk;
  });
}

/// Full grid sweep: results CSV, summary CSV and, for figure presets, the
/// figure's axes table.
inline int cmd_sweep(const Options& opt, std::ostream& log, std::ostream& err) {
  return guarded(err, [&]() -> int {
    std::optional<FigurePreset> preset;
    if (opt.figure) {
      preset = figure_preset(*opt.figure);
      if (!preset || preset->is_trace) throw ConfigError("--figure", 0, "sweep presets are 2, 5 and 8");
    }
    const Config cfg = load_config(opt, preset);
    const ScenarioSpec spec = cfg.scenario_spec();
    const auto rows = sweep(spec, opt.jobs);
    const auto summary = summarize(rows);

    const auto results_path = output_path(opt, cfg.get("output.results_path"));
    auto out = open_output(results_path);
    write_results_csv(out, rows);
    finish(out, results_path);
    const auto summary_path = output_path(opt, cfg.get("output.summary_path"));
    auto sout = open_output(summary_path);
    write_summary_csv(sout, summary);
    finish(sout, summary_path);

    if (preset) {
      const bool throughput = spec.scenario == ScenarioTemplate::C;
      const auto fig_path = output_path(opt, "fig" + std::to_string(preset->number) + ".csv");
      auto fout = open_output(fig_path);
      fout << (throughput ? "load,algo,mean_goodput_bps,stdev_goodput_bps\n"
                          : "loss,algo,mean_transfer_time_s,stdev_transfer_time_s\n");
      for (const auto& s : summary) {
        fout << format_row("%.4f,%s,%.6f,%.6f\n", s.variable, s.algo.c_str(),
                           throughput ? s.mean_goodput : s.mean_transfer_time,
                           throughput ? s.stdev_goodput : s.stdev_transfer_time);
      }
      finish(fout, fig_path);
    }

    std::size_t timed_out = 0;
    for (const auto& r : rows) timed_out += r.timed_out ? 1 : 0;
    log << rows.size() << " runs, " << timed_out << " timed out, " << summary.size() << " summary rows\n";
    return timed_out == rows.size() ? kSimTimeout : kOk;
  });
}

/// cwnd trace of one point. Figure presets trace every controller in
/// scenario.algos and emit one gnuplot script for all of them.
inline int cmd_trace(const Options& opt, std::ostream& log, std::ostream& err) {
  return guarded(err, [&]() -> int {
    std::optional<FigurePreset> preset;
    if (opt.figure) {
      preset = figure_preset(*opt.figure);
      if (!preset || !preset->is_trace) throw ConfigError("--figure", 0, "trace presets are 3, 6 and 9");
    }
    const Config cfg = load_config(opt, preset);
    if (!(cfg.real("output.trace_interval") > 0.0)) {
      throw ConfigError("output.trace_interval", 0, "trace interval must be positive");
    }
    std::vector<CcAlgo> algos;
    std::vector<std::filesystem::path> files;
    if (preset) {
      algos = cfg.algo_list("scenario.algos");
      for (CcAlgo a : algos) {
        files.push_back(output_path(opt, "fig" + std::to_string(preset->number) + "_" + std::string(to_string(a)) + ".csv"));
      }
    } else {
      algos = {*parse_cc_algo(cfg.get("cc.algo"))};
      const std::string name = cfg.get("output.trace_path").empty() ? "trace.csv" : cfg.get("output.trace_path");
      files.push_back(output_path(opt, name));
    }
    std::vector<MetricsRecord> rows;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < algos.size(); ++i) {
      rows.push_back(traced_run(cfg, algos[i], files[i]));
      labels.emplace_back(to_string(algos[i]));
    }
    const auto script = preset ? output_path(opt, "fig" + std::to_string(preset->number) + ".gp")
                               : std::filesystem::path(with_suffix(files.front(), "", ".gp"));
    write_gnuplot(script, files, labels);
    std::sort(rows.begin(), rows.end(), row_less);
    const auto results_path = output_path(opt, cfg.get("output.results_path"));
    auto out = open_output(results_path);
    write_results_csv(out, rows);
    finish(out, results_path);
    bool any_timeout = false;
    for (const auto& r : rows) {
      any_timeout = any_timeout || r.timed_out;
      log << r.algo << ": transfer_time_s=" << r.transfer_time << (r.timed_out ? " (timed out)" : "") << '\n';
    }
    return any_timeout ? kSimTimeout : kOk;
  });
}

}  // namespace cmtsim::cli
