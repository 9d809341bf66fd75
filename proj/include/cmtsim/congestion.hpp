#pragma once

// Congestion control for concurrent multipath transfer.
//
// Transport drives a controller exclusively through the hooks of
// CongestionController. Three controllers are provided:
//
//   cmt-cc         per-path TCP-style rules (halving, +1 MTU per RTT)
//   cmt-berp       bandwidth-estimation-based resource pooling: coupled
//                  increase scaled by alpha, decrease by the path's share
//                  beta_i of the pooled bandwidth estimate
//   mptcp-coupled  the cmt-berp code path with every beta_i pinned to 0.5
//
// Windows, thresholds and partial-bytes-acked are in bytes; bandwidth
// estimates in bytes/second; times in seconds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cmtsim/engine.hpp"

namespace cmtsim {

enum class CcAlgo { CmtCc, CmtBerp, MptcpCoupled };
enum class PaScope { PerPath, Global };

inline std::string_view to_string(CcAlgo algo) {
  switch (algo) {
    case CcAlgo::CmtCc: return "cmt-cc";
    case CcAlgo::CmtBerp: return "cmt-berp";
    case CcAlgo::MptcpCoupled: return "mptcp-coupled";
  }
  return "?";
}

inline std::optional<CcAlgo> parse_cc_algo(std::string_view s) {
  if (s == "cmt-cc") return CcAlgo::CmtCc;
  if (s == "cmt-berp") return CcAlgo::CmtBerp;
  if (s == "mptcp-coupled") return CcAlgo::MptcpCoupled;
  return std::nullopt;
}

struct CcParams {
  double mtu{1500.0};
  double filter_p{0.9};
  PaScope pa_scope{PaScope::PerPath};
  double initial_cwnd{2 * 1500.0};
  double initial_ssthresh{16.0 * 1024 * 1024};
  double ssthresh_floor_mtus{4.0};
  /// srtt used in alpha for a path that has no RTT sample yet.
  double srtt_placeholder{1.0};
  /// Time from which the first bandwidth sample of every path is measured.
  SimTime start_time{0.0};
};

// ---------------------------------------------------------------------------
// Formulas

/// Raw bandwidth sample d_k / (t_k - t_{k-1}). Empty when the sample is
/// suppressed (no new bytes, or no elapsed time).
inline std::optional<double> bwe_sample(double acked_bytes, SimTime t_k, SimTime t_prev) {
  if (!(acked_bytes > 0.0) || !(t_k > t_prev)) return std::nullopt;
  return acked_bytes / (t_k - t_prev);
}

/// Low-pass filter over the mean of the two latest raw samples.
inline double bwe_filter(double b_hat_prev, double b_k, double b_prev, double p) {
  return p * b_hat_prev + (1.0 - p) * ((b_k + b_prev) / 2.0);
}

/// Each path's share of the pooled bandwidth estimate; uniform while no
/// path has a positive estimate.
inline std::vector<double> compute_beta(std::span<const double> b_hat) {
  if (b_hat.empty()) throw std::invalid_argument("compute_beta: no paths");
  const double total = std::accumulate(b_hat.begin(), b_hat.end(), 0.0);
  std::vector<double> beta(b_hat.size());
  if (total > 0.0) {
    std::transform(b_hat.begin(), b_hat.end(), beta.begin(), [total](double b) { return b / total; });
  } else {
    std::fill(beta.begin(), beta.end(), 1.0 / static_cast<double>(b_hat.size()));
  }
  return beta;
}

/// Aggressiveness factor coupling the per-path increases:
///   2 * w_T * max_i(beta_i * w_i / srtt_i^2) / (sum_i w_i / srtt_i)^2
inline double compute_alpha(std::span<const double> cwnd, std::span<const double> srtt,
                            std::span<const double> beta) {
  if (cwnd.size() != srtt.size() || cwnd.size() != beta.size() || cwnd.empty()) {
    throw std::invalid_argument("compute_alpha: mismatched path vectors");
  }
  double total_cwnd = 0.0;
  double best = 0.0;
  double rate_sum = 0.0;
  for (std::size_t i = 0; i < cwnd.size(); ++i) {
    total_cwnd += cwnd[i];
    best = std::max(best, beta[i] * cwnd[i] / (srtt[i] * srtt[i]));
    rate_sum += cwnd[i] / srtt[i];
  }
  return 2.0 * total_cwnd * best / (rate_sum * rate_sum);
}

/// Congestion-avoidance increment: min(alpha*P_a*MTU/w_T, P_a*MTU/w_i).
inline double coupled_increase(double alpha, double partial_acked, double mtu, double total_cwnd,
                               double cwnd) {
  return std::min(alpha * partial_acked * mtu / total_cwnd, partial_acked * mtu / cwnd);
}

struct WindowUpdate {
  double ssthresh;
  double cwnd;
  friend bool operator==(const WindowUpdate&, const WindowUpdate&) = default;
};

/// Fast-retransmit rule: s_i = max(w_i - beta_i*w_i, floor); w_i = s_i.
inline WindowUpdate berp_fast_rtx(double cwnd, double beta, double mtu, double floor_mtus = 4.0) {
  const double s = std::max(cwnd - beta * cwnd, floor_mtus * mtu);
  return {s, s};
}

/// Timeout rule: s_i = max(w_i - beta_i*w_i, floor); w_i = 1 MTU.
inline WindowUpdate berp_timeout(double cwnd, double beta, double mtu, double floor_mtus = 4.0) {
  return {std::max(cwnd - beta * cwnd, floor_mtus * mtu), mtu};
}

inline WindowUpdate halving_fast_rtx(double cwnd, double mtu, double floor_mtus = 4.0) {
  const double s = std::max(cwnd / 2.0, floor_mtus * mtu);
  return {s, s};
}

inline WindowUpdate halving_timeout(double cwnd, double mtu, double floor_mtus = 4.0) {
  return {std::max(cwnd / 2.0, floor_mtus * mtu), mtu};
}

/// Slow-start increment per SACK, clamped to one MTU.
inline double slow_start_increase(double acked_bytes, double mtu) {
  return std::min(acked_bytes, mtu);
}

// ---------------------------------------------------------------------------
// Bandwidth estimator

struct BweState {
  double b_prev{0.0};
  double b_hat{0.0};
  SimTime t_prev{0.0};
  std::uint64_t sample_count{0};

  /// Feeds one SACK's newly acked bytes; returns true if a sample was taken.
  bool update(double acked_bytes, SimTime now, double p) {
    const auto sample = bwe_sample(acked_bytes, now, t_prev);
    if (!sample) return false;
    if (sample_count == 0) {
      b_hat = *sample;
    } else {
      b_hat = bwe_filter(b_hat, *sample, b_prev, p);
    }
    b_prev = *sample;
    t_prev = now;
    ++sample_count;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Controllers

class CongestionController {
 public:
  CongestionController(std::size_t paths, CcParams params)
      : params_(params),
        cwnd_(paths, params.initial_cwnd),
        ssthresh_(paths, params.initial_ssthresh),
        partial_(paths, 0.0),
        srtt_(paths, params.srtt_placeholder),
        bwe_(paths) {
    if (paths == 0) throw std::invalid_argument("controller needs at least one path");
    for (auto& b : bwe_) b.t_prev = params.start_time;
  }
  virtual ~CongestionController() = default;

  virtual CcAlgo algo() const = 0;

  /// New bytes acknowledged for chunks last sent on `path` by one SACK.
  /// Updates the bandwidth estimate and partial_bytes_acked.
  virtual void on_bytes_acked(std::size_t path, double acked_bytes, SimTime now) {
    if (acked_bytes <= 0.0) return;
    bwe_[path].update(acked_bytes, now, params_.filter_p);
    if (cwnd_[path] >= ssthresh_[path]) partial_slot(path) += acked_bytes;
  }

  /// Window growth after a SACK. `cwnd_utilized` is true when, before the
  /// SACK, the path had no room for another full chunk.
  void on_increase_check(std::size_t path, double acked_bytes, bool cwnd_utilized) {
    if (acked_bytes <= 0.0 || !cwnd_utilized) return;
    double& w = cwnd_[path];
    if (w < ssthresh_[path]) {
      w += slow_start_increase(acked_bytes, params_.mtu);
      return;
    }
    double& pa = partial_slot(path);
    if (pa >= w) {
      const double before = w;
      w += congestion_avoidance_increase(path);
      pa = std::max(0.0, pa - before);
    }
  }

  virtual void on_fast_rtx(std::size_t path) = 0;
  virtual void on_timeout(std::size_t path) = 0;

  void on_rtt_update(std::size_t path, double srtt) { srtt_[path] = srtt; }

  /// No data outstanding on the path any more.
  void on_path_idle(std::size_t path) {
    if (partial_index(path) == path) partial_[path] = 0.0;
  }

  std::size_t path_count() const { return cwnd_.size(); }
  double cwnd(std::size_t i) const { return cwnd_[i]; }
  double ssthresh(std::size_t i) const { return ssthresh_[i]; }
  double partial_bytes_acked(std::size_t i) const { return partial_[partial_index(i)]; }
  double total_cwnd() const { return std::accumulate(cwnd_.begin(), cwnd_.end(), 0.0); }
  const BweState& bwe(std::size_t i) const { return bwe_[i]; }
  double srtt(std::size_t i) const { return srtt_[i]; }
  const CcParams& params() const { return params_; }

  /// Decrease fraction the controller would apply to path i right now.
  virtual double beta(std::size_t i) const = 0;
  virtual double alpha() const = 0;

  // Test access.
  void set_window(std::size_t i, double cwnd, double ssthresh) {
    cwnd_[i] = cwnd;
    ssthresh_[i] = ssthresh;
  }
  void set_partial_bytes_acked(std::size_t i, double pa) { partial_slot(i) = pa; }

 protected:
  virtual double congestion_avoidance_increase(std::size_t path) = 0;

  // cmt-cc keeps SCTP's per-path accumulator regardless of pa_scope.
  std::size_t partial_index(std::size_t path) const {
    return params_.pa_scope == PaScope::Global && algo() != CcAlgo::CmtCc ? 0 : path;
  }
  double& partial_slot(std::size_t path) { return partial_[partial_index(path)]; }

  void apply(std::size_t path, WindowUpdate u) {
    ssthresh_[path] = u.ssthresh;
    cwnd_[path] = u.cwnd;
    partial_slot(path) = 0.0;
  }

  CcParams params_;
  std::vector<double> cwnd_;
  std::vector<double> ssthresh_;
  std::vector<double> partial_;
  std::vector<double> srtt_;
  std::vector<BweState> bwe_;
};

/// Baseline CMT congestion control: each path behaves like standalone SCTP.
class CmtCcController final : public CongestionController {
 public:
  using CongestionController::CongestionController;

  CcAlgo algo() const override { return CcAlgo::CmtCc; }
  void on_fast_rtx(std::size_t path) override {
    apply(path, halving_fast_rtx(cwnd_[path], params_.mtu, params_.ssthresh_floor_mtus));
  }
  void on_timeout(std::size_t path) override {
    apply(path, halving_timeout(cwnd_[path], params_.mtu, params_.ssthresh_floor_mtus));
  }
  double beta(std::size_t) const override { return 0.5; }
  double alpha() const override { return 1.0; }

 protected:
  double congestion_avoidance_increase(std::size_t) override { return params_.mtu; }
};

/// Resource-pooling controller. With `pin_beta` every beta_i is held at 0.5,
/// which yields the MPTCP linked-increase controller.
class BerpController final : public CongestionController {
 public:
  BerpController(std::size_t paths, CcParams params, bool pin_beta = false)
      : CongestionController(paths, params),
        pin_beta_(pin_beta),
        beta_(paths, pin_beta ? 0.5 : 1.0 / static_cast<double>(paths)) {
    recompute_alpha();
  }

  CcAlgo algo() const override { return pin_beta_ ? CcAlgo::MptcpCoupled : CcAlgo::CmtBerp; }

  void on_bytes_acked(std::size_t path, double acked_bytes, SimTime now) override {
    if (acked_bytes <= 0.0) return;
    CongestionController::on_bytes_acked(path, acked_bytes, now);
    if (!pin_beta_) {
      std::vector<double> b_hat(bwe_.size());
      std::transform(bwe_.begin(), bwe_.end(), b_hat.begin(), [](const BweState& b) { return b.b_hat; });
      beta_ = compute_beta(b_hat);
    }
    recompute_alpha();
  }

  void on_fast_rtx(std::size_t path) override {
    apply(path, berp_fast_rtx(cwnd_[path], beta_[path], params_.mtu, params_.ssthresh_floor_mtus));
  }
  void on_timeout(std::size_t path) override {
    apply(path, berp_timeout(cwnd_[path], beta_[path], params_.mtu, params_.ssthresh_floor_mtus));
  }

  double beta(std::size_t i) const override { return beta_[i]; }
  double alpha() const override { return alpha_; }

 protected:
  double congestion_avoidance_increase(std::size_t path) override {
    recompute_alpha();
    return coupled_increase(alpha_, partial_slot(path), params_.mtu, total_cwnd(), cwnd_[path]);
  }

 private:
  void recompute_alpha() { alpha_ = compute_alpha(cwnd_, srtt_, beta_); }

  bool pin_beta_;
  std::vector<double> beta_;
  double alpha_{0.0};
};

inline std::unique_ptr<CongestionController> make_controller(CcAlgo algo, std::size_t paths,
                                                             CcParams params) {
  switch (algo) {
    case CcAlgo::CmtCc: return std::make_unique<CmtCcController>(paths, params);
    case CcAlgo::CmtBerp: return std::make_unique<BerpController>(paths, params, false);
    case CcAlgo::MptcpCoupled: return std::make_unique<BerpController>(paths, params, true);
  }
  throw std::invalid_argument("unknown congestion controller");
}

}  // namespace cmtsim
