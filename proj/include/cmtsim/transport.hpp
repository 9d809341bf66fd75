#pragma once

// CMT-SCTP style endpoints: a sender that stripes TSN-sequenced chunks over
// several paths and a receiver that returns SACKs with gap blocks.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cmtsim/congestion.hpp"
#include "cmtsim/engine.hpp"
#include "cmtsim/netsim.hpp"

namespace cmtsim {

enum class RtxPolicy { Ssthresh, Same };

inline std::optional<RtxPolicy> parse_rtx_policy(std::string_view s) {
  if (s == "rtx-ssthresh") return RtxPolicy::Ssthresh;
  if (s == "rtx-same") return RtxPolicy::Same;
  return std::nullopt;
}

inline std::string_view to_string(RtxPolicy p) {
  return p == RtxPolicy::Ssthresh ? "rtx-ssthresh" : "rtx-same";
}

struct TransportParams {
  std::uint32_t chunk_bytes{1452};
  std::uint32_t data_overhead{48};
  std::uint32_t sack_base_bytes{60};
  std::uint32_t sack_gap_bytes{4};
  std::uint32_t dupthresh{4};
  double rto_initial{1.0};
  double rto_min{1.0};
  double rto_max{60.0};
  RtxPolicy rtx_policy{RtxPolicy::Ssthresh};
  std::uint32_t delayed_ack_factor{2};
  double delayed_ack_timeout{0.2};
  std::uint64_t rwnd{16ULL * 1024 * 1024};
};

/// Per-path sender state that is not owned by the congestion controller.
struct SenderPathState {
  std::size_t path_id{0};
  std::uint64_t outstanding_bytes{0};
  bool has_rtt{false};
  double srtt{0.0};
  double rttvar{0.0};
  double rto{1.0};
  double rto_backoff{1.0};
  std::optional<Tsn> rtt_probe;
  EventToken rto_timer;
  bool in_recovery{false};
  Tsn recover_tsn{0};

  std::uint64_t fast_rtx_count{0};
  std::uint64_t timeout_count{0};
  std::uint64_t rtt_samples{0};
};

/// RFC 4960 style estimator. The first sample seeds srtt and rttvar.
inline void rtt_update(SenderPathState& path, double sample, double rto_min, double rto_max) {
  if (!(sample > 0.0)) throw std::logic_error("rtt_update: non-positive RTT sample");
  if (!path.has_rtt) {
    path.srtt = sample;
    path.rttvar = sample / 2.0;
    path.has_rtt = true;
  } else {
    path.rttvar = 0.75 * path.rttvar + 0.25 * std::abs(path.srtt - sample);
    path.srtt = 0.875 * path.srtt + 0.125 * sample;
  }
  path.rto = std::clamp(path.srtt + 4.0 * path.rttvar, rto_min, rto_max);
  path.rto_backoff = 1.0;
  ++path.rtt_samples;
}

enum class CongestionEventKind { FastRtx, Timeout };

/// One window reduction, captured with the inputs the rule consumed.
struct CongestionEvent {
  SimTime time;
  std::size_t path;
  CongestionEventKind kind;
  double cwnd_before;
  double ssthresh_before;
  double beta;
  double alpha;
  double cwnd_after;
  double ssthresh_after;
};

/// Stream digest of (tsn, bytes) pairs, used to compare what was sent with
/// what the application received.
struct StreamDigest {
  std::uint64_t value{0xcbf29ce484222325ULL};
  void add(Tsn tsn, std::uint32_t bytes) {
    value = splitmix64(value ^ (static_cast<std::uint64_t>(tsn) << 32 | bytes));
  }
  friend bool operator==(const StreamDigest&, const StreamDigest&) = default;
};

/// Sending side of the association: owns the send queue, the outstanding
/// table and per-path timers, and drives the congestion controller hooks.
class Sender {
 public:
  using EventCallback = std::function<void(const CongestionEvent&)>;
  using SackObserver = std::function<void(std::span<const double> acked_per_path)>;

  Sender(EventQueue& events, Network& net, std::vector<RouteId> data_routes,
         CongestionController& cc, TransportParams params, std::uint64_t file_bytes,
         std::uint32_t flow_id = 0)
      : events_(&events),
        net_(&net),
        routes_(std::move(data_routes)),
        cc_(&cc),
        params_(params),
        file_bytes_(file_bytes),
        flow_id_(flow_id),
        paths_(routes_.size()) {
    if (routes_.empty()) throw std::invalid_argument("Sender needs at least one path");
    if (cc.path_count() != routes_.size()) throw std::invalid_argument("controller/path count mismatch");
    for (std::size_t i = 0; i < paths_.size(); ++i) {
      paths_[i].path_id = i;
      paths_[i].rto = params_.rto_initial;
    }
  }

  Sender(const Sender&) = delete;
  Sender& operator=(const Sender&) = delete;
  ~Sender() {
    for (auto& p : paths_) events_->cancel(p.rto_timer);
  }

  void set_congestion_event_callback(EventCallback cb) { on_event_ = std::move(cb); }
  void set_sack_observer(SackObserver cb) { on_sack_ = std::move(cb); }

  /// Starts transmission at the current simulation time.
  void start() { try_send(); }

  /// Sends as much as the congestion windows allow; returns chunks sent.
  std::size_t try_send() {
    std::size_t sent = 0;
    while (!rtx_queue_.empty()) {
      const Tsn tsn = *rtx_queue_.begin();
      Chunk& c = outstanding_.at(tsn);
      const std::size_t dest = rtx_destination(c);
      if (!has_room(dest, c.bytes)) break;
      rtx_queue_.erase(rtx_queue_.begin());
      transmit(c, dest, true);
      ++sent;
    }
    while (bytes_unsent() > 0) {
      const auto bytes = next_chunk_bytes();
      std::optional<std::size_t> dest;
      for (std::size_t k = 0; k < paths_.size(); ++k) {
        const std::size_t candidate = (cursor_ + k) % paths_.size();
        if (has_room(candidate, bytes)) {
          dest = candidate;
          break;
        }
      }
      if (!dest) break;
      cursor_ = (*dest + 1) % paths_.size();
      const Tsn tsn = next_tsn_++;
      bytes_queued_ += bytes;
      sent_digest_.add(tsn, bytes);
      auto [it, inserted] = outstanding_.emplace(tsn, Chunk{tsn, bytes});
      transmit(it->second, *dest, false);
      ++sent;
    }
    return sent;
  }

  void on_sack(const SackChunk& sack, std::size_t arrival_path) {
    (void)arrival_path;
    if (sack.cum_tsn < cum_ack_) {
      ++stale_sacks_;
      return;
    }
    const SimTime now = events_->now();
    const std::size_t n = paths_.size();
    std::vector<bool> utilized(n);
    for (std::size_t i = 0; i < n; ++i) {
      utilized[i] = static_cast<double>(paths_[i].outstanding_bytes + params_.chunk_bytes) > cc_->cwnd(i);
    }

    // The RTO timer of a path restarts only when its earliest outstanding
    // TSN is acknowledged.
    std::vector<std::optional<Tsn>> earliest(n);
    for (const auto& [tsn, c] : outstanding_) {
      if (c.in_flight && !earliest[c.tx_path]) earliest[c.tx_path] = tsn;
    }
    std::vector<bool> earliest_acked(n, false);

    std::vector<double> acked(n, 0.0);
    std::vector<std::optional<Tsn>> highest_acked(n);
    auto ack_chunk = [&](std::map<Tsn, Chunk>::iterator it) {
      Chunk& c = it->second;
      SenderPathState& path = paths_[c.tx_path];
      if (c.in_flight) path.outstanding_bytes -= c.bytes;
      if (c.pending_rtx) rtx_queue_.erase(c.tsn);
      acked[c.tx_path] += c.bytes;
      if (earliest[c.tx_path] == c.tsn) earliest_acked[c.tx_path] = true;
      highest_acked[c.tx_path] = std::max(highest_acked[c.tx_path].value_or(0), c.tsn);
      if (path.rtt_probe == c.tsn) {
        path.rtt_probe.reset();
        if (!c.retransmitted && c.in_flight) {
          rtt_update(path, now - c.tx_time, params_.rto_min, params_.rto_max);
          cc_->on_rtt_update(c.tx_path, path.srtt);
        }
      }
      acked_bytes_ += c.bytes;
      return outstanding_.erase(it);
    };

    for (auto it = outstanding_.begin(); it != outstanding_.end() && it->first <= sack.cum_tsn;) {
      it = ack_chunk(it);
    }
    for (const GapBlock& gap : sack.gap_blocks) {
      for (auto it = outstanding_.lower_bound(gap.start); it != outstanding_.end() && it->first <= gap.end;) {
        it = ack_chunk(it);
      }
    }
    cum_ack_ = std::max(cum_ack_, sack.cum_tsn);

    for (auto& path : paths_) {
      if (path.in_recovery && cum_ack_ >= path.recover_tsn) path.in_recovery = false;
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (acked[i] > 0.0) cc_->on_bytes_acked(i, acked[i], now);
    }

    // Split fast retransmit: only SACK evidence for a higher TSN sent on the
    // same path counts as a missing report.
    std::vector<Tsn> to_retransmit;
    for (auto& [tsn, c] : outstanding_) {
      if (!c.in_flight || c.fast_retransmitted) continue;
      const auto& h = highest_acked[c.tx_path];
      if (h && tsn < *h && ++c.missing_reports >= params_.dupthresh) to_retransmit.push_back(tsn);
    }
    std::optional<Tsn> first_fast_rtx;
    for (Tsn tsn : to_retransmit) {
      Chunk& c = outstanding_.at(tsn);
      SenderPathState& path = paths_[c.tx_path];
      if (!path.in_recovery) {
        reduce_window(c.tx_path, CongestionEventKind::FastRtx);
        path.in_recovery = true;
        path.recover_tsn = next_tsn_ - 1;
        ++path.fast_rtx_count;
      }
      c.fast_retransmitted = true;
      mark_for_retransmission(c);
      if (!first_fast_rtx) first_fast_rtx = tsn;
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!paths_[i].in_recovery) cc_->on_increase_check(i, acked[i], utilized[i]);
    }

    for (std::size_t i = 0; i < n; ++i) {
      SenderPathState& path = paths_[i];
      if (path.outstanding_bytes == 0) {
        events_->cancel(path.rto_timer);
        cc_->on_path_idle(i);
      } else if (earliest_acked[i]) {
        restart_timer(i);
      }
    }

    if (first_fast_rtx) send_retransmission_now(*first_fast_rtx);
    if (on_sack_) on_sack_(acked);
    try_send();
  }

  void on_rto_expiry(std::size_t path_index) {
    SenderPathState& path = paths_[path_index];
    path.rto_timer = EventToken{};
    std::optional<Tsn> earliest;
    for (auto& [tsn, c] : outstanding_) {
      if (c.in_flight && c.tx_path == path_index) {
        if (!earliest) earliest = tsn;
        mark_for_retransmission(c);
      }
    }
    if (!earliest) return;
    ++path.timeout_count;
    path.in_recovery = false;
    reduce_window(path_index, CongestionEventKind::Timeout);
    path.rto = std::min(path.rto * 2.0, params_.rto_max);
    path.rto_backoff *= 2.0;
    send_retransmission_now(*earliest);
    try_send();
  }

  // Introspection.
  const SenderPathState& path(std::size_t i) const { return paths_.at(i); }
  std::size_t path_count() const { return paths_.size(); }
  const CongestionController& controller() const { return *cc_; }
  Tsn cum_ack() const { return cum_ack_; }
  Tsn next_tsn() const { return next_tsn_; }
  std::uint64_t bytes_unsent() const { return file_bytes_ - bytes_queued_; }
  std::uint64_t bytes_acked() const { return acked_bytes_; }
  std::uint64_t retransmissions() const { return retransmissions_; }
  std::uint64_t stale_sacks() const { return stale_sacks_; }
  std::size_t outstanding_chunks() const { return outstanding_.size(); }
  std::uint64_t outstanding_chunk_bytes() const {
    std::uint64_t total = 0;
    for (const auto& [tsn, c] : outstanding_) {
      if (c.in_flight) total += c.bytes;
    }
    return total;
  }
  bool finished() const { return bytes_unsent() == 0 && outstanding_.empty(); }
  const StreamDigest& sent_digest() const { return sent_digest_; }
  std::optional<std::size_t> last_tx_path(Tsn tsn) const {
    auto it = outstanding_.find(tsn);
    if (it == outstanding_.end()) return std::nullopt;
    return it->second.tx_path;
  }

  std::size_t rtx_destination_for_path(std::size_t original_path) const {
    if (params_.rtx_policy == RtxPolicy::Same) return original_path;
    std::size_t best = 0;
    for (std::size_t i = 1; i < paths_.size(); ++i) {
      if (cc_->ssthresh(i) > cc_->ssthresh(best)) best = i;
    }
    return best;
  }

 private:
  struct Chunk {
    Tsn tsn{0};
    std::uint32_t bytes{0};
    std::size_t tx_path{0};
    SimTime tx_time{0.0};
    bool in_flight{false};
    bool pending_rtx{false};
    bool retransmitted{false};
    bool fast_retransmitted{false};
    std::uint32_t missing_reports{0};
  };

  std::uint32_t next_chunk_bytes() const {
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(params_.chunk_bytes, bytes_unsent()));
  }

  bool has_room(std::size_t path, std::uint32_t bytes) const {
    return cc_->cwnd(path) - static_cast<double>(paths_[path].outstanding_bytes) >= bytes;
  }

  std::size_t rtx_destination(const Chunk& c) const { return rtx_destination_for_path(c.tx_path); }

  void transmit(Chunk& c, std::size_t path_index, bool retransmission) {
    SenderPathState& path = paths_[path_index];
    c.tx_path = path_index;
    c.tx_time = events_->now();
    c.in_flight = true;
    c.pending_rtx = false;
    c.missing_reports = 0;
    if (retransmission) {
      c.retransmitted = true;
      ++retransmissions_;
    } else if (!path.rtt_probe) {
      path.rtt_probe = c.tsn;
    }
    path.outstanding_bytes += c.bytes;
    if (!path.rto_timer.valid()) restart_timer(path_index);

    Packet p;
    p.kind = PacketKind::Data;
    p.size = c.bytes + params_.data_overhead;
    p.flow_id = flow_id_;
    p.path_id = static_cast<std::uint32_t>(path_index);
    p.data = DataChunk{c.tsn, c.bytes, c.retransmitted, static_cast<std::uint32_t>(path_index), c.tx_time};
    net_->send(routes_[path_index], std::move(p));
  }

  void mark_for_retransmission(Chunk& c) {
    SenderPathState& path = paths_[c.tx_path];
    if (c.in_flight) path.outstanding_bytes -= c.bytes;
    if (path.rtt_probe == c.tsn) path.rtt_probe.reset();
    c.in_flight = false;
    c.pending_rtx = true;
    rtx_queue_.insert(c.tsn);
  }

  /// Sends one marked chunk immediately, ignoring the destination's cwnd.
  void send_retransmission_now(Tsn tsn) {
    auto it = outstanding_.find(tsn);
    if (it == outstanding_.end() || !it->second.pending_rtx) return;
    rtx_queue_.erase(tsn);
    transmit(it->second, rtx_destination(it->second), true);
  }

  void reduce_window(std::size_t path, CongestionEventKind kind) {
    CongestionEvent e{events_->now(), path, kind, cc_->cwnd(path), cc_->ssthresh(path),
                      cc_->beta(path), cc_->alpha(), 0.0, 0.0};
    if (kind == CongestionEventKind::FastRtx) {
      cc_->on_fast_rtx(path);
    } else {
      cc_->on_timeout(path);
    }
    e.cwnd_after = cc_->cwnd(path);
    e.ssthresh_after = cc_->ssthresh(path);
    if (on_event_) on_event_(e);
  }

  void restart_timer(std::size_t path_index) {
    SenderPathState& path = paths_[path_index];
    events_->cancel(path.rto_timer);
    path.rto_timer = events_->schedule_in(path.rto, [this, path_index] { on_rto_expiry(path_index); });
  }

  EventQueue* events_;
  Network* net_;
  std::vector<RouteId> routes_;
  CongestionController* cc_;
  TransportParams params_;
  std::uint64_t file_bytes_;
  std::uint32_t flow_id_;
  std::vector<SenderPathState> paths_;

  Tsn next_tsn_{1};
  Tsn cum_ack_{0};
  std::uint64_t bytes_queued_{0};
  std::uint64_t acked_bytes_{0};
  std::uint64_t retransmissions_{0};
  std::uint64_t stale_sacks_{0};
  std::size_t cursor_{0};
  std::map<Tsn, Chunk> outstanding_;
  std::set<Tsn> rtx_queue_;
  StreamDigest sent_digest_;
  EventCallback on_event_;
  SackObserver on_sack_;
};

/// Receiving side: in-order delivery, reorder buffer and SACK policy.
class Receiver {
 public:
  using DeliveryCallback = std::function<void(Tsn, std::uint32_t)>;

  Receiver(EventQueue& events, Network& net, std::vector<RouteId> sack_routes, TransportParams params,
           std::uint32_t flow_id = 0)
      : events_(&events), net_(&net), routes_(std::move(sack_routes)), params_(params), flow_id_(flow_id) {}

  Receiver(const Receiver&) = delete;
  Receiver& operator=(const Receiver&) = delete;
  ~Receiver() { events_->cancel(delayed_timer_); }

  void set_delivery_callback(DeliveryCallback cb) { on_deliver_ = std::move(cb); }

  /// Handles one arriving DATA chunk. Returns the SACK if one was sent now.
  std::optional<SackChunk> on_data_arrival(const DataChunk& chunk, std::size_t arrival_path) {
    last_path_ = arrival_path;
    ++arrivals_;
    if (chunk.tsn <= cum_tsn_ || buffer_.contains(chunk.tsn)) {
      ++duplicates_;
      return send_sack();
    }
    const bool had_gaps = !buffer_.empty();
    if (chunk.tsn == cum_tsn_ + 1) {
      deliver(chunk.tsn, chunk.user_bytes);
      while (!buffer_.empty() && buffer_.begin()->first == cum_tsn_ + 1) {
        const auto bytes = buffer_.begin()->second;
        buffer_.erase(buffer_.begin());
        deliver(cum_tsn_ + 1, bytes);
      }
      if (had_gaps) return send_sack();
      if (++unacked_ >= params_.delayed_ack_factor) return send_sack();
      if (!delayed_timer_.valid()) {
        delayed_timer_ = events_->schedule_in(params_.delayed_ack_timeout, [this] {
          delayed_timer_ = EventToken{};
          send_sack();
        });
      }
      return std::nullopt;
    }
    buffer_.emplace(chunk.tsn, chunk.user_bytes);
    return send_sack();
  }

  SackChunk current_sack() const {
    SackChunk s;
    s.cum_tsn = cum_tsn_;
    s.rwnd_advertised = params_.rwnd;
    for (const auto& [tsn, bytes] : buffer_) {
      if (!s.gap_blocks.empty() && s.gap_blocks.back().end + 1 == tsn) {
        s.gap_blocks.back().end = tsn;
      } else {
        s.gap_blocks.push_back(GapBlock{tsn, tsn});
      }
    }
    return s;
  }

  Tsn cum_tsn() const { return cum_tsn_; }
  std::uint64_t delivered_bytes() const { return delivered_bytes_; }
  std::uint64_t delivered_chunks() const { return delivered_chunks_; }
  std::uint64_t duplicates() const { return duplicates_; }
  std::uint64_t sacks_sent() const { return sacks_sent_; }
  std::uint64_t arrivals() const { return arrivals_; }
  const StreamDigest& delivered_digest() const { return delivered_digest_; }

 private:
  void deliver(Tsn tsn, std::uint32_t bytes) {
    cum_tsn_ = tsn;
    delivered_bytes_ += bytes;
    ++delivered_chunks_;
    delivered_digest_.add(tsn, bytes);
    if (on_deliver_) on_deliver_(tsn, bytes);
  }

  SackChunk send_sack() {
    events_->cancel(delayed_timer_);
    unacked_ = 0;
    SackChunk s = current_sack();
    ++sacks_sent_;
    if (!routes_.empty()) {
      Packet p;
      p.kind = PacketKind::Sack;
      p.size = params_.sack_base_bytes + params_.sack_gap_bytes * static_cast<std::uint32_t>(s.gap_blocks.size());
      p.flow_id = flow_id_;
      p.path_id = static_cast<std::uint32_t>(last_path_);
      p.sack = s;
      net_->send(routes_.at(last_path_), std::move(p));
    }
    return s;
  }

  EventQueue* events_;
  Network* net_;
  std::vector<RouteId> routes_;
  TransportParams params_;
  std::uint32_t flow_id_;

  Tsn cum_tsn_{0};
  std::map<Tsn, std::uint32_t> buffer_;
  std::uint32_t unacked_{0};
  EventToken delayed_timer_;
  std::size_t last_path_{0};
  std::uint64_t delivered_bytes_{0};
  std::uint64_t delivered_chunks_{0};
  std::uint64_t duplicates_{0};
  std::uint64_t sacks_sent_{0};
  std::uint64_t arrivals_{0};
  StreamDigest delivered_digest_;
  DeliveryCallback on_deliver_;
};

}  // namespace cmtsim
