#pragma once

// Links with serialization + propagation delay, a drop-tail queue and
// Bernoulli error loss, plus static multi-hop routes.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cmtsim/engine.hpp"

namespace cmtsim {

using Tsn = std::uint32_t;
using LinkId = std::uint32_t;
using RouteId = std::uint32_t;

enum class PacketKind : std::uint8_t { Data, Sack, Udp };

struct GapBlock {
  Tsn start;
  Tsn end;
  friend bool operator==(const GapBlock&, const GapBlock&) = default;
};

struct SackChunk {
  Tsn cum_tsn{0};
  std::vector<GapBlock> gap_blocks;
  std::uint64_t rwnd_advertised{0};
};

/// One DATA chunk; every DATA packet carries exactly one.
struct DataChunk {
  Tsn tsn{0};
  std::uint32_t user_bytes{0};
  bool retransmit{false};
  std::uint32_t tx_path{0};
  SimTime tx_time{0.0};
};

struct Packet {
  PacketKind kind{PacketKind::Data};
  std::uint32_t size{0};  // bytes on the wire, headers included
  std::uint32_t flow_id{0};
  std::uint32_t path_id{0};
  DataChunk data;
  SackChunk sack;

  // Routing state, owned by Network.
  RouteId route{0};
  std::uint32_t hop{0};
};

struct LinkParams {
  std::string from;  // "node.interface"
  std::string to;
  double capacity_bps{10e6};
  double prop_delay{0.010};
  double loss_prob{0.0};
  std::uint32_t queue_capacity{50};
};

struct LinkCounters {
  std::uint64_t enqueued{0};
  std::uint64_t delivered{0};
  std::uint64_t error_dropped{0};
  std::uint64_t queue_dropped{0};
  std::uint64_t in_system{0};  // queued, in transmission or propagating

  bool conserved() const {
    return enqueued == delivered + error_dropped + queue_dropped + in_system;
  }
};

/// Unidirectional link. The queue holds the packet under transmission plus
/// those waiting behind it; error loss is drawn when a packet reaches the far
/// end, after it has used link capacity.
class Link {
 public:
  using Receiver = std::function<void(Packet&&)>;

  Link(LinkId id, LinkParams params, EventQueue& queue, std::uint64_t master_seed)
      : id_(id),
        params_(std::move(params)),
        events_(&queue),
        loss_rng_(master_seed, "loss.link." + std::to_string(id)) {
    if (!(params_.capacity_bps > 0.0)) throw std::invalid_argument("link capacity must be > 0");
    if (!(params_.loss_prob >= 0.0 && params_.loss_prob <= 1.0)) {
      throw std::invalid_argument("link loss_prob must lie in [0,1]");
    }
    if (params_.queue_capacity < 1) throw std::invalid_argument("link queue_capacity must be >= 1");
    if (!(params_.prop_delay >= 0.0)) throw std::invalid_argument("link prop_delay must be >= 0");
  }

  Link(const Link&) = delete;
  Link& operator=(const Link&) = delete;

  LinkId id() const { return id_; }
  const LinkParams& params() const { return params_; }
  const LinkCounters& counters() const { return counters_; }
  std::size_t queue_length() const { return fifo_.size(); }

  void set_receiver(Receiver rx) { receiver_ = std::move(rx); }

  SimTime serialization_time(std::uint32_t bytes) const {
    return static_cast<double>(bytes) * 8.0 / params_.capacity_bps;
  }

  /// Returns false (and counts a queue drop) when the drop-tail queue is full.
  bool enqueue(Packet&& p) {
    ++counters_.enqueued;
    if (fifo_.size() >= params_.queue_capacity) {
      ++counters_.queue_dropped;
      return false;
    }
    ++counters_.in_system;
    fifo_.push_back(std::move(p));
    if (fifo_.size() == 1) start_transmission();
    return true;
  }

 private:
  void start_transmission() {
    events_->schedule_in(serialization_time(fifo_.front().size), [this] { finish_transmission(); });
  }

  void finish_transmission() {
    Packet p = std::move(fifo_.front());
    fifo_.pop_front();
    if (!fifo_.empty()) start_transmission();
    events_->schedule_in(params_.prop_delay,
                         [this, p = std::move(p)]() mutable { deliver(std::move(p)); });
  }

  void deliver(Packet&& p) {
    --counters_.in_system;
    if (params_.loss_prob > 0.0 && loss_rng_.draw_uniform() < params_.loss_prob) {
      ++counters_.error_dropped;
      return;
    }
    ++counters_.delivered;
    if (receiver_) receiver_(std::move(p));
  }

  LinkId id_;
  LinkParams params_;
  EventQueue* events_;
  RngStream loss_rng_;
  std::deque<Packet> fifo_;
  LinkCounters counters_;
  Receiver receiver_;
};

struct Route {
  std::uint32_t flow_id{0};
  std::uint32_t path_id{0};
  std::vector<LinkId> hops;
};

/// Owns links and routes. A packet sent on a route traverses its hops in
/// order and is handed to the route's endpoint after the last one.
class Network {
 public:
  using Endpoint = std::function<void(Packet&&)>;

  Network(EventQueue& queue, std::uint64_t master_seed) : events_(&queue), seed_(master_seed) {}

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  LinkId add_link(LinkParams params) {
    const auto id = static_cast<LinkId>(links_.size());
    links_.push_back(std::make_unique<Link>(id, std::move(params), *events_, seed_));
    links_.back()->set_receiver([this](Packet&& p) { forward(std::move(p)); });
    return id;
  }

  /// Adds a route; consecutive hops must share a node ("a.x" -> "b.y" then "b.*").
  RouteId add_route(Route route, Endpoint endpoint) {
    if (route.hops.empty()) throw std::invalid_argument("route has no hops");
    for (LinkId h : route.hops) {
      if (h >= links_.size()) throw std::invalid_argument("route references unknown link");
    }
    for (std::size_t i = 1; i < route.hops.size(); ++i) {
      const auto& prev = links_[route.hops[i - 1]]->params().to;
      const auto& next = links_[route.hops[i]]->params().from;
      if (node_of(prev) != node_of(next)) {
        throw std::invalid_argument("route hops are not connected: " + prev + " -> " + next);
      }
    }
    const auto id = static_cast<RouteId>(routes_.size());
    routes_.push_back(std::move(route));
    endpoints_.push_back(std::move(endpoint));
    return id;
  }

  /// Injects a packet at the first hop of a route.
  bool send(RouteId route, Packet&& p) {
    p.route = route;
    p.hop = 0;
    return links_[routes_.at(route).hops.front()]->enqueue(std::move(p));
  }

  const Link& link(LinkId id) const { return *links_.at(id); }
  Link& link(LinkId id) { return *links_.at(id); }
  std::size_t link_count() const { return links_.size(); }
  const Route& route(RouteId id) const { return routes_.at(id); }
  std::size_t route_count() const { return routes_.size(); }

  static std::string node_of(const std::string& endpoint) {
    return endpoint.substr(0, endpoint.find('.'));
  }

 private:
  void forward(Packet&& p) {
    const Route& r = routes_[p.route];
    ++p.hop;
    if (p.hop < r.hops.size()) {
      links_[r.hops[p.hop]]->enqueue(std::move(p));
    } else {
      endpoints_[p.route](std::move(p));
    }
  }

  EventQueue* events_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Link>> links_;
  std::vector<Route> routes_;
  std::vector<Endpoint> endpoints_;
};

}  // namespace cmtsim
