#pragma once

// Deterministic discrete-event simulator of a named-data network: forwarders
// with FIB / PIT / Content Store, nodes attached by faces, seeded fault
// injection on every message a node submits.

#include "ccnpaxos/trace.hpp"
#include "ccnpaxos/wire.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace ccnpaxos {

/// Which submissions the loss model applies to. RequestsOnly leaves Content
/// Objects and Push ACKs lossless.
enum class LossScope { All, RequestsOnly };

struct SimConfig
{
  uint64_t seed = 1;
  /// Per-link delay, uniform in [delay_min_ms, delay_max_ms].
  Millis delay_min_ms = 1;
  Millis delay_max_ms = 1;
  double loss_prob = 0.0;
  double dup_prob = 0.0;
  /// MaxAge nodes put on their Content Objects unless configured otherwise.
  Millis default_max_age_ms = 0;
  Millis interest_lifetime_ms = 4000;
  uint64_t max_events = 1'000'000;
  LossScope loss_scope = LossScope::All;

  /// Throws InvalidConfig.
  void
  validate() const;
};

/// Forwarders joined by links into a tree; nodes attach to one forwarder.
/// The default is a star through a single forwarder.
struct Topology
{
  std::vector<std::string> forwarders{"fwd0"};
  std::vector<std::pair<std::string, std::string>> links;
};

/// What a node sees of the network.
class Environment
{
public:
  virtual ~Environment() = default;

  virtual Millis
  now() const = 0;

  virtual void
  send(Message message) = 0;

  virtual uint64_t
  set_timer(Millis delay, uint64_t token) = 0;

  virtual void
  cancel_timer(uint64_t timer_id) = 0;

  /// Uniform in [lo, hi] from the simulation's seeded generator.
  virtual uint64_t
  uniform(uint64_t lo, uint64_t hi) = 0;

  virtual void
  record(TraceEvent event) = 0;

  /// Adds a FIB route for `prefix` toward this node. Registering a prefix
  /// from several nodes makes it a multicast group.
  virtual void
  register_prefix(const std::string& prefix) = 0;
};

class Endpoint
{
public:
  virtual ~Endpoint() = default;

  virtual void
  on_message(const Message& message) = 0;

  virtual void
  on_timer(uint64_t token) = 0;
};

class Network
{
public:
  struct Stats
  {
    uint64_t submitted = 0;
    uint64_t dropped = 0;
    uint64_t duplicated = 0;
    uint64_t delivered = 0;
    uint64_t cache_hits = 0;
    uint64_t events = 0;
    std::map<std::string, uint64_t> submitted_by_kind;
  };

  explicit Network(SimConfig config, Topology topology = {});
  ~Network();

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  void
  attach(const std::string& node, Endpoint& endpoint, const std::string& forwarder = "fwd0");

  /// Environment bound to an attached node; lives as long as the network.
  Environment&
  port(const std::string& node);

  void
  register_prefix(const std::string& node, const std::string& prefix);

  /// Creates an empty FIB entry so that Pushes to an unsubscribed group are
  /// logged as no_subscribers instead of failing with NoRoute.
  void
  declare_multicast(const std::string& prefix);

  /// Injects a message from `node` at time `at` (>= now). Applies the fault
  /// model once per submission. Throws NoRoute for an Interest, Push or Push
  /// ACK with no FIB match at the node's forwarder.
  void
  submit(const std::string& node, Message message, std::optional<Millis> at = std::nullopt);

  uint64_t
  schedule_timer(const std::string& node, Millis at, uint64_t token);

  void
  cancel_timer(uint64_t timer_id);

  void
  schedule(Millis at, std::function<void()> action);

  void
  record(TraceEvent event);

  uint64_t
  uniform(uint64_t lo, uint64_t hi);

  /// Crashed nodes drop deliveries and timers.
  void
  set_down(const std::string& node, bool down);

  bool
  is_down(const std::string& node) const;

  Millis
  now() const noexcept
  {
    return m_now;
  }

  /// Drains events in (time, insertion) order until the queue is empty or
  /// the next event is after `until`. Throws LivelockGuard past
  /// config.max_events.
  const Trace&
  run(std::optional<Millis> until = std::nullopt);

  const Trace&
  trace() const noexcept
  {
    return m_trace;
  }

  Trace
  take_trace()
  {
    return std::move(m_trace);
  }

  const Stats&
  stats() const noexcept
  {
    return m_stats;
  }

  const SimConfig&
  config() const noexcept
  {
    return m_config;
  }

  size_t
  pit_size(const std::string& forwarder) const;

  size_t
  cs_size(const std::string& forwarder) const;

private:
  struct Face
  {
    std::string peer;
    bool to_node = false;
    size_t peer_forwarder = 0;
    size_t peer_face = 0;
  };

  struct Key
  {
    std::string name;
    uint64_t digest = 0;

    friend auto operator<=>(const Key&, const Key&) = default;
  };

  struct PitEntry
  {
    std::vector<size_t> faces;
    Millis expiry = 0;
  };

  struct CsEntry
  {
    Message content;
    Millis expiry = 0;
  };

  struct Forwarder
  {
    std::string name;
    std::vector<Face> faces;
    std::unordered_map<std::string, std::set<size_t>> fib;
    std::map<Key, PitEntry> pit;
    std::map<Key, CsEntry> cs;
  };

  struct NodeSlot
  {
    Endpoint* endpoint = nullptr;
    size_t forwarder = 0;
    size_t face = 0;
    bool down = false;
    std::unique_ptr<Environment> port;
  };

  struct Event
  {
    enum class Kind { ToForwarder, ToNode, Timer, Action, PitExpire } kind = Kind::Action;
    Millis time = 0;
    uint64_t seq = 0;
    size_t forwarder = 0;
    size_t face = 0;
    std::string node;
    std::string from;
    std::shared_ptr<const Message> message;
    bool cache_hit = false;
    uint64_t token = 0;
    std::shared_ptr<std::function<void()>> action;
    Key key;
  };

  struct Later
  {
    bool
    operator()(const Event& a, const Event& b) const
    {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  class Port;

  size_t
  forwarder_index(const std::string& name) const;

  Millis
  link_delay();

  void
  push_event(Event event);

  void
  send_on_face(size_t forwarder, size_t face, std::shared_ptr<const Message> message, bool cache_hit = false);

  /// Next-hop faces for the longest matching prefix, or nullptr if none.
  const std::set<size_t>*
  longest_match(const Forwarder& f, const std::string& name) const;

  void
  on_interest(size_t forwarder, size_t in_face, const std::shared_ptr<const Message>& message);

  void
  on_content(size_t forwarder, size_t in_face, const std::shared_ptr<const Message>& message);

  void
  on_push(size_t forwarder, size_t in_face, const std::shared_ptr<const Message>& message);

  void
  trace_hop(const std::string& from, const std::string& to, const Message& message, bool cache_hit);

  SimConfig m_config;
  std::vector<Forwarder> m_forwarders;
  /// m_next_face[f][g]: face of forwarder f toward forwarder g.
  std::vector<std::vector<size_t>> m_next_face;
  std::map<std::string, NodeSlot> m_nodes;
  std::priority_queue<Event, std::vector<Event>, Later> m_queue;
  std::set<uint64_t> m_cancelled;
  std::mt19937_64 m_rng;
  Millis m_now = 0;
  uint64_t m_seq = 0;
  Trace m_trace;
  Stats m_stats;
};

} // namespace ccnpaxos
