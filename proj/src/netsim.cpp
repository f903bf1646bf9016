#include "ccnpaxos/netsim.hpp"

#include "ccnpaxos/error.hpp"
#include "ccnpaxos/naming.hpp"

#include <algorithm>
#include <deque>

namespace ccnpaxos {

void
SimConfig::validate() const
{
  if (delay_min_ms > delay_max_ms)
    throw Error(Errc::InvalidConfig, "delay min exceeds max");
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0))
    throw Error(Errc::InvalidConfig, "loss_prob outside [0,1]");
  if (!(dup_prob >= 0.0 && dup_prob <= 1.0))
    throw Error(Errc::InvalidConfig, "dup_prob outside [0,1]");
  if (interest_lifetime_ms == 0)
    throw Error(Errc::InvalidConfig, "interest lifetime must be positive");
  if (max_events == 0)
    throw Error(Errc::InvalidConfig, "max_events must be positive");
}

class Network::Port final : public Environment
{
public:
  Port(Network& net, std::string node)
    : m_net(net)
    , m_node(std::move(node))
  {
  }

  Millis
  now() const override
  {
    return m_net.now();
  }

  void
  send(Message message) override
  {
    try {
      m_net.submit(m_node, std::move(message));
    }
    catch (const Error& e) {
      if (e.code() != Errc::NoRoute)
        throw;
    }
  }

  uint64_t
  set_timer(Millis delay, uint64_t token) override
  {
    return m_net.schedule_timer(m_node, m_net.now() + delay, token);
  }

  void
  cancel_timer(uint64_t timer_id) override
  {
    m_net.cancel_timer(timer_id);
  }

  uint64_t
  uniform(uint64_t lo, uint64_t hi) override
  {
    return m_net.uniform(lo, hi);
  }

  void
  record(TraceEvent event) override
  {
    m_net.record(std::move(event));
  }

  void
  register_prefix(const std::string& prefix) override
  {
    m_net.register_prefix(m_node, prefix);
  }

private:
  Network& m_net;
  std::string m_node;
};

Network::Network(SimConfig config, Topology topology)
  : m_config(config)
  , m_rng(config.seed)
{
  m_config.validate();
  if (topology.forwarders.empty())
    throw Error(Errc::InvalidConfig, "topology has no forwarders");
  for (const auto& name : topology.forwarders) {
    if (!is_valid_id(name))
      throw Error(Errc::InvalidConfig, "forwarder name '" + name + "'");
    for (const auto& f : m_forwarders) {
      if (f.name == name)
        throw Error(Errc::InvalidConfig, "duplicate forwarder '" + name + "'");
    }
    m_forwarders.push_back(Forwarder{name, {}, {}, {}, {}});
  }

  const size_t n = m_forwarders.size();
  if (topology.links.size() != n - 1)
    throw Error(Errc::InvalidConfig, "forwarder links must form a tree");
  std::vector<std::vector<std::pair<size_t, size_t>>> adj(n); // (neighbor, local face)
  for (const auto& [a, b] : topology.links) {
    size_t ia = forwarder_index(a);
    size_t ib = forwarder_index(b);
    if (ia == ib)
      throw Error(Errc::InvalidConfig, "self link on '" + a + "'");
    size_t fa = m_forwarders[ia].faces.size();
    size_t fb = m_forwarders[ib].faces.size();
    m_forwarders[ia].faces.push_back(Face{b, false, ib, fb});
    m_forwarders[ib].faces.push_back(Face{a, false, ia, fa});
    adj[ia].push_back({ib, fa});
    adj[ib].push_back({ia, fb});
  }

  // Tree routing: from each source, BFS records the first face taken.
  m_next_face.assign(n, std::vector<size_t>(n, SIZE_MAX));
  for (size_t src = 0; src < n; ++src) {
    std::vector<bool> seen(n, false);
    std::deque<size_t> queue{src};
    seen[src] = true;
    while (!queue.empty()) {
      size_t cur = queue.front();
      queue.pop_front();
      for (const auto& [next, face] : adj[cur]) {
        if (seen[next])
          continue;
        seen[next] = true;
        m_next_face[src][next] = cur == src ? face : m_next_face[src][cur];
        queue.push_back(next);
      }
    }
    if (std::count(seen.begin(), seen.end(), true) != static_cast<long>(n))
      throw Error(Errc::InvalidConfig, "forwarder topology is not connected");
  }
}

Network::~Network() = default;

size_t
Network::forwarder_index(const std::string& name) const
{
  for (size_t i = 0; i < m_forwarders.size(); ++i) {
    if (m_forwarders[i].name == name)
      return i;
  }
  throw Error(Errc::InvalidConfig, "unknown forwarder '" + name + "'");
}

void
Network::attach(const std::string& node, Endpoint& endpoint, const std::string& forwarder)
{
  if (!is_valid_id(node))
    throw Error(Errc::InvalidConfig, "node id '" + node + "'");
  if (m_nodes.count(node))
    throw Error(Errc::InvalidConfig, "duplicate node '" + node + "'");
  for (const auto& f : m_forwarders) {
    if (f.name == node)
      throw Error(Errc::InvalidConfig, "node id '" + node + "' names a forwarder");
  }
  size_t fi = forwarder_index(forwarder);
  auto& f = m_forwarders[fi];
  NodeSlot slot;
  slot.endpoint = &endpoint;
  slot.forwarder = fi;
  slot.face = f.faces.size();
  slot.port = std::make_unique<Port>(*this, node);
  f.faces.push_back(Face{node, true, 0, 0});
  m_nodes.emplace(node, std::move(slot));
}

Environment&
Network::port(const std::string& node)
{
  auto it = m_nodes.find(node);
  if (it == m_nodes.end())
    throw Error(Errc::InvalidConfig, "unknown node '" + node + "'");
  return *it->second.port;
}

void
Network::register_prefix(const std::string& node, const std::string& prefix)
{
  auto it = m_nodes.find(node);
  if (it == m_nodes.end())
    throw Error(Errc::InvalidConfig, "unknown node '" + node + "'");
  split_path(prefix);
  const size_t home = it->second.forwarder;
  for (size_t fi = 0; fi < m_forwarders.size(); ++fi) {
    size_t face = fi == home ? it->second.face : m_next_face[fi][home];
    m_forwarders[fi].fib[prefix].insert(face);
  }
}

void
Network::declare_multicast(const std::string& prefix)
{
  split_path(prefix);
  for (auto& f : m_forwarders)
    f.fib[prefix];
}

Millis
Network::link_delay()
{
  return uniform(m_config.delay_min_ms, m_config.delay_max_ms);
}

uint64_t
Network::uniform(uint64_t lo, uint64_t hi)
{
  if (lo >= hi)
    return lo;
  return std::uniform_int_distribution<uint64_t>(lo, hi)(m_rng);
}

void
Network::push_event(Event event)
{
  event.seq = m_seq++;
  m_queue.push(std::move(event));
}

const std::set<size_t>*
Network::longest_match(const Forwarder& f, const std::string& name) const
{
  std::string_view prefix = name;
  while (!prefix.empty()) {
    auto it = f.fib.find(std::string(prefix));
    if (it != f.fib.end())
      return &it->second;
    auto slash = prefix.rfind('/');
    if (slash == std::string_view::npos || slash == 0)
      break;
    prefix = prefix.substr(0, slash);
  }
  return nullptr;
}

void
Network::submit(const std::string& node, Message message, std::optional<Millis> at)
{
  auto it = m_nodes.find(node);
  if (it == m_nodes.end())
    throw Error(Errc::InvalidConfig, "unknown node '" + node + "'");
  const Millis t = std::max(at.value_or(m_now), m_now);
  const auto& slot = it->second;
  const auto& f = m_forwarders[slot.forwarder];

  if (message.kind != MessageKind::ContentObject && longest_match(f, message.name) == nullptr) {
    TraceEvent e;
    e.t = t;
    e.kind = "no_route";
    e.from = node;
    e.to = f.name;
    e.name = message.name;
    e.payload_digest = hex_digest(message.payload);
    record(std::move(e));
    throw Error(Errc::NoRoute, message.name);
  }

  ++m_stats.submitted;
  ++m_stats.submitted_by_kind[std::string(to_string(message.kind))];

  const bool request = message.kind == MessageKind::Interest || message.kind == MessageKind::PushRequest;
  const bool lossy = m_config.loss_scope == LossScope::All || request;
  std::bernoulli_distribution lose(lossy ? m_config.loss_prob : 0.0);
  std::bernoulli_distribution dup(m_config.dup_prob);
  const bool lost = lose(m_rng);
  const bool twice = dup(m_rng);
  if (lost) {
    ++m_stats.dropped;
    TraceEvent e;
    e.t = t;
    e.kind = "drop";
    e.from = node;
    e.to = f.name;
    e.name = message.name;
    e.payload_digest = hex_digest(message.payload);
    e.detail = std::string(to_string(message.kind));
    record(std::move(e));
    return;
  }

  auto shared = std::make_shared<const Message>(std::move(message));
  const int copies = twice ? 2 : 1;
  if (twice)
    ++m_stats.duplicated;
  for (int c = 0; c < copies; ++c) {
    Event ev;
    ev.kind = Event::Kind::ToForwarder;
    ev.time = t + link_delay();
    ev.forwarder = slot.forwarder;
    ev.face = slot.face;
    ev.from = node;
    ev.message = shared;
    push_event(std::move(ev));
  }
}

void
Network::send_on_face(size_t forwarder, size_t face, std::shared_ptr<const Message> message, bool cache_hit)
{
  const auto& fc = m_forwarders[forwarder].faces[face];
  Event ev;
  ev.kind = fc.to_node ? Event::Kind::ToNode : Event::Kind::ToForwarder;
  ev.time = m_now + link_delay();
  ev.from = m_forwarders[forwarder].name;
  ev.message = std::move(message);
  ev.cache_hit = cache_hit;
  if (fc.to_node) {
    ev.node = fc.peer;
  }
  else {
    ev.forwarder = fc.peer_forwarder;
    ev.face = fc.peer_face;
  }
  push_event(std::move(ev));
}

uint64_t
Network::schedule_timer(const std::string& node, Millis at, uint64_t token)
{
  if (!m_nodes.count(node))
    throw Error(Errc::InvalidConfig, "unknown node '" + node + "'");
  Event ev;
  ev.kind = Event::Kind::Timer;
  ev.time = std::max(at, m_now);
  ev.node = node;
  ev.token = token;
  uint64_t id = m_seq;
  push_event(std::move(ev));
  return id;
}

void
Network::cancel_timer(uint64_t timer_id)
{
  m_cancelled.insert(timer_id);
}

void
Network::schedule(Millis at, std::function<void()> action)
{
  Event ev;
  ev.kind = Event::Kind::Action;
  ev.time = std::max(at, m_now);
  ev.action = std::make_shared<std::function<void()>>(std::move(action));
  push_event(std::move(ev));
}

void
Network::record(TraceEvent event)
{
  m_trace.push_back(std::move(event));
}

void
Network::set_down(const std::string& node, bool down)
{
  auto it = m_nodes.find(node);
  if (it == m_nodes.end())
    throw Error(Errc::InvalidConfig, "unknown node '" + node + "'");
  it->second.down = down;
}

bool
Network::is_down(const std::string& node) const
{
  auto it = m_nodes.find(node);
  return it != m_nodes.end() && it->second.down;
}

size_t
Network::pit_size(const std::string& forwarder) const
{
  return m_forwarders[forwarder_index(forwarder)].pit.size();
}

size_t
Network::cs_size(const std::string& forwarder) const
{
  return m_forwarders[forwarder_index(forwarder)].cs.size();
}

void
Network::trace_hop(const std::string& from, const std::string& to, const Message& message, bool cache_hit)
{
  TraceEvent e;
  e.t = m_now;
  e.kind = std::string(to_string(message.kind));
  e.from = from;
  e.to = to;
  e.name = message.name;
  e.payload_digest = hex_digest(message.payload);
  if (message.kind == MessageKind::ContentObject)
    e.cache_hit = cache_hit;
  record(std::move(e));
}

void
Network::on_interest(size_t fi, size_t in_face, const std::shared_ptr<const Message>& message)
{
  auto& f = m_forwarders[fi];
  Key key{message->name, fnv1a(message->payload)};

  auto cs = f.cs.find(key);
  if (cs != f.cs.end()) {
    if (m_now < cs->second.expiry) {
      ++m_stats.cache_hits;
      TraceEvent e;
      e.t = m_now;
      e.kind = "cache_serve";
      e.from = f.name;
      e.to = f.faces[in_face].peer;
      e.name = message->name;
      e.payload_digest = hex_digest(cs->second.content.payload);
      record(std::move(e));
      send_on_face(fi, in_face, std::make_shared<const Message>(cs->second.content), true);
      return;
    }
    f.cs.erase(cs);
  }

  auto pit = f.pit.find(key);
  if (pit != f.pit.end() && m_now < pit->second.expiry) {
    auto& faces = pit->second.faces;
    if (std::find(faces.begin(), faces.end(), in_face) == faces.end()) {
      faces.push_back(in_face);
      return;
    }
    // Same face again: a retransmission, forward it anew.
  }
  else {
    if (pit != f.pit.end())
      f.pit.erase(pit);
    pit = f.pit.emplace(key, PitEntry{{in_face}, 0}).first;
  }
  pit->second.expiry = m_now + m_config.interest_lifetime_ms;

  const auto* hops = longest_match(f, message->name);
  if (hops == nullptr || hops->empty()) {
    f.pit.erase(pit);
    TraceEvent e;
    e.t = m_now;
    e.kind = "no_route";
    e.from = f.name;
    e.name = message->name;
    e.payload_digest = hex_digest(message->payload);
    record(std::move(e));
    return;
  }
  size_t out = *hops->begin();
  for (size_t h : *hops) {
    if (h != in_face) {
      out = h;
      break;
    }
  }

  Event expire;
  expire.kind = Event::Kind::PitExpire;
  expire.time = pit->second.expiry;
  expire.forwarder = fi;
  expire.key = key;
  push_event(std::move(expire));

  send_on_face(fi, out, message);
}

void
Network::on_content(size_t fi, size_t /*in_face*/, const std::shared_ptr<const Message>& message)
{
  auto& f = m_forwarders[fi];
  Key key{message->name, message->request_digest};
  auto pit = f.pit.find(key);
  if (pit == f.pit.end() || m_now >= pit->second.expiry) {
    TraceEvent e;
    e.t = m_now;
    e.kind = "unsolicited";
    e.from = f.name;
    e.name = message->name;
    e.payload_digest = hex_digest(message->payload);
    record(std::move(e));
    return;
  }
  if (message->max_age_ms > 0) {
    f.cs[key] = CsEntry{*message, m_now + message->max_age_ms};
    TraceEvent e;
    e.t = m_now;
    e.kind = "cache_store";
    e.from = f.name;
    e.name = message->name;
    e.payload_digest = hex_digest(message->payload);
    e.max_age_ms = message->max_age_ms;
    record(std::move(e));
  }
  std::vector<size_t> faces = std::move(pit->second.faces);
  f.pit.erase(pit);
  for (size_t face : faces)
    send_on_face(fi, face, message);
}

void
Network::on_push(size_t fi, size_t in_face, const std::shared_ptr<const Message>& message)
{
  auto& f = m_forwarders[fi];
  const auto* hops = longest_match(f, message->name);
  if (hops == nullptr || hops->empty()) {
    TraceEvent e;
    e.t = m_now;
    e.kind = hops == nullptr ? "no_route" : "no_subscribers";
    e.from = f.name;
    e.name = message->name;
    e.payload_digest = hex_digest(message->payload);
    record(std::move(e));
    return;
  }
  const bool from_forwarder = !f.faces[in_face].to_node;
  for (size_t h : *hops) {
    if (from_forwarder && h == in_face)
      continue;
    send_on_face(fi, h, message);
  }
}

const Trace&
Network::run(std::optional<Millis> until)
{
  while (!m_queue.empty()) {
    if (until && m_queue.top().time > *until)
      break;
    Event ev = m_queue.top();
    m_queue.pop();
    m_now = ev.time;
    if (++m_stats.events > m_config.max_events)
      throw Error(Errc::LivelockGuard, "event cap " + std::to_string(m_config.max_events) + " exceeded");

    switch (ev.kind) {
    case Event::Kind::ToForwarder: {
      const auto& f = m_forwarders[ev.forwarder];
      trace_hop(ev.from, f.name, *ev.message, ev.cache_hit);
      switch (ev.message->kind) {
      case MessageKind::Interest:
        on_interest(ev.forwarder, ev.face, ev.message);
        break;
      case MessageKind::ContentObject:
        on_content(ev.forwarder, ev.face, ev.message);
        break;
      case MessageKind::PushRequest:
      case MessageKind::PushAck:
        on_push(ev.forwarder, ev.face, ev.message);
        break;
      }
      break;
    }
    case Event::Kind::ToNode: {
      auto& slot = m_nodes.at(ev.node);
      if (slot.down) {
        TraceEvent e;
        e.t = m_now;
        e.kind = "drop";
        e.from = ev.from;
        e.to = ev.node;
        e.name = ev.message->name;
        e.payload_digest = hex_digest(ev.message->payload);
        e.detail = "down";
        record(std::move(e));
        break;
      }
      ++m_stats.delivered;
      trace_hop(ev.from, ev.node, *ev.message, ev.cache_hit);
      slot.endpoint->on_message(*ev.message);
      break;
    }
    case Event::Kind::Timer: {
      if (m_cancelled.erase(ev.seq))
        break;
      auto& slot = m_nodes.at(ev.node);
      if (!slot.down)
        slot.endpoint->on_timer(ev.token);
      break;
    }
    case Event::Kind::Action:
      (*ev.action)();
      break;
    case Event::Kind::PitExpire: {
      auto& f = m_forwarders[ev.forwarder];
      auto it = f.pit.find(ev.key);
      if (it != f.pit.end() && it->second.expiry <= m_now)
        f.pit.erase(it);
      break;
    }
    }
  }
  return m_trace;
}

} // namespace ccnpaxos
