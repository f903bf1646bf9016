#include "ccnpaxos/node.hpp"

#include "ccnpaxos/error.hpp"

#include <algorithm>

namespace ccnpaxos {

namespace {

std::string_view
reason_name(NackReason r)
{
  switch (r) {
  case NackReason::Unspecified:
    return "unspecified";
  case NackReason::NotFound:
    return "not_found";
  case NackReason::NotMaster:
    return "not_master";
  case NackReason::BadVerbPayload:
    return "bad_verb_payload";
  case NackReason::UnknownGrpver:
    return "unknown_grpver";
  case NackReason::Malformed:
    return "malformed";
  }
  return "unspecified";
}

std::string
round_id(const std::string& var, const BallotNumber& ballot)
{
  return var + "|" + to_string(ballot);
}

} // namespace

std::string_view
to_string(Mode mode) noexcept
{
  return mode == Mode::Individual ? "individual" : "multicast";
}

Mode
parse_mode(std::string_view text)
{
  if (text == "individual")
    return Mode::Individual;
  if (text == "multicast")
    return Mode::Multicast;
  throw Error(Errc::InvalidConfig, "mode must be individual or multicast, got '" + std::string(text) + "'");
}

void
NodeConfig::validate() const
{
  if (!is_valid_id(id))
    throw Error(Errc::InvalidConfig, "node id '" + id + "'");
  try {
    if (split_path(prefix).empty())
      throw Error(Errc::InvalidConfig, "empty prefix");
    if (learner) {
      if (learn_prefix.empty() || split_path(learn_prefix).empty())
        throw Error(Errc::InvalidConfig, "learner '" + id + "' needs a learn prefix");
      if (has_path_prefix(learn_prefix, prefix) || has_path_prefix(prefix, learn_prefix))
        throw Error(Errc::InvalidConfig, "learn prefix of '" + id + "' overlaps its node prefix");
    }
  }
  catch (const Error& e) {
    if (e.code() == Errc::InvalidConfig)
      throw;
    throw Error(Errc::InvalidConfig, "node '" + id + "': " + e.what());
  }
  if (!is_valid_component(prg))
    throw Error(Errc::InvalidConfig, "prg '" + prg + "'");
  if (tick_ms == 0)
    throw Error(Errc::InvalidConfig, "tick_ms must be positive");
  if (retry.backoff_ms == 0)
    throw Error(Errc::InvalidConfig, "retry backoff must be positive");
}

Node::Node(NodeConfig config, GroupConfig initial, Environment& env)
  : m_config(std::move(config))
  , m_env(env)
  , m_registry(std::move(initial))
  , m_grp(m_registry.latest().grp)
{
  m_config.validate();
}

// --- plumbing ---------------------------------------------------------------

Node::Var&
Node::var(const std::string& name)
{
  auto it = m_vars.find(name);
  if (it != m_vars.end())
    return it->second;
  it = m_vars.emplace(name, Var(VarKey{m_grp, m_config.prg, name})).first;
  if (m_config.proposer) {
    ProposerOptions opts;
    opts.my_id = m_config.id;
    opts.priority = m_config.priority;
    opts.base_iter = name == kAcceptorsVar ? m_registry.membership_base() : 0;
    opts.selection = m_config.selection;
    it->second.proposer.emplace(std::move(opts));
  }
  return it->second;
}

std::pair<uint64_t, uint64_t>
Node::set_timer(Millis delay, std::function<void()> fn)
{
  uint64_t token = m_next_token++;
  m_actions.emplace(token, std::move(fn));
  return {m_env.set_timer(delay, token), token};
}

void
Node::cancel(std::pair<uint64_t, uint64_t> timer)
{
  if (m_actions.erase(timer.second))
    m_env.cancel_timer(timer.first);
}

void
Node::on_timer(uint64_t token)
{
  auto it = m_actions.find(token);
  if (it == m_actions.end())
    return;
  auto fn = std::move(it->second);
  m_actions.erase(it);
  fn();
}

void
Node::record(TraceEvent e)
{
  m_env.record(std::move(e));
}

TraceEvent
Node::event(std::string kind, const Var& v) const
{
  TraceEvent e;
  e.t = m_env.now();
  e.kind = std::move(kind);
  e.from = m_config.id;
  e.name = v.key.path();
  return e;
}

Payload
Node::payload(Body body) const
{
  Payload p;
  p.body = std::move(body);
  p.origin = m_config.id;
  return p;
}

std::string
Node::suffix(const std::string& var, Verb verb, const std::optional<BallotNumber>& ballot,
             std::optional<uint64_t> iter) const
{
  std::string s = "/" + m_grp + "/" + m_config.prg + "/" + var + "/" + std::string(to_string(verb));
  if (ballot)
    s += "/" + to_string(*ballot);
  if (iter)
    s += "/" + std::to_string(*iter);
  return s;
}

// --- reliable delivery ------------------------------------------------------

void
Node::send_unicast(const std::string& round, const std::string& tag, const std::string& peer, Message message,
                   const std::string& mc_suffix)
{
  std::string key = message.kind == MessageKind::Interest
                      ? "i:" + message.name + "#" + std::to_string(message.request_digest)
                      : "m:" + mc_suffix + "@" + peer;
  auto it = m_outstanding.find(key);
  if (it != m_outstanding.end()) {
    m_env.send(std::move(message));
    return;
  }
  Outstanding o;
  o.round = round;
  o.tag = tag;
  o.awaiting.insert(peer);
  o.unicast.emplace(peer, message);
  o.sends = 1;
  m_outstanding.emplace(key, std::move(o));
  m_env.send(std::move(message));
  arm(key);
}

void
Node::send_group(const std::string& round, const std::string& tag, std::set<std::string> awaiting, Message message,
                 const std::string& mc_suffix)
{
  std::string key = "m:" + mc_suffix;
  Outstanding o;
  o.round = round;
  o.tag = tag;
  o.group = message;
  o.awaiting = std::move(awaiting);
  o.sends = 1;
  auto old = m_outstanding.find(key);
  if (old != m_outstanding.end()) {
    cancel(old->second.timer);
    m_outstanding.erase(old);
  }
  m_outstanding.emplace(key, std::move(o));
  m_env.send(std::move(message));
  arm(key);
}

void
Node::arm(const std::string& key)
{
  auto& o = m_outstanding.at(key);
  o.timer = set_timer(m_config.retry.backoff_ms, [this, key] { retransmit(key); });
}

void
Node::retransmit(const std::string& key)
{
  auto it = m_outstanding.find(key);
  if (it == m_outstanding.end())
    return;
  auto& o = it->second;
  if (o.sends > m_config.retry.count) {
    Outstanding dead = std::move(o);
    m_outstanding.erase(it);
    for (const auto& peer : dead.awaiting) {
      TraceEvent e;
      e.t = m_env.now();
      e.kind = "unreachable";
      e.from = m_config.id;
      e.to = peer;
      e.name = dead.group ? dead.group->name : dead.unicast.at(peer).name;
      e.detail = dead.tag;
      record(std::move(e));
    }
    if (!dead.round.empty()) {
      auto bar = dead.round.find('|');
      auto vit = m_vars.find(dead.round.substr(0, bar));
      if (vit != m_vars.end() && vit->second.proposer) {
        auto& v = vit->second;
        if (v.proposer->phase() != Proposer::Phase::Idle &&
            round_id(v.key.var, v.proposer->ballot()) == dead.round) {
          abandon(v);
          schedule_backoff(v);
        }
      }
    }
    return;
  }
  ++o.sends;
  if (o.group) {
    m_env.send(*o.group);
  }
  else {
    for (const auto& peer : o.awaiting)
      m_env.send(o.unicast.at(peer));
  }
  arm(key);
}

void
Node::resolve(const std::string& key, const std::string& origin)
{
  auto it = m_outstanding.find(key);
  if (it == m_outstanding.end())
    return;
  auto& o = it->second;
  if (o.group) {
    o.awaiting.erase(origin);
    if (!o.awaiting.empty())
      return;
  }
  cancel(o.timer);
  m_outstanding.erase(it);
}

void
Node::cancel_where(const std::function<bool(const Outstanding&)>& pred)
{
  for (auto it = m_outstanding.begin(); it != m_outstanding.end();) {
    if (pred(it->second)) {
      cancel(it->second.timer);
      it = m_outstanding.erase(it);
    }
    else {
      ++it;
    }
  }
}

void
Node::reply(const Message& request, const Payload& response, const std::optional<std::string>& response_target,
            const std::string& mc_suffix)
{
  if (request.kind == MessageKind::Interest) {
    m_env.send(make_content(request, response, m_config.max_age_ms));
    return;
  }
  if (!response_target)
    return;
  std::string name = *response_target + mc_suffix;
  if (std::holds_alternative<Ack>(response.body))
    m_env.send(make_push_ack(std::move(name), response));
  else
    m_env.send(make_push(std::move(name), response));
}

// --- workload ---------------------------------------------------------------

void
Node::start()
{
  m_env.register_prefix(m_config.prefix);
  if (m_config.learner)
    m_env.register_prefix(m_config.learn_prefix);
  if (m_config.acceptor && m_config.mode == Mode::Multicast) {
    for (const auto& [g, cfg] : m_registry.versions()) {
      if (cfg.contains(m_config.id) && m_subscribed.insert(g).second)
        m_env.register_prefix(cfg.multicast_prefix());
    }
  }
}

void
Node::propose(const std::string& name, Value value, std::optional<uint64_t> iter)
{
  Var& v = var(name);
  auto e = event("propose", v);
  e.value = describe(value);
  e.iter = iter;
  record(std::move(e));
  if (!v.proposer) {
    record(event("propose_ignored", v));
    return;
  }
  v.queue.push_back(Item{std::move(value), iter, false});
  drive(v);
}

void
Node::propose_membership(const MembershipChange& change)
{
  Value value;
  try {
    value = propose_membership_change(m_registry.latest(), change);
  }
  catch (const Error& e) {
    auto ev = event("propose_invalid", var(std::string(kAcceptorsVar)));
    ev.detail = e.what();
    record(std::move(ev));
    return;
  }
  propose(std::string(kAcceptorsVar), std::move(value));
}

void
Node::propose_learner(const std::string& target)
{
  Value value;
  try {
    value = propose_learner_change(m_registry.latest(), target);
  }
  catch (const Error& e) {
    auto ev = event("propose_invalid", var(std::string(kLearnerVar)));
    ev.detail = e.what();
    record(std::move(ev));
    return;
  }
  propose(std::string(kLearnerVar), std::move(value));
}

void
Node::contend_for_master()
{
  Var& v = var(std::string(kMasterVar));
  if (!v.proposer)
    return;
  uint64_t epoch = v.log.empty() ? 0 : v.log.rbegin()->first + 1;
  Value value = Value::link(descriptor());
  auto e = event("propose", v);
  e.value = describe(value);
  e.iter = epoch;
  record(std::move(e));
  v.queue.push_back(Item{std::move(value), epoch, true});
  drive(v);
}

void
Node::fill_noops(const std::string& name)
{
  Var& v = var(name);
  if (!v.proposer)
    return;
  v.fill_requested = true;
  drive(v);
}

void
Node::read(const std::string& target_prefix, const std::string& name, std::optional<uint64_t> iter)
{
  Var& v = var(name);
  auto e = event("read", v);
  e.to = target_prefix;
  e.iter = iter;
  record(std::move(e));
  Message m = make_interest(target_prefix + suffix(name, Verb::Read, std::nullopt, iter), payload(ReadReq{}));
  send_unicast("", "read", "*", std::move(m), "");
}

void
Node::restart()
{
  m_actions.clear();
  for (auto& [key, o] : m_outstanding)
    arm(key);
  for (auto& [name, v] : m_vars) {
    v.backoff.reset();
    if (v.proposer && v.proposer->phase() == Proposer::Phase::Preparing)
      abandon(v);
    drive(v);
  }
}

std::map<uint64_t, LogEntry>
Node::learned(const std::string& name) const
{
  auto it = m_vars.find(name);
  if (it == m_vars.end())
    return {};
  return it->second.log;
}

std::vector<std::string>
Node::variables() const
{
  std::vector<std::string> out;
  for (const auto& [name, v] : m_vars)
    out.push_back(name);
  return out;
}

const Proposer*
Node::proposer(const std::string& name) const
{
  auto it = m_vars.find(name);
  if (it == m_vars.end() || !it->second.proposer)
    return nullptr;
  return &*it->second.proposer;
}

const Acceptor*
Node::acceptor(const std::string& name) const
{
  auto it = m_vars.find(name);
  if (it == m_vars.end())
    return nullptr;
  return &it->second.acceptor;
}

// --- proposer ---------------------------------------------------------------

bool
Node::has_work(const Var& v) const
{
  return !v.queue.empty() || !v.in_flight.empty() || v.fill_requested;
}

void
Node::drive(Var& v)
{
  if (!v.proposer || v.gave_up)
    return;
  switch (v.proposer->phase()) {
  case Proposer::Phase::Master:
    flush(v);
    break;
  case Proposer::Phase::Preparing:
    break;
  case Proposer::Phase::Idle:
    if (has_work(v) && !v.backoff)
      begin_round(v);
    break;
  }
}

void
Node::begin_round(Var& v)
{
  if (v.failed_rounds >= m_config.max_rounds) {
    v.gave_up = true;
    v.queue.clear();
    v.in_flight.clear();
    v.fill_requested = false;
    record(event("gave_up", v));
    return;
  }
  ++v.failed_rounds;
  auto& p = *v.proposer;
  auto start = p.start_round(m_registry.latest());
  const std::string rid = round_id(v.key.var, start.ballot);

  auto e = event("round", v);
  e.ballot = to_string(start.ballot);
  e.grpver = start.grpver;
  record(std::move(e));

  const std::string sfx = suffix(v.key.var, Verb::Prepare, start.ballot, std::nullopt);
  if (m_config.mode == Mode::Individual) {
    for (const auto& s : start.sends)
      send_unicast(rid, "prepare", s.to.id, make_interest(s.to.prefix + sfx, payload(PrepareReq{})), "");
  }
  else {
    Payload pl = payload(PrepareReq{});
    pl.response_target = m_config.prefix;
    std::string name = "/" + m_grp + "/v" + std::to_string(start.grpver) + "/" + m_config.prg + "/" + v.key.var +
                       "/prepare/" + to_string(start.ballot);
    std::set<std::string> awaiting;
    for (const auto& s : start.sends)
      awaiting.insert(s.to.id);
    send_group(rid, "prepare", std::move(awaiting), make_push(std::move(name), pl), sfx);
  }
}

void
Node::schedule_backoff(Var& v)
{
  if (v.backoff || !v.proposer)
    return;
  Millis delay = m_env.uniform(1, 4) * m_config.tick_ms;
  std::string name = v.key.var;
  v.backoff = set_timer(delay, [this, name] {
    Var& w = var(name);
    w.backoff.reset();
    drive(w);
  });
}

void
Node::abandon(Var& v)
{
  const std::string prefix = v.key.var + "|";
  cancel_where([&prefix](const Outstanding& o) { return o.round.compare(0, prefix.size(), prefix) == 0; });
  v.proposer->abandon();
}

void
Node::lose_item(Var& v, Item item, const char* why)
{
  if (item.drop_if_lost || item.iter) {
    auto e = event("propose_dropped", v);
    e.value = describe(item.value);
    e.iter = item.iter;
    e.detail = why;
    record(std::move(e));
    return;
  }
  v.queue.push_front(std::move(item));
}

void
Node::settle_in_flight(Var& v, uint64_t iter, const Value& chosen)
{
  auto it = v.in_flight.find(iter);
  if (it == v.in_flight.end())
    return;
  Item item = std::move(it->second);
  v.in_flight.erase(it);
  if (!(item.value == chosen))
    lose_item(v, std::move(item), "lost");
}

void
Node::become_master(Var& v, const Proposer::PromiseOutcome& out)
{
  auto& p = *v.proposer;
  const std::string rid = round_id(v.key.var, p.ballot());
  v.failed_rounds = 0;
  cancel_where([&rid](const Outstanding& o) { return o.round == rid && o.tag == "prepare"; });

  const GroupConfig group = *p.round_group();
  auto e = event("master", v);
  e.ballot = to_string(p.ballot());
  e.grpver = group.grpver;
  e.acks = out.acks;
  e.quorum = out.quorum;
  record(std::move(e));

  send_accepts(v, out.sends);

  std::vector<uint64_t> iters;
  for (const auto& [iter, item] : v.in_flight)
    iters.push_back(iter);
  for (uint64_t iter : iters) {
    const Item& item = v.in_flight.at(iter);
    if (auto c = p.chosen().find(iter); c != p.chosen().end()) {
      settle_in_flight(v, iter, c->second.value);
    }
    else if (auto q = p.pending().find(iter); q != p.pending().end()) {
      if (!(q->second.value == item.value)) {
        Item lost = item;
        v.in_flight.erase(iter);
        lose_item(v, std::move(lost), "displaced");
      }
    }
    else {
      send_accepts(v, p.submit_at(iter, item.value, group));
    }
  }

  send_accepts(v, p.fill_noops(p.next_iter(), group));
  v.fill_requested = false;
  flush(v);
}

void
Node::flush(Var& v)
{
  auto& p = *v.proposer;
  if (p.phase() != Proposer::Phase::Master)
    return;
  const GroupConfig group = *p.round_group();
  while (!v.queue.empty()) {
    Item item = std::move(v.queue.front());
    v.queue.pop_front();
    std::vector<Proposer::AcceptSend> sends;
    if (item.iter) {
      const uint64_t i = *item.iter;
      if (auto c = p.chosen().find(i); c != p.chosen().end()) {
        if (!(c->second.value == item.value))
          lose_item(v, std::move(item), "taken");
        continue;
      }
      if (i < p.options().base_iter || p.pending().count(i)) {
        lose_item(v, std::move(item), "taken");
        continue;
      }
      sends = p.submit_at(i, item.value, group);
    }
    else {
      sends = p.submit(item.value, group);
    }
    const uint64_t iter = sends.front().iter;
    v.in_flight[iter] = std::move(item);
    send_accepts(v, sends);
  }
  if (v.fill_requested) {
    v.fill_requested = false;
    send_accepts(v, p.fill_noops(p.next_iter(), group));
  }
}

void
Node::send_accepts(Var& v, const std::vector<Proposer::AcceptSend>& sends)
{
  if (sends.empty())
    return;
  const std::string rid = round_id(v.key.var, sends.front().ballot);
  if (m_config.mode == Mode::Individual) {
    for (const auto& s : sends) {
      std::string name = s.to.prefix + suffix(v.key.var, Verb::Accept, s.ballot, s.iter);
      send_unicast(rid, "accept/" + std::to_string(s.iter), s.to.id,
                   make_interest(std::move(name), payload(AcceptReq{s.value, s.grpver})), "");
    }
    return;
  }
  size_t i = 0;
  while (i < sends.size()) {
    const auto& first = sends[i];
    std::set<std::string> awaiting;
    size_t j = i;
    while (j < sends.size() && sends[j].iter == first.iter) {
      awaiting.insert(sends[j].to.id);
      ++j;
    }
    Payload pl = payload(AcceptReq{first.value, first.grpver});
    pl.response_target = m_config.prefix;
    std::string name = "/" + m_grp + "/v" + std::to_string(first.grpver) + "/" + m_config.prg + "/" + v.key.var +
                       "/accept/" + to_string(first.ballot) + "/" + std::to_string(first.iter);
    send_group(rid, "accept/" + std::to_string(first.iter), std::move(awaiting), make_push(std::move(name), pl),
               suffix(v.key.var, Verb::Accept, first.ballot, first.iter));
    i = j;
  }
}

void
Node::on_prepare_resp(Var& v, const std::string& origin, const BallotNumber& ballot, const PrepareResp& resp)
{
  if (!v.proposer)
    return;
  auto out = v.proposer->on_promise(origin, ballot, resp);
  switch (out.status) {
  case Proposer::PromiseOutcome::Status::Stale:
  case Proposer::PromiseOutcome::Status::Recorded:
    break;
  case Proposer::PromiseOutcome::Status::Denied: {
    auto e = event("preempted", v);
    e.ballot = to_string(ballot);
    e.detail = "prepare";
    record(std::move(e));
    const std::string prefix = v.key.var + "|";
    cancel_where([&prefix](const Outstanding& o) { return o.round.compare(0, prefix.size(), prefix) == 0; });
    schedule_backoff(v);
    break;
  }
  case Proposer::PromiseOutcome::Status::BecameMaster:
    become_master(v, out);
    break;
  }
}

void
Node::on_accept_resp(Var& v, const std::string& origin, const BallotNumber& ballot, uint64_t iter,
                     const AcceptResp& resp)
{
  if (!v.proposer)
    return;
  auto out = v.proposer->on_accept_resp(origin, ballot, iter, resp);
  switch (out.status) {
  case Proposer::AcceptOutcome::Status::Stale:
  case Proposer::AcceptOutcome::Status::Recorded:
    break;
  case Proposer::AcceptOutcome::Status::Chosen: {
    const std::string rid = round_id(v.key.var, ballot);
    const std::string tag = "accept/" + std::to_string(iter);
    cancel_where([&](const Outstanding& o) { return o.round == rid && o.tag == tag; });
    auto e = event("chosen", v);
    e.iter = iter;
    e.ballot = to_string(out.chosen->ballot);
    e.value = describe(out.chosen->value);
    e.grpver = out.grpver;
    e.acks = out.acks;
    e.quorum = out.quorum;
    record(std::move(e));
    settle_in_flight(v, iter, out.chosen->value);
    break;
  }
  case Proposer::AcceptOutcome::Status::Preempted: {
    auto e = event("preempted", v);
    e.ballot = to_string(ballot);
    e.iter = iter;
    e.detail = "accept";
    record(std::move(e));
    const std::string prefix = v.key.var + "|";
    cancel_where([&prefix](const Outstanding& o) { return o.round.compare(0, prefix.size(), prefix) == 0; });
    schedule_backoff(v);
    break;
  }
  }
}

// --- acceptor / learner -----------------------------------------------------

Payload
Node::handle_prepare(Var& v, const BallotNumber& ballot, uint64_t from_iter)
{
  PrepareResp resp = v.acceptor.on_prepare(ballot, from_iter);
  if (v.proposer)
    v.proposer->observe(ballot);
  return payload(std::move(resp));
}

Payload
Node::handle_accept(Var& v, const BallotNumber& ballot, uint64_t iter, const AcceptReq& req)
{
  auto out = v.acceptor.on_accept(ballot, iter, req.value, m_registry.learner_target(), req.grpver);
  if (v.proposer)
    v.proposer->observe(ballot);
  if (out.notify) {
    const auto& n = *out.notify;
    const std::string sfx = suffix(v.key.var, Verb::Learn, n.entry.ballot, n.entry.iter);
    Payload pl = payload(Learn{{n.entry}, n.grpver});
    if (m_config.mode == Mode::Individual) {
      send_unicast("", "report", "*", make_interest(n.target + sfx, pl), "");
    }
    else {
      pl.response_target = m_config.prefix;
      send_unicast("", "report", "*", make_push(n.target + sfx, pl), sfx);
    }
  }
  return payload(std::move(out.resp));
}

void
Node::handle_report(const Message& message, const ConsensusName& name, const Payload& p)
{
  const std::string sfx = message.name.substr(m_config.learn_prefix.size());
  const auto* learn = std::get_if<Learn>(&p.body);
  if (!learn || !p.origin || name.verb != Verb::Learn) {
    reply(message, payload(Nack{NackReason::BadVerbPayload, {}}), p.response_target, sfx);
    return;
  }
  Var& v = var(name.var);
  Learner::Outcome out;
  try {
    out = v.learner.on_learn(*p.origin, learn->entries, learn->grpver, m_registry);
  }
  catch (const Error& e) {
    if (e.code() != Errc::UnknownGrpver)
      throw;
    reply(message, payload(Nack{NackReason::UnknownGrpver, {}}), p.response_target, sfx);
    return;
  }
  reply(message, payload(Ack{}), p.response_target, sfx);
  if (out.learned.empty())
    return;

  for (const auto& l : out.learned)
    apply_learned(v, l.entry, l.grpver, l.votes);

  std::vector<Member> targets;
  auto add = [&](const Member& m) {
    if (m.id == m_config.id)
      return;
    for (const auto& t : targets) {
      if (t.id == m.id)
        return;
    }
    targets.push_back(m);
  };
  for (const auto& m : out.notify)
    add(m);
  for (const auto& m : m_registry.latest().members)
    add(m);
  for (const auto& m : m_registry.latest().observers)
    add(m);

  const auto agg = learner_aggregate(out.announcement.entries, out.announcement.grpver);
  const std::string asfx = suffix(v.key.var, Verb::Learn, agg.ballot, agg.learn.entries.front().iter);
  for (const auto& m : targets) {
    Payload pl = payload(agg.learn);
    if (m_config.mode == Mode::Individual) {
      send_unicast("", "announce", m.id, make_interest(m.prefix + asfx, pl), "");
    }
    else {
      pl.response_target = m_config.prefix;
      send_unicast("", "announce", m.id, make_push(m.prefix + asfx, pl), asfx);
    }
  }
}

void
Node::handle_announcement(const Message& message, const ConsensusName& name, const Payload& p)
{
  const std::string sfx = message.name.substr(m_config.prefix.size());
  const auto* learn = std::get_if<Learn>(&p.body);
  if (!learn) {
    reply(message, payload(Nack{NackReason::BadVerbPayload, {}}), p.response_target, sfx);
    return;
  }
  Var& v = var(name.var);
  for (const auto& entry : learn->entries)
    apply_learned(v, entry, learn->grpver, std::nullopt);
  reply(message, payload(Ack{}), p.response_target, sfx);
}

Payload
Node::handle_read(Var& v, const ConsensusName& name)
{
  if (v.proposer && v.proposer->phase() == Proposer::Phase::Master) {
    auto r = v.proposer->on_read(name.ballot, name.iter);
    if (auto* resp = std::get_if<ReadResp>(&r))
      return payload(std::move(*resp));
    return payload(std::get<Nack>(std::move(r)));
  }
  Nack nack{NackReason::NotMaster, m_master.value_or("")};
  auto e = event("read_redirect", v);
  e.iter = name.iter;
  e.detail = nack.hint;
  record(std::move(e));
  return payload(std::move(nack));
}

void
Node::on_read_result(const ConsensusName& name, const Payload& p)
{
  Var& v = var(name.var);
  if (const auto* nack = std::get_if<Nack>(&p.body)) {
    auto e = event("read_result", v);
    e.iter = name.iter;
    e.detail = "nack:" + std::string(reason_name(nack->reason));
    if (!nack->hint.empty())
      *e.detail += " hint=" + nack->hint;
    record(std::move(e));
    return;
  }
  const auto* resp = std::get_if<ReadResp>(&p.body);
  if (!resp)
    return;
  if (resp->found.empty()) {
    auto e = event("read_result", v);
    e.iter = name.iter;
    e.detail = "empty";
    record(std::move(e));
    return;
  }
  for (const auto& entry : resp->found) {
    auto e = event("read_result", v);
    e.iter = entry.iter;
    e.ballot = to_string(entry.ballot);
    e.value = describe(entry.value);
    e.detail = "found";
    record(std::move(e));
  }
}

void
Node::apply_learned(Var& v, const LogEntry& entry, uint64_t grpver, std::optional<size_t> votes)
{
  auto [it, inserted] = v.log.emplace(entry.iter, entry);
  if (!inserted && it->second.value == entry.value)
    return;

  auto e = event("learned", v);
  e.iter = entry.iter;
  e.ballot = to_string(entry.ballot);
  e.value = describe(entry.value);
  e.grpver = grpver;
  if (votes) {
    e.acks = *votes;
    if (m_registry.knows(grpver))
      e.quorum = m_registry.at(grpver).majority();
  }
  record(std::move(e));
  if (!inserted)
    return;

  if (v.proposer) {
    v.proposer->on_learned(entry);
    settle_in_flight(v, entry.iter, entry.value);
  }

  const std::string& name = v.key.var;
  if (name == kAcceptorsVar) {
    for (uint64_t g : m_registry.on_membership_learned(entry.iter, entry.value))
      on_new_grpver(g);
  }
  else if (name == kLearnerVar) {
    if (m_registry.on_learner_learned(entry.iter, entry.value)) {
      auto ev = event("learner_changed", v);
      ev.detail = m_registry.learner_target();
      record(std::move(ev));
    }
  }
  else if (name == kMasterVar && entry.value.kind == ValueKind::Link) {
    m_master = entry.value.bytes;
    if (m_config.proposer) {
      auto ev = event(entry.value.bytes == descriptor() ? "elected" : "follower", v);
      ev.iter = entry.iter;
      ev.value = describe(entry.value);
      record(std::move(ev));
    }
  }
}

void
Node::on_new_grpver(uint64_t grpver)
{
  const GroupConfig& cfg = m_registry.at(grpver);
  TraceEvent e;
  e.t = m_env.now();
  e.kind = "grpver";
  e.from = m_config.id;
  e.name = "/" + m_grp;
  e.grpver = grpver;
  e.quorum = cfg.majority();
  std::string members;
  for (const auto& m : cfg.members)
    members += (members.empty() ? "" : ",") + m.id;
  e.detail = members;
  record(std::move(e));

  if (m_config.acceptor && m_config.mode == Mode::Multicast && cfg.contains(m_config.id) &&
      m_subscribed.insert(grpver).second)
    m_env.register_prefix(cfg.multicast_prefix());

  for (auto& [name, v] : m_vars) {
    if (v.proposer && v.proposer->phase() != Proposer::Phase::Idle) {
      abandon(v);
      drive(v);
    }
  }
}

// --- dispatch ---------------------------------------------------------------

void
Node::reject(const Message& message, const std::string& why)
{
  TraceEvent e;
  e.t = m_env.now();
  e.kind = "reject";
  e.from = m_config.id;
  e.name = message.name;
  e.payload_digest = hex_digest(message.payload);
  e.detail = why;
  record(std::move(e));
}

void
Node::on_message(const Message& message)
{
  Payload p;
  try {
    p = decode_payload(message.payload);
  }
  catch (const Error& e) {
    reject(message, e.what());
    return;
  }

  const bool nack_unknown = [&p] {
    const auto* n = std::get_if<Nack>(&p.body);
    return n && n->reason == NackReason::UnknownGrpver;
  }();

  try {
    switch (message.kind) {
    case MessageKind::Interest: {
      auto name = parse_name(message.name, Scheme::Individual);
      if (m_config.learner && has_path_prefix(message.name, m_config.learn_prefix))
        handle_report(message, name, p);
      else if (has_path_prefix(message.name, m_config.prefix))
        on_request(message, name, p);
      else
        reject(message, "misrouted");
      break;
    }
    case MessageKind::ContentObject: {
      if (!nack_unknown)
        resolve("i:" + message.name + "#" + std::to_string(message.request_digest), "");
      auto name = parse_name(message.name, Scheme::Individual);
      on_response(message, name, p);
      break;
    }
    case MessageKind::PushRequest: {
      const std::string group_head = "/" + m_grp + "/v";
      if (message.name.compare(0, group_head.size(), group_head) == 0) {
        auto name = parse_name(message.name, Scheme::Group);
        on_request(message, name, p);
      }
      else if (m_config.learner && has_path_prefix(message.name, m_config.learn_prefix)) {
        handle_report(message, parse_name(message.name, Scheme::Individual), p);
      }
      else if (has_path_prefix(message.name, m_config.prefix)) {
        auto name = parse_name(message.name, Scheme::Individual);
        if (std::holds_alternative<Learn>(p.body)) {
          on_request(message, name, p);
        }
        else {
          if (!nack_unknown && p.origin) {
            const std::string sfx = message.name.substr(m_config.prefix.size());
            resolve("m:" + sfx, *p.origin);
          }
          on_response(message, name, p);
        }
      }
      else {
        reject(message, "misrouted");
      }
      break;
    }
    case MessageKind::PushAck: {
      if (!has_path_prefix(message.name, m_config.prefix) || !p.origin) {
        reject(message, "misrouted");
        break;
      }
      if (nack_unknown)
        break;
      const std::string sfx = message.name.substr(m_config.prefix.size());
      const std::string direct = "m:" + sfx + "@" + *p.origin;
      if (m_outstanding.count(direct))
        resolve(direct, *p.origin);
      else
        resolve("m:" + sfx + "@*", *p.origin);
      break;
    }
    }
  }
  catch (const Error& e) {
    reject(message, e.what());
  }
}

void
Node::on_request(const Message& message, const ConsensusName& name, const Payload& p)
{
  if (name.grp != m_grp || name.prg != m_config.prg) {
    reject(message, "foreign group");
    return;
  }
  const std::string sfx = name.scheme == Scheme::Group ? suffix(name.var, name.verb, name.ballot, name.iter)
                                                       : message.name.substr(m_config.prefix.size());
  auto bad = [&] { reply(message, payload(Nack{NackReason::BadVerbPayload, {}}), p.response_target, sfx); };
  if (message.kind == MessageKind::PushRequest && !p.response_target && name.scheme == Scheme::Group) {
    reject(message, "missing response target");
    return;
  }

  Var& v = var(name.var);
  switch (name.verb) {
  case Verb::Prepare:
    if (!m_config.acceptor || !name.ballot) {
      reject(message, "not an acceptor");
      return;
    }
    if (!std::holds_alternative<PrepareReq>(p.body))
      return bad();
    reply(message, handle_prepare(v, *name.ballot, name.iter.value_or(0)), p.response_target, sfx);
    break;
  case Verb::Accept: {
    const auto* req = std::get_if<AcceptReq>(&p.body);
    if (!m_config.acceptor || !name.ballot || !name.iter) {
      reject(message, "not an acceptor");
      return;
    }
    if (!req)
      return bad();
    reply(message, handle_accept(v, *name.ballot, *name.iter, *req), p.response_target, sfx);
    break;
  }
  case Verb::Read:
    if (!std::holds_alternative<ReadReq>(p.body))
      return bad();
    reply(message, handle_read(v, name), p.response_target, sfx);
    break;
  case Verb::Learn:
    handle_announcement(message, name, p);
    break;
  }
}

void
Node::on_response(const Message& message, const ConsensusName& name, const Payload& p)
{
  if (name.grp != m_grp || name.prg != m_config.prg) {
    reject(message, "foreign group");
    return;
  }
  Var& v = var(name.var);
  switch (name.verb) {
  case Verb::Prepare:
    if (const auto* resp = std::get_if<PrepareResp>(&p.body); resp && p.origin && name.ballot)
      on_prepare_resp(v, *p.origin, *name.ballot, *resp);
    break;
  case Verb::Accept:
    if (const auto* resp = std::get_if<AcceptResp>(&p.body); resp && p.origin && name.ballot && name.iter)
      on_accept_resp(v, *p.origin, *name.ballot, *name.iter, *resp);
    break;
  case Verb::Read:
    on_read_result(name, p);
    break;
  case Verb::Learn:
    break;
  }
}

} // namespace ccnpaxos
