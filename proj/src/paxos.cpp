#include "ccnpaxos/paxos.hpp"

#include "ccnpaxos/error.hpp"

#include <algorithm>

namespace ccnpaxos {

std::string
VarKey::path() const
{
  return "/" + grp + "/" + prg + "/" + var;
}

// --- Acceptor ---------------------------------------------------------------

PrepareResp
Acceptor::on_prepare(const BallotNumber& ballot, uint64_t from_iter)
{
  AcceptorTransition t{AcceptorTransition::Kind::Prepare, ballot, from_iter, false, m_promised, {}};
  PrepareResp resp;
  // Equal ballots re-ack: a ballot belongs to one proposer, so this is a
  // retransmission of the same prepare.
  if (!m_promised || ballot >= *m_promised) {
    m_promised = ballot;
    resp.ack = true;
    resp.current_max = ballot;
    for (auto it = m_accepted.lower_bound(from_iter); it != m_accepted.end(); ++it)
      resp.priors.push_back({it->second.ballot, it->first, it->second.value});
  }
  else {
    resp.ack = false;
    resp.current_max = *m_promised;
  }
  if (m_hook) {
    t.ack = resp.ack;
    t.promised_after = m_promised;
    m_hook(t);
  }
  return resp;
}

Acceptor::AcceptOutcome
Acceptor::on_accept(const BallotNumber& ballot, uint64_t iter, const Value& value,
                    const std::string& learner_target, uint64_t grpver)
{
  AcceptorTransition t{AcceptorTransition::Kind::Accept, ballot, iter, false, m_promised, {}};
  AcceptOutcome out;
  if (!m_promised || ballot >= *m_promised) {
    m_promised = ballot;
    m_accepted[iter] = {ballot, value};
    out.resp.ack = true;
    out.resp.current_max = ballot;
    out.notify = LearnNotification{learner_target, {ballot, iter, value}, grpver};
  }
  else {
    out.resp.ack = false;
    out.resp.current_max = *m_promised;
  }
  if (m_hook) {
    t.ack = out.resp.ack;
    t.promised_after = m_promised;
    m_hook(t);
  }
  return out;
}

// --- Proposer ---------------------------------------------------------------

Proposer::Proposer(ProposerOptions options)
  : m_options(std::move(options))
  , m_next_iter(m_options.base_iter)
{
  if (!is_valid_id(m_options.my_id))
    throw Error(Errc::InvalidComponent, "proposer id '" + m_options.my_id + "'");
}

Proposer::RoundStart
Proposer::start_round(const GroupConfig& group)
{
  if (m_phase != Phase::Idle)
    throw Error(Errc::NotIdle, "round " + to_string(m_ballot) + " in flight");

  m_ballot = BallotNumber{m_max_seen_n + 1, m_options.priority, m_options.my_id};
  m_max_seen_n = m_ballot.n;
  m_phase = Phase::Preparing;
  m_round_group = group;
  m_promises.clear();
  m_pending.clear();

  RoundStart out{m_ballot, group.grpver, {}};
  for (const auto& m : group.members)
    out.sends.push_back({m, m_ballot});
  return out;
}

void
Proposer::abandon()
{
  m_phase = Phase::Idle;
  m_round_group.reset();
  m_promises.clear();
  m_pending.clear();
}

void
Proposer::observe(const BallotNumber& ballot)
{
  m_max_seen_n = std::max(m_max_seen_n, ballot.n);
}

Proposer::PromiseOutcome
Proposer::on_promise(const std::string& from, const BallotNumber& request_ballot, const PrepareResp& resp)
{
  PromiseOutcome out;
  if (!resp.ack)
    observe(resp.current_max);
  if (m_phase != Phase::Preparing || !(request_ballot == m_ballot) || !m_round_group->contains(from))
    return out;

  out.quorum = m_round_group->majority();
  if (!resp.ack) {
    abandon();
    out.status = PromiseOutcome::Status::Denied;
    return out;
  }

  m_promises[from] = resp;
  out.acks = m_promises.size();
  if (out.acks < out.quorum) {
    out.status = PromiseOutcome::Status::Recorded;
    return out;
  }

  m_phase = Phase::Master;
  out.status = PromiseOutcome::Status::BecameMaster;

  std::map<uint64_t, LogEntry> selected;
  for (const auto& [acceptor, promise] : m_promises) {
    for (const auto& prior : promise.priors) {
      if (prior.iter < m_options.base_iter)
        continue;
      auto [it, inserted] = selected.try_emplace(prior.iter, prior);
      if (inserted)
        continue;
      bool replace = m_options.selection == PriorSelection::HighestBallot ? prior.ballot > it->second.ballot
                                                                          : prior.ballot < it->second.ballot;
      if (replace)
        it->second = prior;
    }
  }

  const GroupConfig group = *m_round_group;
  for (const auto& [iter, prior] : selected) {
    m_next_iter = std::max(m_next_iter, iter + 1);
    if (m_chosen.count(iter))
      continue;
    out.reproposed.push_back({m_ballot, iter, prior.value});
    auto sends = propose_at(iter, prior.value, group);
    out.sends.insert(out.sends.end(), sends.begin(), sends.end());
  }
  return out;
}

std::vector<Proposer::AcceptSend>
Proposer::propose_at(uint64_t iter, const Value& value, const GroupConfig& group)
{
  m_pending[iter] = Pending{m_ballot, value, group, {}};
  m_next_iter = std::max(m_next_iter, iter + 1);
  std::vector<AcceptSend> sends;
  for (const auto& m : group.members)
    sends.push_back({m, m_ballot, iter, value, group.grpver});
  return sends;
}

std::vector<Proposer::AcceptSend>
Proposer::submit(const Value& value, const GroupConfig& group)
{
  if (m_phase != Phase::Master)
    throw Error(Errc::NotMaster, m_options.my_id);
  while (m_chosen.count(m_next_iter) || m_pending.count(m_next_iter))
    ++m_next_iter;
  return propose_at(m_next_iter, value, group);
}

std::vector<Proposer::AcceptSend>
Proposer::submit_at(uint64_t iter, const Value& value, const GroupConfig& group)
{
  if (m_phase != Phase::Master)
    throw Error(Errc::NotMaster, m_options.my_id);
  if (iter < m_options.base_iter || m_chosen.count(iter) || m_pending.count(iter))
    throw Error(Errc::InvalidConfig, "iter " + std::to_string(iter) + " is not free");
  return propose_at(iter, value, group);
}

std::vector<Proposer::AcceptSend>
Proposer::fill_noops(uint64_t up_to_iter, const GroupConfig& group)
{
  if (m_phase != Phase::Master)
    throw Error(Errc::NotMaster, m_options.my_id);
  std::vector<AcceptSend> sends;
  for (uint64_t i = m_options.base_iter; i < up_to_iter; ++i) {
    if (m_chosen.count(i) || m_pending.count(i))
      continue;
    auto batch = propose_at(i, Value::noop(), group);
    sends.insert(sends.end(), batch.begin(), batch.end());
  }
  return sends;
}

Proposer::AcceptOutcome
Proposer::on_accept_resp(const std::string& from, const BallotNumber& request_ballot, uint64_t iter,
                         const AcceptResp& resp)
{
  AcceptOutcome out;
  if (!resp.ack)
    observe(resp.current_max);
  if (m_phase != Phase::Master || !(request_ballot == m_ballot))
    return out;
  auto it = m_pending.find(iter);
  if (it == m_pending.end() || !it->second.group.contains(from))
    return out;

  auto& pending = it->second;
  out.quorum = pending.group.majority();
  out.grpver = pending.group.grpver;
  if (!resp.ack) {
    abandon();
    out.status = AcceptOutcome::Status::Preempted;
    return out;
  }

  pending.acks.insert(from);
  out.acks = pending.acks.size();
  if (out.acks < out.quorum) {
    out.status = AcceptOutcome::Status::Recorded;
    return out;
  }

  LogEntry entry{pending.ballot, iter, pending.value};
  m_chosen.emplace(iter, entry);
  m_pending.erase(it);
  out.status = AcceptOutcome::Status::Chosen;
  out.chosen = std::move(entry);
  return out;
}

bool
Proposer::on_learned(const LogEntry& entry)
{
  m_next_iter = std::max(m_next_iter, entry.iter + 1);
  m_pending.erase(entry.iter);
  return m_chosen.emplace(entry.iter, entry).second;
}

std::variant<ReadResp, Nack>
Proposer::on_read(const std::optional<BallotNumber>& ballot, const std::optional<uint64_t>& iter) const
{
  auto matches = [&ballot](const LogEntry& e) { return !ballot || e.ballot == *ballot; };
  if (iter) {
    auto it = m_chosen.find(*iter);
    if (it == m_chosen.end() || !matches(it->second))
      return Nack{NackReason::NotFound, {}};
    return ReadResp{{it->second}};
  }
  ReadResp resp;
  for (const auto& [i, e] : m_chosen) {
    if (matches(e))
      resp.found.push_back(e);
  }
  return resp;
}

// --- Learner ----------------------------------------------------------------

Learner::Outcome
Learner::on_learn(const std::string& from, const std::vector<LogEntry>& entries, uint64_t grpver,
                  const GroupRegistry& registry)
{
  const GroupConfig& group = registry.at(grpver);
  Outcome out;
  if (!group.contains(from))
    return out;

  const size_t quorum = group.majority();
  std::vector<LogEntry> fresh;
  for (const auto& e : entries) {
    if (m_learned.count(e.iter))
      continue;
    TallyKey key{e.iter, to_string(e.ballot), digest(e.value)};
    auto& voters = m_tallies[key];
    voters.insert(from);
    if (voters.size() >= quorum) {
      m_learned.emplace(e.iter, e);
      out.learned.push_back({e, grpver, voters.size()});
      fresh.push_back(e);
      auto lo = m_tallies.lower_bound(TallyKey{e.iter, {}, 0});
      while (lo != m_tallies.end() && lo->first.iter == e.iter)
        lo = m_tallies.erase(lo);
    }
  }

  if (!fresh.empty()) {
    out.notify = group.members;
    for (const auto& o : group.observers) {
      if (!group.contains(o.id))
        out.notify.push_back(o);
    }
    out.announcement = learner_aggregate(std::move(fresh), grpver).learn;
  }
  return out;
}

size_t
Learner::votes(uint64_t iter, const BallotNumber& ballot, const Value& value) const
{
  auto it = m_tallies.find(TallyKey{iter, to_string(ballot), digest(value)});
  if (it != m_tallies.end())
    return it->second.size();
  return 0;
}

Aggregate
learner_aggregate(std::vector<LogEntry> entries, uint64_t grpver)
{
  if (entries.empty())
    throw Error(Errc::EmptyAggregate, "no entries");
  Aggregate out;
  out.ballot = entries.front().ballot;
  for (const auto& e : entries) {
    if (e.ballot > out.ballot)
      out.ballot = e.ballot;
  }
  out.learn.entries = std::move(entries);
  out.learn.grpver = grpver;
  canonicalize(out.learn);
  return out;
}

} // namespace ccnpaxos
