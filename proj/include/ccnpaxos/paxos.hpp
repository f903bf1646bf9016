#pragma once

// Basic / Multi-Paxos role state machines. Every operation is a synchronous
// transition over the object's own state; nothing here touches a clock or
// the network.

#include "ccnpaxos/group.hpp"
#include "ccnpaxos/naming.hpp"
#include "ccnpaxos/wire.hpp"

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace ccnpaxos {

/// Identifies one consensus instance: {grp, prg, var}.
struct VarKey
{
  std::string grp;
  std::string prg;
  std::string var;

  /// "/grp/prg/var"
  std::string
  path() const;

  friend auto operator<=>(const VarKey&, const VarKey&) = default;
};

struct AcceptedValue
{
  BallotNumber ballot;
  Value value;

  friend bool operator==(const AcceptedValue&, const AcceptedValue&) = default;
};

/// Sent by an acceptor to the learner target whenever it accepts.
struct LearnNotification
{
  std::string target;
  LogEntry entry;
  uint64_t grpver = 0;
};

struct AcceptorTransition
{
  enum class Kind { Prepare, Accept } kind;
  BallotNumber ballot;
  uint64_t iter = 0;
  bool ack = false;
  std::optional<BallotNumber> promised_before;
  std::optional<BallotNumber> promised_after;
};

class Acceptor
{
public:
  using TransitionHook = std::function<void(const AcceptorTransition&)>;

  explicit Acceptor(VarKey key)
    : m_key(std::move(key))
  {
  }

  /// Promises `ballot` if it is at least the current promise. On ack the
  /// response lists every accepted entry with iter >= from_iter.
  PrepareResp
  on_prepare(const BallotNumber& ballot, uint64_t from_iter = 0);

  struct AcceptOutcome
  {
    AcceptResp resp;
    std::optional<LearnNotification> notify;
  };

  AcceptOutcome
  on_accept(const BallotNumber& ballot, uint64_t iter, const Value& value, const std::string& learner_target,
            uint64_t grpver);

  const VarKey&
  key() const noexcept
  {
    return m_key;
  }

  const std::optional<BallotNumber>&
  promised() const noexcept
  {
    return m_promised;
  }

  const std::map<uint64_t, AcceptedValue>&
  accepted() const noexcept
  {
    return m_accepted;
  }

  /// Observes every transition; a persistence layer would hook in here.
  void
  set_transition_hook(TransitionHook hook)
  {
    m_hook = std::move(hook);
  }

  friend bool
  operator==(const Acceptor& a, const Acceptor& b)
  {
    return a.m_key == b.m_key && a.m_promised == b.m_promised && a.m_accepted == b.m_accepted;
  }

private:
  VarKey m_key;
  std::optional<BallotNumber> m_promised;
  std::map<uint64_t, AcceptedValue> m_accepted;
  TransitionHook m_hook;
};

/// How a new master picks among reported priors for one iter. Only
/// HighestBallot is safe; LowestBallot exists so the model checker can show
/// that the rule matters.
enum class PriorSelection { HighestBallot, LowestBallot };

struct ProposerOptions
{
  std::string my_id;
  std::optional<uint64_t> priority;
  /// First usable iter.
  uint64_t base_iter = 0;
  PriorSelection selection = PriorSelection::HighestBallot;

  friend bool operator==(const ProposerOptions&, const ProposerOptions&) = default;
};

class Proposer
{
public:
  enum class Phase { Idle, Preparing, Master };

  struct PrepareSend
  {
    Member to;
    BallotNumber ballot;
  };

  struct AcceptSend
  {
    Member to;
    BallotNumber ballot;
    uint64_t iter = 0;
    Value value;
    uint64_t grpver = 0;
  };

  struct RoundStart
  {
    BallotNumber ballot;
    uint64_t grpver = 0;
    std::vector<PrepareSend> sends;
  };

  struct Pending
  {
    BallotNumber ballot;
    Value value;
    GroupConfig group;
    std::set<std::string> acks;

    friend bool operator==(const Pending&, const Pending&) = default;
  };

  struct PromiseOutcome
  {
    enum class Status { Stale, Recorded, Denied, BecameMaster } status = Status::Stale;
    /// On BecameMaster: re-proposals of reported priors.
    std::vector<AcceptSend> sends;
    std::vector<LogEntry> reproposed;
    size_t acks = 0;
    size_t quorum = 0;
  };

  struct AcceptOutcome
  {
    enum class Status { Stale, Recorded, Chosen, Preempted } status = Status::Stale;
    std::optional<LogEntry> chosen;
    size_t acks = 0;
    size_t quorum = 0;
    uint64_t grpver = 0;
  };

  explicit Proposer(ProposerOptions options);

  /// Idle -> Preparing with a ballot above everything observed so far.
  /// Throws NotIdle.
  RoundStart
  start_round(const GroupConfig& group);

  /// Returns to Idle, dropping the current round and pending proposals.
  void
  abandon();

  PromiseOutcome
  on_promise(const std::string& from, const BallotNumber& request_ballot, const PrepareResp& resp);

  /// Assigns the next iter. Throws NotMaster.
  std::vector<AcceptSend>
  submit(const Value& value, const GroupConfig& group);

  /// Proposes at an explicit iter, which must not be chosen or pending.
  /// Throws NotMaster; InvalidConfig if the iter is taken.
  std::vector<AcceptSend>
  submit_at(uint64_t iter, const Value& value, const GroupConfig& group);

  /// AcceptReq(N, i, NoOp) for every i in [base_iter, up_to_iter) that is
  /// neither chosen nor pending. Throws NotMaster.
  std::vector<AcceptSend>
  fill_noops(uint64_t up_to_iter, const GroupConfig& group);

  AcceptOutcome
  on_accept_resp(const std::string& from, const BallotNumber& request_ballot, uint64_t iter,
                 const AcceptResp& resp);

  /// Records a value chosen elsewhere (learner notification). Returns false
  /// if the iter was already known.
  bool
  on_learned(const LogEntry& entry);

  /// Raises the counter floor for the next round.
  void
  observe(const BallotNumber& ballot);

  /// With iter: the chosen entry or Nack. Without: every chosen entry,
  /// filtered by ballot when one is given.
  std::variant<ReadResp, Nack>
  on_read(const std::optional<BallotNumber>& ballot, const std::optional<uint64_t>& iter) const;

  Phase
  phase() const noexcept
  {
    return m_phase;
  }

  const BallotNumber&
  ballot() const noexcept
  {
    return m_ballot;
  }

  uint64_t
  next_iter() const noexcept
  {
    return m_next_iter;
  }

  uint64_t
  max_seen_n() const noexcept
  {
    return m_max_seen_n;
  }

  const std::map<uint64_t, LogEntry>&
  chosen() const noexcept
  {
    return m_chosen;
  }

  const std::map<uint64_t, Pending>&
  pending() const noexcept
  {
    return m_pending;
  }

  const std::map<std::string, PrepareResp>&
  promises() const noexcept
  {
    return m_promises;
  }

  const std::optional<GroupConfig>&
  round_group() const noexcept
  {
    return m_round_group;
  }

  const ProposerOptions&
  options() const noexcept
  {
    return m_options;
  }

  friend bool operator==(const Proposer&, const Proposer&) = default;

private:
  std::vector<AcceptSend>
  propose_at(uint64_t iter, const Value& value, const GroupConfig& group);

  ProposerOptions m_options;
  Phase m_phase = Phase::Idle;
  BallotNumber m_ballot;
  uint64_t m_max_seen_n = 0;
  uint64_t m_next_iter;
  std::optional<GroupConfig> m_round_group;
  std::map<std::string, PrepareResp> m_promises;
  std::map<uint64_t, LogEntry> m_chosen;
  std::map<uint64_t, Pending> m_pending;
};

class Learner
{
public:
  struct Learned
  {
    LogEntry entry;
    uint64_t grpver = 0;
    size_t votes = 0;
  };

  struct Outcome
  {
    std::vector<Learned> learned;
    /// Members of the grpver plus observers, de-duplicated by id.
    std::vector<Member> notify;
    /// Aggregate of the newly learned entries; empty entries if none.
    Learn announcement;
  };

  /// Tallies `from` for each entry against the membership of `grpver`.
  /// Throws UnknownGrpver.
  Outcome
  on_learn(const std::string& from, const std::vector<LogEntry>& entries, uint64_t grpver,
           const GroupRegistry& registry);

  const std::map<uint64_t, LogEntry>&
  learned() const noexcept
  {
    return m_learned;
  }

  /// Voters recorded for (iter, ballot, value).
  size_t
  votes(uint64_t iter, const BallotNumber& ballot, const Value& value) const;

private:
  struct TallyKey
  {
    uint64_t iter;
    std::string ballot;
    uint64_t value_digest;

    friend auto operator<=>(const TallyKey&, const TallyKey&) = default;
  };

  std::map<TallyKey, std::set<std::string>> m_tallies;
  std::map<uint64_t, LogEntry> m_learned;
};

struct Aggregate
{
  /// Largest ballot among the entries; names the message.
  BallotNumber ballot;
  Learn learn;
};

/// Packs entries into one Learn, sorted by iter. Throws EmptyAggregate.
Aggregate
learner_aggregate(std::vector<LogEntry> entries, uint64_t grpver);

} // namespace ccnpaxos
