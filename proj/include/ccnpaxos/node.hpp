#pragma once

// A Server: potential proposer, acceptor and learner at once, speaking either
// Interest/ContentObject or Push signaling.

#include "ccnpaxos/group.hpp"
#include "ccnpaxos/netsim.hpp"
#include "ccnpaxos/paxos.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace ccnpaxos {

enum class Mode { Individual, Multicast };

std::string_view
to_string(Mode mode) noexcept;

/// Throws InvalidConfig.
Mode
parse_mode(std::string_view text);

inline constexpr std::string_view kLogVar = "log";
inline constexpr std::string_view kMasterVar = "master";

struct RetryPolicy
{
  uint32_t count = 3;
  Millis backoff_ms = 8000;
};

struct NodeConfig
{
  std::string id;
  std::string prefix;
  bool proposer = false;
  bool acceptor = false;
  bool learner = false;
  Mode mode = Mode::Individual;
  std::optional<uint64_t> priority;
  RetryPolicy retry;
  /// MaxAge on every Content Object this node produces.
  Millis max_age_ms = 0;
  /// Prefix a learner-role node serves reports on. Must not overlap any
  /// node prefix.
  std::string learn_prefix;
  std::string prg = "kv";
  /// Round backoff after a denial is 1..4 ticks.
  Millis tick_ms = 10;
  /// Consecutive failed rounds before a variable's proposer gives up.
  uint32_t max_rounds = 64;
  PriorSelection selection = PriorSelection::HighestBallot;

  /// Throws InvalidConfig.
  void
  validate() const;
};

class Node final : public Endpoint
{
public:
  Node(NodeConfig config, GroupConfig initial, Environment& env);

  /// Registers the node's prefixes and multicast subscriptions.
  void
  start();

  /// Queues `value` on `var`, at `iter` if given.
  void
  propose(const std::string& var, Value value, std::optional<uint64_t> iter = std::nullopt);

  void
  propose_membership(const MembershipChange& change);

  void
  propose_learner(const std::string& target);

  /// Bids for mastership with the node's descriptor on the next free epoch
  /// of the "master" variable.
  void
  contend_for_master();

  /// Chooses NoOp for every gap below the proposer's next iter, running a
  /// round first if needed.
  void
  fill_noops(const std::string& var);

  /// Sends a Read Interest to `target_prefix`.
  void
  read(const std::string& target_prefix, const std::string& var, std::optional<uint64_t> iter);

  /// Resumes after a crash: re-arms retransmissions and restarts rounds.
  void
  restart();

  void
  on_message(const Message& message) override;

  void
  on_timer(uint64_t token) override;

  const NodeConfig&
  config() const noexcept
  {
    return m_config;
  }

  const GroupRegistry&
  registry() const noexcept
  {
    return m_registry;
  }

  /// Learned log of `var` on this node.
  std::map<uint64_t, LogEntry>
  learned(const std::string& var) const;

  std::vector<std::string>
  variables() const;

  const Proposer*
  proposer(const std::string& var) const;

  const Acceptor*
  acceptor(const std::string& var) const;

  /// Descriptor of the most recently elected master, if any.
  std::optional<std::string>
  master() const
  {
    return m_master;
  }

  std::string
  descriptor() const
  {
    return m_config.prefix + "/descriptor";
  }

  size_t
  outstanding() const noexcept
  {
    return m_outstanding.size();
  }

private:
  struct Item
  {
    Value value;
    std::optional<uint64_t> iter;
    bool drop_if_lost = false;
  };

  struct Var
  {
    explicit Var(VarKey k)
      : key(k)
      , acceptor(std::move(k))
    {
    }

    VarKey key;
    Acceptor acceptor;
    std::optional<Proposer> proposer;
    Learner learner;
    std::map<uint64_t, LogEntry> log;
    std::deque<Item> queue;
    std::map<uint64_t, Item> in_flight;
    bool fill_requested = false;
    uint32_t failed_rounds = 0;
    bool gave_up = false;
    std::optional<std::pair<uint64_t, uint64_t>> backoff;
  };

  struct Outstanding
  {
    std::string round;
    std::string tag;
    std::optional<Message> group;
    std::map<std::string, Message> unicast;
    std::set<std::string> awaiting;
    uint32_t sends = 0;
    std::pair<uint64_t, uint64_t> timer{0, 0};
  };

  Var&
  var(const std::string& name);

  std::pair<uint64_t, uint64_t>
  set_timer(Millis delay, std::function<void()> fn);

  void
  cancel(std::pair<uint64_t, uint64_t> timer);

  void
  record(TraceEvent event);

  TraceEvent
  event(std::string kind, const Var& v) const;

  Payload
  payload(Body body) const;

  std::string
  suffix(const std::string& var, Verb verb, const std::optional<BallotNumber>& ballot,
         std::optional<uint64_t> iter) const;

  // Reliable sends.
  void
  send_unicast(const std::string& round, const std::string& tag, const std::string& peer, Message message,
               const std::string& mc_suffix);

  void
  send_group(const std::string& round, const std::string& tag, std::set<std::string> awaiting,
             Message message, const std::string& mc_suffix);

  void
  arm(const std::string& key);

  void
  retransmit(const std::string& key);

  void
  resolve(const std::string& key, const std::string& origin);

  void
  cancel_where(const std::function<bool(const Outstanding&)>& pred);

  void
  reply(const Message& request, const Payload& response, const std::optional<std::string>& response_target,
        const std::string& mc_suffix);

  // Proposer side.
  bool
  has_work(const Var& v) const;

  void
  drive(Var& v);

  void
  begin_round(Var& v);

  void
  schedule_backoff(Var& v);

  void
  abandon(Var& v);

  void
  become_master(Var& v, const Proposer::PromiseOutcome& out);

  void
  flush(Var& v);

  void
  send_accepts(Var& v, const std::vector<Proposer::AcceptSend>& sends);

  void
  lose_item(Var& v, Item item, const char* why);

  void
  settle_in_flight(Var& v, uint64_t iter, const Value& chosen);

  void
  on_prepare_resp(Var& v, const std::string& origin, const BallotNumber& ballot, const PrepareResp& resp);

  void
  on_accept_resp(Var& v, const std::string& origin, const BallotNumber& ballot, uint64_t iter,
                 const AcceptResp& resp);

  // Acceptor / learner side.
  Payload
  handle_prepare(Var& v, const BallotNumber& ballot, uint64_t from_iter);

  Payload
  handle_accept(Var& v, const BallotNumber& ballot, uint64_t iter, const AcceptReq& req);

  void
  handle_report(const Message& message, const ConsensusName& name, const Payload& p);

  void
  handle_announcement(const Message& message, const ConsensusName& name, const Payload& p);

  Payload
  handle_read(Var& v, const ConsensusName& name);

  void
  on_read_result(const ConsensusName& name, const Payload& p);

  void
  apply_learned(Var& v, const LogEntry& entry, uint64_t grpver, std::optional<size_t> votes);

  void
  on_new_grpver(uint64_t grpver);

  // Dispatch.
  void
  on_request(const Message& message, const ConsensusName& name, const Payload& p);

  void
  on_response(const Message& message, const ConsensusName& name, const Payload& p);

  void
  reject(const Message& message, const std::string& why);

  NodeConfig m_config;
  Environment& m_env;
  GroupRegistry m_registry;
  std::string m_grp;
  std::map<std::string, Var> m_vars;
  std::map<std::string, Outstanding> m_outstanding;
  std::map<uint64_t, std::function<void()>> m_actions;
  uint64_t m_next_token = 1;
  std::set<uint64_t> m_subscribed;
  std::optional<std::string> m_master;
};

} // namespace ccnpaxos
