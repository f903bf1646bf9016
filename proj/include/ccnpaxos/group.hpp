#pragma once

#include "ccnpaxos/wire.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ccnpaxos {

/// Reserved protected variables carrying group meta-state.
inline constexpr std::string_view kAcceptorsVar = "__acceptors";
inline constexpr std::string_view kLearnerVar = "__learner";

struct Member
{
  std::string id;
  std::string prefix;

  friend bool operator==(const Member&, const Member&) = default;
};

/// One immutable version of a group's acceptor membership.
///
/// `observers` are the proposer and learner nodes the learner notifies of
/// chosen values in addition to the members. The two lists may overlap.
struct GroupConfig
{
  std::string grp;
  uint64_t grpver = 0;
  std::vector<Member> members; // sorted by id
  std::string learner_target;
  std::vector<Member> observers;

  size_t
  majority() const;

  const Member*
  find(std::string_view id) const;

  bool
  contains(std::string_view id) const
  {
    return find(id) != nullptr;
  }

  /// "/grp/v<grpver>": the multicast prefix members of this version join.
  std::string
  multicast_prefix() const;

  friend bool operator==(const GroupConfig&, const GroupConfig&) = default;
};

/// floor(n/2) + 1. Throws EmptyGroup.
size_t
majority_size(const GroupConfig& group);

/// Sorts members by id and rejects duplicates (DuplicateMember).
void
normalize(GroupConfig& group);

struct AddMember
{
  Member member;
};

struct RemoveMember
{
  std::string id;
};

using MembershipChange = std::variant<AddMember, RemoveMember>;

/// Proposed member list, tagged with the grpver it was derived from. A record
/// whose base is no longer the latest version when it is applied is stale and
/// has no effect.
struct MembershipRecord
{
  uint64_t base_grpver = 0;
  std::vector<Member> members;

  friend bool operator==(const MembershipRecord&, const MembershipRecord&) = default;
};

/// Value for the __acceptors variable. Errors: DuplicateMember,
/// UnknownMember, WouldEmptyGroup.
Value
propose_membership_change(const GroupConfig& current, const MembershipChange& change);

Value
encode_membership(const MembershipRecord& record);

/// Throws MalformedPayload.
MembershipRecord
decode_membership(const Value& value);

/// Value for the __learner variable. Throws MalformedTarget unless `target`
/// is a routable prefix.
Value
propose_learner_change(const GroupConfig& current, std::string_view target);

/// Every grpver a node knows plus the current learner target, fed by the
/// learned logs of the two reserved variables. Entries are applied in log
/// order; a gap holds back everything after it.
class GroupRegistry
{
public:
  explicit GroupRegistry(GroupConfig initial);

  const GroupConfig&
  latest() const
  {
    return m_versions.rbegin()->second;
  }

  /// Throws UnknownGrpver.
  const GroupConfig&
  at(uint64_t grpver) const;

  bool
  knows(uint64_t grpver) const
  {
    return m_versions.count(grpver) != 0;
  }

  const std::string&
  learner_target() const
  {
    return m_learner_target;
  }

  /// First iter of the __acceptors log; earlier iters predate the initial
  /// configuration.
  uint64_t
  membership_base() const
  {
    return m_membership_base;
  }

  /// Returns the grpvers created, in order.
  std::vector<uint64_t>
  on_membership_learned(uint64_t iter, const Value& value);

  /// Returns true if the learner target changed.
  bool
  on_learner_learned(uint64_t iter, const Value& value);

  const std::map<uint64_t, GroupConfig>&
  versions() const
  {
    return m_versions;
  }

private:
  std::map<uint64_t, GroupConfig> m_versions;
  std::string m_learner_target;
  uint64_t m_membership_base;
  uint64_t m_membership_applied;
  std::map<uint64_t, Value> m_membership_pending;
  uint64_t m_learner_applied = 0;
  std::map<uint64_t, Value> m_learner_pending;
};

} // namespace ccnpaxos
