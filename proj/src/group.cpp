#include "ccnpaxos/group.hpp"

#include "ccnpaxos/error.hpp"

#include <algorithm>

namespace ccnpaxos {

namespace {

constexpr uint8_t kMembershipTag = 'M';

bool
is_routable_prefix(std::string_view target)
{
  try {
    split_path(target);
    return true;
  }
  catch (const Error&) {
    return false;
  }
}

} // namespace

size_t
GroupConfig::majority() const
{
  return majority_size(*this);
}

const Member*
GroupConfig::find(std::string_view id) const
{
  auto it = std::find_if(members.begin(), members.end(), [id](const Member& m) { return m.id == id; });
  return it == members.end() ? nullptr : &*it;
}

std::string
GroupConfig::multicast_prefix() const
{
  return "/" + grp + "/v" + std::to_string(grpver);
}

size_t
majority_size(const GroupConfig& group)
{
  if (group.members.empty())
    throw Error(Errc::EmptyGroup, "group '" + group.grp + "' has no members");
  return group.members.size() / 2 + 1;
}

void
normalize(GroupConfig& group)
{
  std::sort(group.members.begin(), group.members.end(),
            [](const Member& a, const Member& b) { return a.id < b.id; });
  auto dup = std::adjacent_find(group.members.begin(), group.members.end(),
                                [](const Member& a, const Member& b) { return a.id == b.id; });
  if (dup != group.members.end())
    throw Error(Errc::DuplicateMember, dup->id);
}

Value
propose_membership_change(const GroupConfig& current, const MembershipChange& change)
{
  MembershipRecord record{current.grpver, current.members};
  if (const auto* add = std::get_if<AddMember>(&change)) {
    if (current.contains(add->member.id))
      throw Error(Errc::DuplicateMember, add->member.id);
    if (!is_valid_id(add->member.id) || !is_routable_prefix(add->member.prefix))
      throw Error(Errc::InvalidComponent, "member '" + add->member.id + "'");
    record.members.push_back(add->member);
    std::sort(record.members.begin(), record.members.end(),
              [](const Member& a, const Member& b) { return a.id < b.id; });
  }
  else {
    const auto& id = std::get<RemoveMember>(change).id;
    if (!current.contains(id))
      throw Error(Errc::UnknownMember, id);
    if (current.members.size() <= 1)
      throw Error(Errc::WouldEmptyGroup, id);
    std::erase_if(record.members, [&id](const Member& m) { return m.id == id; });
  }
  return encode_membership(record);
}

Value
encode_membership(const MembershipRecord& record)
{
  codec::Writer w;
  w.u8(kMembershipTag);
  w.varint(record.base_grpver);
  w.varint(record.members.size());
  for (const auto& m : record.members) {
    w.str(m.id);
    w.str(m.prefix);
  }
  return Value::opaque(w.take());
}

MembershipRecord
decode_membership(const Value& value)
{
  if (value.kind != ValueKind::Opaque)
    throw Error(Errc::MalformedPayload, "membership value must be opaque");
  codec::Reader r(value.bytes);
  if (r.u8() != kMembershipTag)
    throw Error(Errc::MalformedPayload, "not a membership record");
  MembershipRecord record;
  record.base_grpver = r.varint();
  auto count = r.varint();
  if (count == 0 || count > r.remaining() / 4)
    throw Error(Errc::MalformedPayload, "bad member count");
  for (uint64_t i = 0; i < count; ++i) {
    Member m;
    m.id = r.str();
    m.prefix = r.str();
    if (!is_valid_id(m.id) || !is_routable_prefix(m.prefix))
      throw Error(Errc::MalformedPayload, "bad member entry");
    if (!record.members.empty() && record.members.back().id >= m.id)
      throw Error(Errc::MalformedPayload, "members not sorted");
    record.members.push_back(std::move(m));
  }
  r.finish();
  return record;
}

Value
propose_learner_change(const GroupConfig&, std::string_view target)
{
  if (!is_routable_prefix(target))
    throw Error(Errc::MalformedTarget, "'" + std::string(target) + "'");
  return Value::link(std::string(target));
}

GroupRegistry::GroupRegistry(GroupConfig initial)
  : m_learner_target(initial.learner_target)
  , m_membership_base(initial.grpver)
  , m_membership_applied(initial.grpver)
{
  normalize(initial);
  majority_size(initial);
  m_versions.emplace(initial.grpver, std::move(initial));
}

const GroupConfig&
GroupRegistry::at(uint64_t grpver) const
{
  auto it = m_versions.find(grpver);
  if (it == m_versions.end())
    throw Error(Errc::UnknownGrpver, "grpver " + std::to_string(grpver));
  return it->second;
}

std::vector<uint64_t>
GroupRegistry::on_membership_learned(uint64_t iter, const Value& value)
{
  std::vector<uint64_t> created;
  if (iter < m_membership_applied)
    return created;
  m_membership_pending.emplace(iter, value);

  while (true) {
    auto it = m_membership_pending.find(m_membership_applied);
    if (it == m_membership_pending.end())
      break;
    const uint64_t k = it->first;
    if (!it->second.is_noop()) {
      try {
        auto record = decode_membership(it->second);
        const auto& current = latest();
        if (record.base_grpver == current.grpver && k + 1 > current.grpver) {
          GroupConfig next = current;
          next.grpver = k + 1;
          next.members = std::move(record.members);
          next.learner_target = m_learner_target;
          m_versions.emplace(next.grpver, std::move(next));
          created.push_back(k + 1);
        }
      }
      catch (const Error&) {
        // An undecodable record is treated like a no-op.
      }
    }
    m_membership_pending.erase(it);
    ++m_membership_applied;
  }
  return created;
}

bool
GroupRegistry::on_learner_learned(uint64_t iter, const Value& value)
{
  if (iter < m_learner_applied)
    return false;
  m_learner_pending.emplace(iter, value);
  bool changed = false;
  while (true) {
    auto it = m_learner_pending.find(m_learner_applied);
    if (it == m_learner_pending.end())
      break;
    if (it->second.kind == ValueKind::Link && is_routable_prefix(it->second.bytes) &&
        it->second.bytes != m_learner_target) {
      m_learner_target = it->second.bytes;
      changed = true;
    }
    m_learner_pending.erase(it);
    ++m_learner_applied;
  }
  return changed;
}

} // namespace ccnpaxos
