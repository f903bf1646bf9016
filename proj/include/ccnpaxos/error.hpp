#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ccnpaxos {

enum class Errc {
  // naming
  InvalidComponent,
  UnknownVerb,
  MalformedBallot,
  MalformedName,
  MixedBallotForms,
  // wire
  MalformedPayload,
  BadVerbPayload,
  // paxos
  NotIdle,
  NotMaster,
  EmptyAggregate,
  UnknownGrpver,
  // group
  EmptyGroup,
  DuplicateMember,
  UnknownMember,
  WouldEmptyGroup,
  MalformedTarget,
  // netsim / node
  NoRoute,
  NoSubscribers,
  LivelockGuard,
  Unreachable,
  // scenario
  InvalidConfig,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error
{
public:
  Error(Errc code, const std::string& what);

  Errc
  code() const noexcept
  {
    return m_code;
  }

private:
  Errc m_code;
};

} // namespace ccnpaxos
