#include "ccnpaxos/error.hpp"

namespace ccnpaxos {

std::string_view
to_string(Errc code) noexcept
{
  switch (code) {
    case Errc::InvalidComponent: return "InvalidComponent";
    case Errc::UnknownVerb: return "UnknownVerb";
    case Errc::MalformedBallot: return "MalformedBallot";
    case Errc::MalformedName: return "MalformedName";
    case Errc::MixedBallotForms: return "MixedBallotForms";
    case Errc::MalformedPayload: return "MalformedPayload";
    case Errc::BadVerbPayload: return "BadVerbPayload";
    case Errc::NotIdle: return "NotIdle";
    case Errc::NotMaster: return "NotMaster";
    case Errc::EmptyAggregate: return "EmptyAggregate";
    case Errc::UnknownGrpver: return "UnknownGrpver";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::DuplicateMember: return "DuplicateMember";
    case Errc::UnknownMember: return "UnknownMember";
    case Errc::WouldEmptyGroup: return "WouldEmptyGroup";
    case Errc::MalformedTarget: return "MalformedTarget";
    case Errc::NoRoute: return "NoRoute";
    case Errc::NoSubscribers: return "NoSubscribers";
    case Errc::LivelockGuard: return "LivelockGuard";
    case Errc::Unreachable: return "Unreachable";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
  : std::runtime_error(std::string(to_string(code)) + ": " + what)
  , m_code(code)
{
}

} // namespace ccnpaxos
