#pragma once

#include "ccnpaxos/group.hpp"
#include "ccnpaxos/netsim.hpp"
#include "ccnpaxos/node.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccnpaxos {

struct WorkloadAction
{
  enum class Kind {
    Propose,
    Read,
    AddMember,
    RemoveMember,
    ChangeLearner,
    Crash,
    Restart,
    Elect,
    FillNoops,
  };

  Millis t = 0;
  Kind kind = Kind::Propose;
  std::string node;
  std::string var{kLogVar};
  /// Propose: opaque value text.
  std::string value;
  std::optional<uint64_t> iter;
  /// Read: node id to ask. AddMember/RemoveMember: member id.
  /// ChangeLearner: node whose learn prefix becomes the target.
  std::string target;
  size_t line = 0;
};

std::string_view
to_string(WorkloadAction::Kind kind) noexcept;

struct NodeSpec
{
  NodeConfig config;
  std::string forwarder = "fwd0";
};

struct Scenario
{
  std::string name;
  Mode mode = Mode::Individual;
  uint64_t seed = 1;
  SimConfig network;
  Topology topology;
  std::vector<NodeSpec> nodes;
  std::string grp = "g";
  uint64_t grpver = 1;
  std::vector<std::string> members;
  std::string learner;
  std::vector<WorkloadAction> workload;
  std::optional<Millis> until_ms;

  const NodeSpec*
  find(std::string_view id) const;

  /// Initial membership; observers are every proposer and learner node.
  GroupConfig
  initial_group() const;
};

/// Parses and validates. Errors are InvalidConfig with a message of the
/// form "<source>:<line>: <what>".
Scenario
parse_scenario(std::string_view text, const std::string& source = "scenario");

Scenario
load_scenario(const std::string& path);

} // namespace ccnpaxos
