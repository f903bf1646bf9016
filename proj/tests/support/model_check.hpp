#pragma once

#include "ccnpaxos/paxos.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccnpaxos::testing {

struct ModelConfig
{
  size_t acceptors = 3;
  size_t proposers = 2;
  /// Distinct values; proposer i proposes value i % values.
  size_t values = 2;
  size_t max_steps = 8;
  PriorSelection selection = PriorSelection::HighestBallot;
  /// Merge states that differ only by a renaming of acceptors.
  bool symmetry = true;
};

struct ModelResult
{
  uint64_t states = 0;
  uint64_t transitions = 0;
  uint64_t violations = 0;
  /// Action sequence of the first violation found, e.g. "P0{0,1} A0{0}".
  std::optional<std::string> counterexample;
};

/// Breadth-first search, up to renaming acceptors, over every interleaving
/// of coarse actions against the real Acceptor and Proposer state machines,
/// for iter 0 only:
///  - Prepare(p, S): p abandons its round, starts a new one and delivers it
///    to the acceptor subset S, responses included;
///  - Accept(p, S): a master sends its iter-0 value (a reproposed prior or
///    its own) to S, responses included.
/// Losing a message is modelled by leaving it out of S. A violation is a
/// reachable state in which two different values are chosen, chosen meaning
/// accepted by a majority at one ballot or reported Chosen to a proposer.
ModelResult
model_check(const ModelConfig& config);

} // namespace ccnpaxos::testing
