#pragma once

#include "ccnpaxos/netsim.hpp"
#include "ccnpaxos/scenario.hpp"
#include "ccnpaxos/trace.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ccnpaxos {

struct RunOptions
{
  std::optional<uint64_t> seed;
  std::optional<Mode> mode;
  std::optional<double> loss;
};

/// Learned logs of one node, by variable.
struct NodeLogs
{
  std::string id;
  std::map<std::string, std::map<uint64_t, LogEntry>> logs;
};

struct RunResult
{
  std::string scenario;
  uint64_t seed = 0;
  Mode mode = Mode::Individual;
  double loss = 0.0;
  Trace trace;
  Network::Stats stats;
  Millis end_time = 0;
  /// (var path, iter) -> value description, from proposer "chosen" and
  /// learner "learned" events.
  std::map<std::pair<std::string, uint64_t>, std::string> chosen;
  std::vector<NodeLogs> nodes;
  uint64_t elections_won = 0;
};

/// Applies the overrides, builds network and nodes, plays the workload and
/// drains the event queue. Throws LivelockGuard or InvalidConfig.
RunResult
run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Human-readable summary: chosen log, learned log per node, message counts.
std::string
summary_text(const RunResult& result);

} // namespace ccnpaxos
