#pragma once

#include "ccnpaxos/naming.hpp"
#include "ccnpaxos/runner.hpp"
#include "ccnpaxos/scenario.hpp"
#include "ccnpaxos/trace.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ccnpaxos::testing {

/// Absolute path of a file in the source tree.
std::string
source_path(const std::string& relative);

std::string
read_file(const std::string& path);

Scenario
bundled(const std::string& name);

inline const std::vector<std::string> kBundled{"fig1", "fig2", "contention", "reconfig",
                                               "lossy", "noop-fill", "cache"};

ConsensusName
random_name(std::mt19937_64& rng);

/// Flips, inserts, deletes or duplicates a few bytes.
std::string
mutate(std::string text, std::mt19937_64& rng);

struct WireExample
{
  std::string label;
  std::string bytes;
  std::string digest;
};

/// The "#### label" / ```hex blocks / digest lines of docs/wire.md.
std::vector<WireExample>
wire_examples(const std::string& markdown);

size_t
count_events(const Trace& trace, const std::function<bool(const TraceEvent&)>& pred);

std::string
trace_text(const Trace& trace);

} // namespace ccnpaxos::testing
