#pragma once

#include "ccnpaxos/trace.hpp"

#include <string>
#include <vector>

namespace ccnpaxos {

struct Violation
{
  /// 1-based trace line.
  size_t line = 0;
  /// stability | agreement | validity | cache_freshness | reverse_path
  std::string property;
  std::string message;
};

struct CheckReport
{
  size_t events = 0;
  std::vector<Violation> violations;

  bool
  ok() const noexcept
  {
    return violations.empty();
  }
};

/// Checks safety and network properties over a trace:
///  - stability: a node never learns two values for one (var, iter);
///  - agreement: all chosen/learned events for one (var, iter) agree;
///  - validity: every decided value is NoOp or was proposed earlier;
///  - cache freshness: every cache serve lies within the MaxAge of a store;
///  - reverse path: every content hop A->B follows an interest hop B->A.
CheckReport
check_trace(const Trace& trace, size_t max_violations = 16);

/// Reads a JSON-lines trace. Throws std::runtime_error if the file cannot
/// be read or a line does not parse.
Trace
read_trace_file(const std::string& path);

} // namespace ccnpaxos
