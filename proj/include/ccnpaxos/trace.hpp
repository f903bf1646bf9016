#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccnpaxos {

using Millis = uint64_t;

/// One trace line.
///
/// Network events (kind interest/content/push/push_ack/drop/...) record one
/// link traversal from `from` to `to`, stamped with the arrival time.
/// Protocol events (propose/master/chosen/learned/read_result/...) are
/// recorded by nodes: `from` is the node, `name` the variable path.
struct TraceEvent
{
  Millis t = 0;
  std::string kind;
  std::string from;
  std::string to;
  std::string name;
  std::string payload_digest;
  std::optional<bool> cache_hit;

  std::optional<uint64_t> iter;
  std::optional<std::string> ballot;
  std::optional<std::string> value;
  std::optional<uint64_t> grpver;
  std::optional<uint64_t> acks;
  std::optional<uint64_t> quorum;
  std::optional<uint64_t> max_age_ms;
  std::optional<std::string> detail;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

using Trace = std::vector<TraceEvent>;

/// One JSON object, no trailing newline. Key order is fixed.
std::string
to_json_line(const TraceEvent& event);

/// Throws std::invalid_argument on malformed input.
TraceEvent
parse_json_line(std::string_view line);

void
write_trace(std::ostream& os, const Trace& trace);

} // namespace ccnpaxos
