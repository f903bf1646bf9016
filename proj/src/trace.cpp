#include "ccnpaxos/trace.hpp"

#include <json.hpp>

#include <ostream>
#include <stdexcept>

namespace ccnpaxos {

namespace {

using ordered_json = nlohmann::ordered_json;

template<class T>
void
put_optional(ordered_json& j, const char* key, const std::optional<T>& v)
{
  if (v)
    j[key] = *v;
}

template<class T>
void
get_optional(const nlohmann::json& j, const char* key, std::optional<T>& out)
{
  auto it = j.find(key);
  if (it != j.end())
    out = it->get<T>();
}

} // namespace

std::string
to_json_line(const TraceEvent& e)
{
  ordered_json j;
  j["t"] = e.t;
  j["kind"] = e.kind;
  j["from"] = e.from;
  j["to"] = e.to;
  j["name"] = e.name;
  j["payload_digest"] = e.payload_digest;
  put_optional(j, "cache_hit", e.cache_hit);
  put_optional(j, "iter", e.iter);
  put_optional(j, "ballot", e.ballot);
  put_optional(j, "value", e.value);
  put_optional(j, "grpver", e.grpver);
  put_optional(j, "acks", e.acks);
  put_optional(j, "quorum", e.quorum);
  put_optional(j, "max_age_ms", e.max_age_ms);
  put_optional(j, "detail", e.detail);
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

TraceEvent
parse_json_line(std::string_view line)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  }
  catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("trace line is not an object");
  try {
    TraceEvent e;
    e.t = j.at("t").get<Millis>();
    e.kind = j.at("kind").get<std::string>();
    e.from = j.value("from", "");
    e.to = j.value("to", "");
    e.name = j.value("name", "");
    e.payload_digest = j.value("payload_digest", "");
    get_optional(j, "cache_hit", e.cache_hit);
    get_optional(j, "iter", e.iter);
    get_optional(j, "ballot", e.ballot);
    get_optional(j, "value", e.value);
    get_optional(j, "grpver", e.grpver);
    get_optional(j, "acks", e.acks);
    get_optional(j, "quorum", e.quorum);
    get_optional(j, "max_age_ms", e.max_age_ms);
    get_optional(j, "detail", e.detail);
    return e;
  }
  catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(e.what());
  }
}

void
write_trace(std::ostream& os, const Trace& trace)
{
  for (const auto& e : trace)
    os << to_json_line(e) << '\n';
}

} // namespace ccnpaxos
