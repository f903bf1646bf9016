#include "ccnpaxos/checker.hpp"

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace ccnpaxos {

CheckReport
check_trace(const Trace& trace, size_t max_violations)
{
  CheckReport report;
  report.events = trace.size();

  using Slot = std::pair<std::string, uint64_t>;
  std::map<Slot, std::string> decided;
  std::map<std::tuple<std::string, std::string, uint64_t>, std::string> learned_at;
  std::map<std::string, std::set<std::string>> proposed;
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<Millis, uint64_t>> stores;
  std::set<std::tuple<std::string, std::string, std::string>> interest_hops;

  auto fail = [&](size_t i, const char* property, std::string message) {
    if (report.violations.size() < max_violations)
      report.violations.push_back({i + 1, property, std::move(message)});
  };

  for (size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace[i];
    if (e.kind == "propose") {
      if (e.value)
        proposed[e.name].insert(*e.value);
    }
    else if ((e.kind == "chosen" || e.kind == "learned") && e.iter && e.value) {
      const std::string& value = *e.value;
      const std::string at = e.name + "[" + std::to_string(*e.iter) + "]";
      if (e.kind == "learned") {
        auto [it, inserted] = learned_at.try_emplace({e.from, e.name, *e.iter}, value);
        if (!inserted && it->second != value)
          fail(i, "stability", e.from + " relearned " + at + " as " + value + " after " + it->second);
      }
      auto [it, inserted] = decided.try_emplace({e.name, *e.iter}, value);
      if (!inserted && it->second != value)
        fail(i, "agreement", at + " decided as " + value + " and " + it->second);
      if (value != "noop" && !proposed[e.name].count(value))
        fail(i, "validity", at + " decided " + value + " which was never proposed");
    }
    else if (e.kind == "cache_store") {
      const uint64_t age = e.max_age_ms.value_or(0);
      if (age == 0)
        fail(i, "cache_freshness", "stored " + e.name + " with MaxAge 0");
      stores[{e.from, e.name, e.payload_digest}] = {e.t, age};
    }
    else if (e.kind == "cache_serve") {
      auto it = stores.find({e.from, e.name, e.payload_digest});
      if (it == stores.end())
        fail(i, "cache_freshness", "served " + e.name + " from " + e.from + " without a store");
      else if (e.t < it->second.first || e.t >= it->second.first + it->second.second)
        fail(i, "cache_freshness",
             "served " + e.name + " at " + std::to_string(e.t) + " outside [" + std::to_string(it->second.first) +
               ", " + std::to_string(it->second.first + it->second.second) + ")");
    }
    else if (e.kind == "interest") {
      interest_hops.insert({e.from, e.to, e.name});
    }
    else if (e.kind == "content") {
      if (!interest_hops.count({e.to, e.from, e.name}))
        fail(i, "reverse_path", "content " + e.name + " " + e.from + "->" + e.to + " with no interest " + e.to +
                                  "->" + e.from);
    }
  }
  return report;
}

Trace
read_trace_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read trace " + path);
  Trace trace;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty())
      continue;
    try {
      trace.push_back(parse_json_line(line));
    }
    catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  if (in.bad())
    throw std::runtime_error("error reading trace " + path);
  return trace;
}

} // namespace ccnpaxos
