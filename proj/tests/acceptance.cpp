// Prints one PASS/FAIL line per acceptance criterion; exits 1 on any FAIL.

#include "ccnpaxos/checker.hpp"
#include "ccnpaxos/error.hpp"
#include "ccnpaxos/naming.hpp"
#include "ccnpaxos/sweep.hpp"
#include "fixtures.hpp"
#include "model_check.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

using namespace ccnpaxos;
using namespace ccnpaxos::testing;

namespace {

constexpr double kSweepBudgetSeconds = 60.0;
constexpr double kModelBudgetSeconds = 30.0;
constexpr uint64_t kSweepSeeds = 1000;
constexpr uint64_t kEquivalenceSeeds = 100;
constexpr size_t kFuzzCount = 100'000;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

double
seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool
starts_with(const std::string& s, const std::string& prefix)
{
  return s.rfind(prefix, 0) == 0;
}

bool
has_verb(const std::string& name, const std::string& verb)
{
  return name.find("/" + verb + "/") != std::string::npos;
}

Outcome
sweep_safety()
{
  SweepOptions opt;
  opt.seed_begin = 1;
  opt.seed_end = 1 + kSweepSeeds;
  opt.losses = {0.0, 0.1, 0.3};
  opt.modes = {Mode::Individual, Mode::Multicast};
  const auto start = std::chrono::steady_clock::now();
  auto report = run_sweep(bundled("contention"), opt);
  const double secs = seconds_since(start);
  uint64_t livelocks = 0;
  for (const auto& c : report.cells)
    livelocks += c.livelocks;
  std::ostringstream os;
  os << report.runs << " runs, " << report.violations << " violations, " << livelocks << " livelocks, " << secs
     << " s (budget " << kSweepBudgetSeconds << " s)";
  return {report.runs == 6 * kSweepSeeds && report.violations == 0 && secs < kSweepBudgetSeconds, os.str()};
}

Outcome
model_checking()
{
  const auto start = std::chrono::steady_clock::now();
  ModelConfig safe;
  auto highest = model_check(safe);
  ModelConfig broken = safe;
  broken.selection = PriorSelection::LowestBallot;
  auto lowest = model_check(broken);
  const double secs = seconds_since(start);
  std::ostringstream os;
  os << "highest: " << highest.states << " states, " << highest.violations << " violations; lowest: "
     << lowest.states << " states, " << lowest.violations << " violations";
  if (lowest.counterexample)
    os << " (e.g. " << *lowest.counterexample << ")";
  os << "; " << secs << " s (budget " << kModelBudgetSeconds << " s)";
  return {highest.violations == 0 && lowest.violations >= 1 && secs < kModelBudgetSeconds, os.str()};
}

Outcome
mode_equivalence()
{
  // Individual and multicast variants of one workload, random delays.
  auto variant = [](const std::string& name) {
    Scenario s = bundled(name);
    s.network.delay_min_ms = 1;
    s.network.delay_max_ms = 3;
    s.workload.clear();
    for (int i = 0; i < 5; ++i) {
      WorkloadAction w;
      w.t = 7 * static_cast<Millis>(i);
      w.node = "p1";
      w.value = "v" + std::to_string(i);
      s.workload.push_back(w);
    }
    return s;
  };
  const Scenario individual = variant("fig1");
  const Scenario multicast = variant("fig2");
  size_t mismatches = 0;
  std::string first;
  for (uint64_t seed = 1; seed <= kEquivalenceSeeds; ++seed) {
    auto a = run_scenario(individual, RunOptions{seed, std::nullopt, std::nullopt});
    auto b = run_scenario(multicast, RunOptions{seed, std::nullopt, std::nullopt});
    bool same = a.mode == Mode::Individual && b.mode == Mode::Multicast && a.nodes.size() == b.nodes.size();
    for (size_t i = 0; same && i < a.nodes.size(); ++i)
      same = a.nodes[i].id == b.nodes[i].id && a.nodes[i].logs == b.nodes[i].logs;
    // Every node that learned anything holds the full log.
    for (const auto* r : {&a, &b}) {
      for (const auto& n : r->nodes) {
        if (!n.logs.empty())
          same = same && n.logs.at("log").size() == 5 && n.logs == r->nodes.front().logs;
      }
      same = same && !r->nodes.front().logs.empty();
    }
    if (!same && mismatches++ == 0)
      first = "seed " + std::to_string(seed);
  }
  std::ostringstream os;
  os << kEquivalenceSeeds << " seeds, " << mismatches << " mismatches";
  if (!first.empty())
    os << " (first " << first << ")";
  return {mismatches == 0, os.str()};
}

Outcome
message_patterns()
{
  auto fig1 = run_scenario(bundled("fig1"));
  auto fig2 = run_scenario(bundled("fig2"));
  auto count = [](const Trace& t, const std::function<bool(const TraceEvent&)>& p) { return count_events(t, p); };

  const size_t rounds1 = count(fig1.trace, [](const auto& e) { return e.kind == "round" && e.from == "p1"; });
  const size_t interests = count(fig1.trace, [](const auto& e) {
    return e.kind == "interest" && e.from == "p1" && e.to == "fwd0" && has_verb(e.name, "prepare");
  });
  const size_t reverse = count(fig1.trace, [&](const auto& e) {
    if (e.kind != "content" || e.to != "p1" || !has_verb(e.name, "prepare"))
      return false;
    // The content retraced the Interest hop fwd0 -> acceptor.
    return count_events(fig1.trace, [&](const auto& i) {
             return i.kind == "interest" && i.from == "fwd0" && i.name == e.name && i.t < e.t;
           }) == 1;
  });

  const size_t rounds2 = count(fig2.trace, [](const auto& e) { return e.kind == "round" && e.from == "p1"; });
  const size_t group_push = count(fig2.trace, [](const auto& e) {
    return e.kind == "push" && e.from == "p1" && starts_with(e.name, "/g/v1/") && has_verb(e.name, "prepare");
  });
  const size_t unicast = count(fig2.trace, [](const auto& e) {
    return e.kind == "push" && starts_with(e.from, "a") && e.to == "fwd0" && starts_with(e.name, "/p1/") &&
           has_verb(e.name, "prepare");
  });
  const size_t no_interests = count(fig2.trace, [](const auto& e) { return e.kind == "interest"; });

  std::ostringstream os;
  os << "fig1: " << rounds1 << " round, " << interests << " prepare interests, " << reverse
     << " reverse-path contents; fig2: " << rounds2 << " round, " << group_push << " group push, " << unicast
     << " unicast responses, " << no_interests << " interests";
  const bool pass = rounds1 == 1 && interests == 3 && reverse == 3 && rounds2 == 1 && group_push == 1 &&
                    unicast == 3 && no_interests == 0 && check_trace(fig1.trace).ok() && check_trace(fig2.trace).ok();
  return {pass, os.str()};
}

Outcome
cache_expiry()
{
  // MaxAge 5: reads reach fwd0 at store+3 and store+7.
  Scenario s = bundled("cache");
  auto with_age = run_scenario(s);
  std::vector<const TraceEvent*> stores, serves;
  for (const auto& e : with_age.trace) {
    if (e.kind == "cache_store" && has_verb(e.name, "read"))
      stores.push_back(&e);
    if (e.kind == "cache_serve")
      serves.push_back(&e);
  }
  bool five = stores.size() == 2 && serves.size() == 1 && with_age.stats.cache_hits == 1;
  std::ostringstream os;
  if (five) {
    const Millis store = stores[0]->t;
    std::vector<Millis> arrivals, forwarded;
    for (const auto& e : with_age.trace) {
      if (e.kind == "interest" && e.from == "c1" && has_verb(e.name, "read"))
        arrivals.push_back(e.t);
      if (e.kind == "interest" && e.to == "p1" && has_verb(e.name, "read"))
        forwarded.push_back(e.t);
    }
    // Reads reach fwd0 before, at +3 and at +7; only the first and last go on to p1.
    five = arrivals.size() == 3 && arrivals[1] == store + 3 && arrivals[2] == store + 7 && serves[0]->t == store + 3 &&
           forwarded.size() == 2 && forwarded[1] > store + 7 && stores[1]->t > store + 7;
    os << "MaxAge 5: store t=" << store << ", request at +" << (arrivals.size() > 1 ? arrivals[1] - store : 0)
       << " served from cache, request at +" << (arrivals.size() > 2 ? arrivals[2] - store : 0) << " forwarded ("
       << forwarded.size() << " reached the producer)";
  }
  else {
    os << "MaxAge 5: " << stores.size() << " stores, " << serves.size() << " serves";
  }

  for (auto& n : s.nodes)
    n.config.max_age_ms = 0;
  auto zero = run_scenario(s);
  const size_t zero_serves =
    count_events(zero.trace, [](const TraceEvent& e) { return e.kind == "cache_serve" || e.kind == "cache_store"; });
  os << "; MaxAge 0: " << zero.stats.cache_hits << " hits, " << zero_serves << " cache events";
  const bool pass = five && zero.stats.cache_hits == 0 && zero_serves == 0 && check_trace(with_age.trace).ok();
  return {pass, os.str()};
}

Outcome
reconfiguration()
{
  auto r = run_scenario(bundled("reconfig"));
  const TraceEvent* version = nullptr;
  const TraceEvent* learned_y = nullptr;
  const TraceEvent* chosen_y = nullptr;
  for (const auto& e : r.trace) {
    if (e.kind == "grpver" && e.from == "p1" && !version)
      version = &e;
    if (e.kind == "learned" && e.from == "l1" && e.value == "opaque:y" && e.acks)
      learned_y = &e;
    if (e.kind == "chosen" && e.from == "p1" && e.value == "opaque:y")
      chosen_y = &e;
  }
  std::ostringstream os;
  bool pass = version && learned_y && chosen_y;
  if (pass) {
    os << "grpver " << *version->grpver << " quorum " << *version->quorum << " members " << *version->detail
       << "; y learned at grpver " << *learned_y->grpver << " with " << *learned_y->acks << "/"
       << *learned_y->quorum << " acks, chosen with " << chosen_y->acks.value_or(0) << "/"
       << chosen_y->quorum.value_or(0);
    pass = version->grpver == 2u && version->quorum == 3u && version->detail == "a1,a2,a3,a4" &&
           learned_y->grpver == 2u && learned_y->quorum == 3u && learned_y->acks >= 3u && chosen_y->grpver == 2u &&
           chosen_y->quorum == 3u && chosen_y->acks >= 3u && check_trace(r.trace).ok();
  }
  else {
    os << "missing grpver, learned or chosen event";
  }
  return {pass, os.str()};
}

Outcome
nack_noop_reads()
{
  auto r = run_scenario(bundled("noop-fill"));
  std::map<uint64_t, std::string> results;
  for (const auto& e : r.trace) {
    if (e.kind == "read_result" && e.from == "c1" && e.iter)
      results[*e.iter] = *e.detail == "found" ? e.value.value_or("") : *e.detail;
  }
  const std::map<uint64_t, std::string> want{
    {0, "opaque:a"}, {1, "noop"}, {2, "opaque:c"}, {7, "nack:not_found"}};
  const bool noop_chosen = r.chosen.count({"/g/kv/log", 1}) && r.chosen.at({"/g/kv/log", 1}) == "noop";
  std::ostringstream os;
  os << "reads:";
  for (const auto& [iter, v] : results)
    os << " " << iter << "=" << v;
  os << "; iter 1 chosen " << (noop_chosen ? "noop" : "not noop");
  return {results == want && noop_chosen && check_trace(r.trace).ok(), os.str()};
}

Outcome
determinism()
{
  size_t same = 0;
  std::string differing;
  for (const auto& name : kBundled) {
    const auto s = bundled(name);
    const auto a = trace_text(run_scenario(s).trace);
    const auto b = trace_text(run_scenario(s).trace);
    if (a == b && !a.empty())
      ++same;
    else
      differing += " " + name;
  }
  std::ostringstream os;
  os << same << "/" << kBundled.size() << " bundled scenarios byte-identical";
  if (!differing.empty())
    os << ", differing:" << differing;
  return {same == kBundled.size(), os.str()};
}

Outcome
name_fuzzing()
{
  std::mt19937_64 rng(2024);
  size_t round_trips = 0;
  size_t mutated_ok = 0;
  size_t typed_errors = 0;
  std::string failure;
  for (size_t i = 0; i < kFuzzCount; ++i) {
    auto name = random_name(rng);
    try {
      if (parse_name(encode_name(name), name.scheme) == name)
        ++round_trips;
    }
    catch (const std::exception& e) {
      if (failure.empty())
        failure = e.what();
    }
  }
  for (size_t i = 0; i < kFuzzCount; ++i) {
    const std::string text = mutate(encode_name(random_name(rng)), rng);
    for (Scheme scheme : {Scheme::Individual, Scheme::Group}) {
      try {
        auto n = parse_name(text, scheme);
        if (encode_name(n) == text)
          ++mutated_ok;
        else if (failure.empty())
          failure = "non-canonical parse of " + text;
      }
      catch (const Error&) {
        ++typed_errors;
      }
      catch (const std::exception& e) {
        if (failure.empty())
          failure = std::string("untyped exception: ") + e.what();
      }
    }
  }
  std::ostringstream os;
  os << round_trips << "/" << kFuzzCount << " round-trips; " << kFuzzCount << " mutated strings: " << mutated_ok
     << " parsed, " << typed_errors << " typed errors";
  if (!failure.empty())
    os << "; first failure: " << failure;
  return {round_trips == kFuzzCount && mutated_ok + typed_errors == 2 * kFuzzCount && failure.empty(), os.str()};
}

} // namespace

int
main()
{
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
    {"safety sweep", sweep_safety},
    {"model check", model_checking},
    {"mode equivalence", mode_equivalence},
    {"message patterns", message_patterns},
    {"cache expiry", cache_expiry},
    {"reconfiguration", reconfiguration},
    {"nack, noop and reads", nack_noop_reads},
    {"determinism", determinism},
    {"name fuzzing", name_fuzzing},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    }
    catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
