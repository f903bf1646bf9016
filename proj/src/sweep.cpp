#include "ccnpaxos/sweep.hpp"

#include "ccnpaxos/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

namespace ccnpaxos {

namespace {

struct Outcome
{
  bool completed = false;
  bool livelock = false;
  uint64_t violations = 0;
  std::optional<std::string> first_violation;
  uint64_t elections = 0;
  uint64_t messages = 0;
  uint64_t chosen = 0;
};

Outcome
run_one(const Scenario& scenario, Mode mode, double loss, uint64_t seed)
{
  Outcome out;
  RunOptions opts;
  opts.seed = seed;
  opts.mode = mode;
  opts.loss = loss;
  try {
    RunResult r = run_scenario(scenario, opts);
    out.completed = true;
    auto check = check_trace(r.trace, 1);
    out.violations = check.violations.size();
    if (!check.ok()) {
      const auto& v = check.violations.front();
      out.first_violation = "seed " + std::to_string(seed) + " line " + std::to_string(v.line) + ": " +
                            v.property + ": " + v.message;
    }
    out.elections = r.elections_won;
    out.messages = r.stats.submitted;
    out.chosen = r.chosen.size();
  }
  catch (const Error& e) {
    if (e.code() != Errc::LivelockGuard)
      throw;
    out.livelock = true;
  }
  return out;
}

} // namespace

SweepReport
run_sweep(const Scenario& scenario, const SweepOptions& options)
{
  SweepReport report;
  report.scenario = scenario.name;
  report.seed_begin = options.seed_begin;
  report.seed_end = std::max(options.seed_begin, options.seed_end);
  const uint64_t seeds = report.seed_end - report.seed_begin;

  std::vector<Mode> modes = options.modes;
  if (modes.empty())
    modes.push_back(scenario.mode);
  for (Mode m : modes) {
    for (double loss : options.losses) {
      SweepCell cell;
      cell.mode = m;
      cell.loss = loss;
      report.cells.push_back(cell);
    }
  }
  if (seeds == 0)
    return report;

  const size_t total = report.cells.size() * seeds;
  std::vector<Outcome> outcomes(total);
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    while (!failed.load()) {
      size_t i = next.fetch_add(1);
      if (i >= total)
        return;
      const auto& cell = report.cells[i / seeds];
      try {
        outcomes[i] = run_one(scenario, cell.mode, cell.loss, report.seed_begin + i % seeds);
      }
      catch (...) {
        if (!failed.exchange(true))
          failure = std::current_exception();
        return;
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, total));
  if (threads <= 1) {
    worker();
  }
  else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(worker);
    for (auto& t : pool)
      t.join();
  }
  if (failure)
    std::rethrow_exception(failure);

  for (size_t i = 0; i < total; ++i) {
    auto& cell = report.cells[i / seeds];
    const auto& o = outcomes[i];
    ++cell.runs;
    cell.completed += o.completed;
    cell.livelocks += o.livelock;
    cell.violations += o.violations;
    cell.elections_won += o.elections;
    cell.messages += o.messages;
    cell.chosen_values += o.chosen;
    if (o.first_violation && !cell.first_violation)
      cell.first_violation = o.first_violation;
  }
  for (const auto& c : report.cells) {
    report.runs += c.runs;
    report.violations += c.violations;
  }
  return report;
}

std::string
report_json(const SweepReport& report)
{
  nlohmann::ordered_json j;
  j["scenario"] = report.scenario;
  j["seeds"] = {report.seed_begin, report.seed_end};
  j["runs"] = report.runs;
  j["violations"] = report.violations;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json cell;
    cell["mode"] = std::string(to_string(c.mode));
    cell["loss"] = c.loss;
    cell["runs"] = c.runs;
    cell["completed"] = c.completed;
    cell["livelocks"] = c.livelocks;
    cell["violations"] = c.violations;
    cell["elections_won"] = c.elections_won;
    cell["messages"] = c.messages;
    cell["chosen_values"] = c.chosen_values;
    cell["mean_messages_per_chosen"] = c.mean_messages_per_chosen();
    if (c.first_violation)
      cell["first_violation"] = *c.first_violation;
    j["cells"].push_back(std::move(cell));
  }
  return j.dump(2);
}

std::string
report_table(const SweepReport& report)
{
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-11s %5s %6s %9s %9s %10s %9s %12s\n", "mode", "loss", "runs", "completed",
                "livelocks", "violations", "elected", "msgs/chosen");
  os << line;
  for (const auto& c : report.cells) {
    std::snprintf(line, sizeof line, "%-11s %5.2f %6llu %9llu %9llu %10llu %9llu %12.2f\n",
                  std::string(to_string(c.mode)).c_str(), c.loss, static_cast<unsigned long long>(c.runs),
                  static_cast<unsigned long long>(c.completed), static_cast<unsigned long long>(c.livelocks),
                  static_cast<unsigned long long>(c.violations), static_cast<unsigned long long>(c.elections_won),
                  c.mean_messages_per_chosen());
    os << line;
  }
  os << "total runs " << report.runs << ", violations " << report.violations << "\n";
  return os.str();
}

} // namespace ccnpaxos
