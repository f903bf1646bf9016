// Command-line front end: run a scenario, check a trace, sweep seeds.

#include "ccnpaxos/checker.hpp"
#include "ccnpaxos/error.hpp"
#include "ccnpaxos/runner.hpp"
#include "ccnpaxos/scenario.hpp"
#include "ccnpaxos/sweep.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kLivelock = 3;
constexpr int kViolation = 4;

std::string
default_trace_path(const ccnpaxos::Scenario& s, uint64_t seed)
{
  const char* dir = std::getenv("CCNPAXOS_TRACE_DIR");
  std::string base = dir && *dir ? dir : ".";
  return base + "/" + s.name + "-seed" + std::to_string(seed) + ".jsonl";
}

int
cmd_run(const std::string& scenario_path, std::optional<uint64_t> seed, std::string trace_path,
        std::optional<std::string> mode, std::optional<double> loss)
{
  using namespace ccnpaxos;
  Scenario s;
  RunOptions opts;
  try {
    s = load_scenario(scenario_path);
    if (mode)
      opts.mode = parse_mode(*mode);
  }
  catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  }
  opts.seed = seed;
  opts.loss = loss;

  RunResult r;
  try {
    r = run_scenario(s, opts);
  }
  catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == Errc::LivelockGuard ? kLivelock : kConfig;
  }

  if (trace_path.empty())
    trace_path = default_trace_path(s, r.seed);
  std::ofstream out(trace_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write trace " << trace_path << "\n";
    return kConfig;
  }
  write_trace(out, r.trace);
  out.close();
  std::cout << summary_text(r) << "trace " << trace_path << " (" << r.trace.size() << " events)\n";
  return kOk;
}

int
cmd_check(const std::string& trace_path)
{
  using namespace ccnpaxos;
  Trace trace;
  try {
    trace = read_trace_file(trace_path);
  }
  catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  }
  auto report = check_trace(trace, 1);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    std::cout << trace_path << ":" << v.line << ": " << v.property << ": " << v.message << "\n";
    return kViolation;
  }
  std::cout << trace_path << ": " << report.events << " events, all properties hold\n";
  return kOk;
}

int
cmd_sweep(const std::string& scenario_path, uint64_t seed, uint64_t runs, const std::vector<double>& losses,
          const std::vector<std::string>& modes, const std::string& report_path, unsigned threads)
{
  using namespace ccnpaxos;
  Scenario s;
  SweepOptions opts;
  try {
    s = load_scenario(scenario_path);
    for (const auto& m : modes)
      opts.modes.push_back(parse_mode(m));
    for (double l : losses) {
      if (!(l >= 0.0 && l <= 1.0))
        throw Error(Errc::InvalidConfig, "loss must be in [0,1]");
    }
  }
  catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  }
  opts.seed_begin = seed;
  opts.seed_end = seed + runs;
  opts.losses = losses;
  opts.threads = threads;

  SweepReport report;
  try {
    report = run_sweep(s, opts);
  }
  catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  }
  std::cout << report_table(report);
  const std::string json = report_json(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      std::cerr << "cannot write report " << report_path << "\n";
      return kConfig;
    }
    out << json << "\n";
  }
  else {
    std::cout << json << "\n";
  }
  for (const auto& c : report.cells) {
    if (c.first_violation)
      std::cout << "violation: " << *c.first_violation << "\n";
  }
  return report.violations ? kViolation : kOk;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"Paxos over named-data messaging: simulate, check, sweep"};
  app.require_subcommand(1);

  std::string scenario;
  std::optional<uint64_t> seed;
  std::string trace;
  std::optional<std::string> mode;
  std::optional<double> loss;

  auto* run = app.add_subcommand("run", "Run one scenario and write its trace");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Seed (default: the scenario's)");
  run->add_option("--trace", trace, "Trace output (default: $CCNPAXOS_TRACE_DIR or . /<name>-seed<N>.jsonl)");
  run->add_option("--mode", mode, "individual | multicast (overrides the scenario)");
  run->add_option("--loss", loss, "Loss probability (overrides the scenario)");

  std::string check_trace_path;
  auto* check = app.add_subcommand("check", "Check safety and network properties of a trace");
  check->add_option("file,--trace", check_trace_path, "Trace file");

  uint64_t sweep_seed = 1;
  uint64_t runs = 100;
  std::vector<double> losses{0.0, 0.1, 0.3};
  std::vector<std::string> modes;
  std::string report_path;
  unsigned threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Run seeds x loss x mode and aggregate");
  sweep->add_option("--scenario", scenario, "Scenario JSON file")->required();
  sweep->add_option("--seed", sweep_seed, "First seed")->capture_default_str();
  sweep->add_option("--runs", runs, "Seeds per cell")->capture_default_str();
  sweep->add_option("--loss", losses, "Loss probabilities")->delimiter(',')->capture_default_str();
  sweep->add_option("--mode", modes, "Modes (default: the scenario's)")->delimiter(',');
  sweep->add_option("--report", report_path, "JSON report output (default: stdout)");
  sweep->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  if (*run)
    return cmd_run(scenario, seed, trace, mode, loss);
  if (*check) {
    if (check_trace_path.empty()) {
      std::cerr << "check: a trace file is required\n";
      return kConfig;
    }
    return cmd_check(check_trace_path);
  }
  return cmd_sweep(scenario, sweep_seed, runs, losses, modes, report_path, threads);
}
