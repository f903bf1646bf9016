#pragma once

#include "ccnpaxos/checker.hpp"
#include "ccnpaxos/runner.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ccnpaxos {

struct SweepOptions
{
  uint64_t seed_begin = 1;
  /// Exclusive.
  uint64_t seed_end = 1;
  std::vector<double> losses{0.0};
  /// Empty: the scenario's own mode.
  std::vector<Mode> modes;
  /// 0: one per hardware thread.
  unsigned threads = 0;
};

struct SweepCell
{
  Mode mode = Mode::Individual;
  double loss = 0.0;
  uint64_t runs = 0;
  uint64_t completed = 0;
  uint64_t livelocks = 0;
  uint64_t violations = 0;
  uint64_t elections_won = 0;
  uint64_t messages = 0;
  uint64_t chosen_values = 0;
  std::optional<std::string> first_violation;

  double
  mean_messages_per_chosen() const noexcept
  {
    return chosen_values == 0 ? 0.0 : static_cast<double>(messages) / static_cast<double>(chosen_values);
  }
};

struct SweepReport
{
  std::string scenario;
  uint64_t seed_begin = 0;
  uint64_t seed_end = 0;
  std::vector<SweepCell> cells;
  uint64_t runs = 0;
  uint64_t violations = 0;
};

/// Runs every (mode, loss, seed) combination and checks each trace in
/// memory. Aggregation does not depend on thread scheduling.
SweepReport
run_sweep(const Scenario& scenario, const SweepOptions& options);

std::string
report_json(const SweepReport& report);

std::string
report_table(const SweepReport& report);

} // namespace ccnpaxos
