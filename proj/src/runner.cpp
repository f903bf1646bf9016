#include "ccnpaxos/runner.hpp"

#include "ccnpaxos/error.hpp"

#include <memory>
#include <sstream>

namespace ccnpaxos {

RunResult
run_scenario(const Scenario& scenario, const RunOptions& options)
{
  SimConfig sim = scenario.network;
  sim.seed = options.seed.value_or(scenario.seed);
  if (options.loss) {
    if (!(*options.loss >= 0.0 && *options.loss <= 1.0))
      throw Error(Errc::InvalidConfig, "loss must be in [0,1]");
    sim.loss_prob = *options.loss;
  }
  const Mode mode = options.mode.value_or(scenario.mode);

  Network net(sim, scenario.topology);
  const GroupConfig initial = scenario.initial_group();

  std::vector<std::unique_ptr<Node>> nodes;
  std::map<std::string, Node*> by_id;
  std::vector<std::unique_ptr<Endpoint>> shims;
  struct Shim final : Endpoint
  {
    Node* target = nullptr;
    void
    on_message(const Message& m) override
    {
      target->on_message(m);
    }
    void
    on_timer(uint64_t t) override
    {
      target->on_timer(t);
    }
  };
  for (const auto& spec : scenario.nodes) {
    NodeConfig cfg = spec.config;
    cfg.mode = mode;
    auto shim = std::make_unique<Shim>();
    net.attach(cfg.id, *shim, spec.forwarder);
    auto node = std::make_unique<Node>(cfg, initial, net.port(cfg.id));
    shim->target = node.get();
    by_id[cfg.id] = node.get();
    shims.push_back(std::move(shim));
    nodes.push_back(std::move(node));
  }
  for (auto& n : nodes)
    n->start();

  for (const auto& w : scenario.workload) {
    Node* node = by_id.at(w.node);
    const std::string node_id = w.node;
    net.schedule(w.t, [&scenario, &net, &by_id, node, node_id, w] {
      using K = WorkloadAction::Kind;
      if (net.is_down(node_id) && w.kind != K::Restart)
        return;
      switch (w.kind) {
      case K::Propose:
        node->propose(w.var, Value::opaque(w.value), w.iter);
        break;
      case K::Read:
        node->read(scenario.find(w.target)->config.prefix, w.var, w.iter);
        break;
      case K::AddMember: {
        const auto& c = scenario.find(w.target)->config;
        node->propose_membership(AddMember{Member{c.id, c.prefix}});
        break;
      }
      case K::RemoveMember:
        node->propose_membership(RemoveMember{w.target});
        break;
      case K::ChangeLearner:
        node->propose_learner(scenario.find(w.target)->config.learn_prefix);
        break;
      case K::Crash: {
        net.set_down(node_id, true);
        TraceEvent e;
        e.t = net.now();
        e.kind = "crash";
        e.from = node_id;
        net.record(std::move(e));
        break;
      }
      case K::Restart:
        if (net.is_down(node_id)) {
          net.set_down(node_id, false);
          TraceEvent e;
          e.t = net.now();
          e.kind = "restart";
          e.from = node_id;
          net.record(std::move(e));
          by_id.at(node_id)->restart();
        }
        break;
      case K::Elect:
        node->contend_for_master();
        break;
      case K::FillNoops:
        node->fill_noops(w.var);
        break;
      }
    });
  }

  net.run(scenario.until_ms);

  RunResult out;
  out.scenario = scenario.name;
  out.seed = sim.seed;
  out.mode = mode;
  out.loss = sim.loss_prob;
  out.stats = net.stats();
  out.end_time = net.now();
  out.trace = net.take_trace();
  for (const auto& e : out.trace) {
    if ((e.kind == "chosen" || (e.kind == "learned" && e.acks)) && e.iter && e.value)
      out.chosen.emplace(std::make_pair(e.name, *e.iter), *e.value);
    else if (e.kind == "elected")
      ++out.elections_won;
  }
  for (const auto& n : nodes) {
    NodeLogs logs;
    logs.id = n->config().id;
    for (const auto& var : n->variables()) {
      auto l = n->learned(var);
      if (!l.empty())
        logs.logs.emplace(var, std::move(l));
    }
    out.nodes.push_back(std::move(logs));
  }
  return out;
}

std::string
summary_text(const RunResult& r)
{
  std::ostringstream os;
  os << "scenario " << r.scenario << " seed " << r.seed << " mode " << to_string(r.mode) << " loss " << r.loss
     << "\n";
  os << "end time " << r.end_time << " ms, events " << r.stats.events << "\n";
  os << "chosen (" << r.chosen.size() << "):\n";
  for (const auto& [key, value] : r.chosen)
    os << "  " << key.first << " [" << key.second << "] = " << value << "\n";
  for (const auto& n : r.nodes) {
    os << "learned at " << n.id << ":";
    if (n.logs.empty())
      os << " (none)";
    os << "\n";
    for (const auto& [var, log] : n.logs) {
      os << "  " << var << ":";
      for (const auto& [iter, entry] : log)
        os << " " << iter << "=" << describe(entry.value);
      os << "\n";
    }
  }
  os << "messages submitted " << r.stats.submitted << " (";
  bool first = true;
  for (const auto& [kind, count] : r.stats.submitted_by_kind) {
    os << (first ? "" : ", ") << kind << " " << count;
    first = false;
  }
  os << "), dropped " << r.stats.dropped << ", duplicated " << r.stats.duplicated << ", cache hits "
     << r.stats.cache_hits << "\n";
  return os.str();
}

} // namespace ccnpaxos
