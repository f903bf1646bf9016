#include "ccnpaxos/scenario.hpp"

#include "ccnpaxos/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ccnpaxos {

using nlohmann::json;

namespace {

/// Maps JSON pointers to the line where each value starts.
class LineIndex
{
public:
  explicit LineIndex(std::string_view text)
    : m_text(text)
  {
    value("");
  }

  size_t
  line(std::string pointer) const
  {
    while (true) {
      auto it = m_lines.find(pointer);
      if (it != m_lines.end())
        return it->second;
      auto slash = pointer.rfind('/');
      if (slash == std::string::npos)
        return 1;
      pointer.resize(slash);
    }
  }

private:
  void
  ws()
  {
    while (m_pos < m_text.size() && (m_text[m_pos] == ' ' || m_text[m_pos] == '\t' || m_text[m_pos] == '\n' ||
                                     m_text[m_pos] == '\r')) {
      if (m_text[m_pos] == '\n')
        ++m_line;
      ++m_pos;
    }
  }

  std::string
  string()
  {
    std::string out;
    ++m_pos;
    while (m_pos < m_text.size() && m_text[m_pos] != '"') {
      if (m_text[m_pos] == '\\' && m_pos + 1 < m_text.size()) {
        out += m_text[m_pos + 1];
        m_pos += 2;
        continue;
      }
      out += m_text[m_pos++];
    }
    ++m_pos;
    return out;
  }

  void
  value(const std::string& ptr)
  {
    ws();
    if (m_pos >= m_text.size())
      return;
    m_lines.emplace(ptr, m_line);
    char c = m_text[m_pos];
    if (c == '{') {
      ++m_pos;
      ws();
      if (m_pos < m_text.size() && m_text[m_pos] == '}') {
        ++m_pos;
        return;
      }
      while (m_pos < m_text.size()) {
        ws();
        size_t key_line = m_line;
        std::string key = string();
        ws();
        ++m_pos; // ':'
        m_lines.emplace(ptr + "/" + key, key_line);
        value(ptr + "/" + key);
        ws();
        if (m_pos < m_text.size() && m_text[m_pos] == ',') {
          ++m_pos;
          continue;
        }
        ++m_pos; // '}'
        return;
      }
    }
    else if (c == '[') {
      ++m_pos;
      ws();
      if (m_pos < m_text.size() && m_text[m_pos] == ']') {
        ++m_pos;
        return;
      }
      for (size_t i = 0; m_pos < m_text.size(); ++i) {
        value(ptr + "/" + std::to_string(i));
        ws();
        if (m_pos < m_text.size() && m_text[m_pos] == ',') {
          ++m_pos;
          continue;
        }
        ++m_pos; // ']'
        return;
      }
    }
    else if (c == '"') {
      string();
    }
    else {
      while (m_pos < m_text.size() && m_text[m_pos] != ',' && m_text[m_pos] != '}' && m_text[m_pos] != ']' &&
             m_text[m_pos] != ' ' && m_text[m_pos] != '\n' && m_text[m_pos] != '\r' && m_text[m_pos] != '\t')
        ++m_pos;
    }
  }

  std::string_view m_text;
  size_t m_pos = 0;
  size_t m_line = 1;
  std::map<std::string, size_t> m_lines;
};

class Reader
{
public:
  Reader(std::string source, const LineIndex& index)
    : m_source(std::move(source))
    , m_index(index)
  {
  }

  [[noreturn]] void
  fail(const std::string& ptr, const std::string& what) const
  {
    std::string where = ptr.empty() ? "" : " (" + ptr + ")";
    throw Error(Errc::InvalidConfig,
                m_source + ":" + std::to_string(m_index.line(ptr)) + ": " + what + where);
  }

  size_t
  line(const std::string& ptr) const
  {
    return m_index.line(ptr);
  }

  void
  only(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) const
  {
    if (!obj.is_object())
      fail(ptr, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k))
        fail(ptr + "/" + k, "unknown key '" + k + "'");
    }
  }

  std::string
  str(const json& obj, const std::string& ptr, const char* key, std::optional<std::string> dflt = {}) const
  {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (dflt)
        return *dflt;
      fail(ptr, std::string("missing '") + key + "'");
    }
    if (!it->is_string())
      fail(ptr + "/" + key, std::string("'") + key + "' must be a string");
    return it->get<std::string>();
  }

  uint64_t
  uint(const json& obj, const std::string& ptr, const char* key, std::optional<uint64_t> dflt = {}) const
  {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (dflt)
        return *dflt;
      fail(ptr, std::string("missing '") + key + "'");
    }
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<int64_t>() >= 0))
      fail(ptr + "/" + key, std::string("'") + key + "' must be a non-negative integer");
    return it->get<uint64_t>();
  }

  std::optional<uint64_t>
  opt_uint(const json& obj, const std::string& ptr, const char* key) const
  {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
      return std::nullopt;
    return uint(obj, ptr, key);
  }

  double
  real(const json& obj, const std::string& ptr, const char* key, double dflt) const
  {
    auto it = obj.find(key);
    if (it == obj.end())
      return dflt;
    if (!it->is_number())
      fail(ptr + "/" + key, std::string("'") + key + "' must be a number");
    return it->get<double>();
  }

  const std::string&
  source() const
  {
    return m_source;
  }

private:
  std::string m_source;
  const LineIndex& m_index;
};

WorkloadAction::Kind
parse_action(const Reader& r, const std::string& ptr, const std::string& s)
{
  using K = WorkloadAction::Kind;
  static const std::map<std::string, K> kinds{
    {"propose", K::Propose},   {"read", K::Read},         {"add_member", K::AddMember},
    {"remove_member", K::RemoveMember}, {"change_learner", K::ChangeLearner}, {"crash", K::Crash},
    {"restart", K::Restart}, {"elect", K::Elect},     {"fill_noops", K::FillNoops},
  };
  auto it = kinds.find(s);
  if (it == kinds.end())
    r.fail(ptr, "unknown action '" + s + "'");
  return it->second;
}

void
parse_network(const Reader& r, const json& j, Scenario& s)
{
  const std::string ptr = "/network";
  r.only(j, ptr,
         {"delay_ms", "loss_prob", "dup_prob", "default_max_age_ms", "interest_lifetime_ms", "max_events",
          "loss_scope", "topology"});
  auto& c = s.network;
  if (auto it = j.find("delay_ms"); it != j.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() || !(*it)[1].is_number_unsigned())
      r.fail(ptr + "/delay_ms", "delay_ms must be [min, max] non-negative integers");
    c.delay_min_ms = (*it)[0].get<uint64_t>();
    c.delay_max_ms = (*it)[1].get<uint64_t>();
    if (c.delay_min_ms > c.delay_max_ms)
      r.fail(ptr + "/delay_ms", "delay min exceeds max");
  }
  c.loss_prob = r.real(j, ptr, "loss_prob", 0.0);
  if (!(c.loss_prob >= 0.0 && c.loss_prob <= 1.0))
    r.fail(ptr + "/loss_prob", "loss_prob must be in [0,1]");
  c.dup_prob = r.real(j, ptr, "dup_prob", 0.0);
  if (!(c.dup_prob >= 0.0 && c.dup_prob <= 1.0))
    r.fail(ptr + "/dup_prob", "dup_prob must be in [0,1]");
  c.default_max_age_ms = r.uint(j, ptr, "default_max_age_ms", 0);
  c.interest_lifetime_ms = r.uint(j, ptr, "interest_lifetime_ms", 4000);
  if (c.interest_lifetime_ms == 0)
    r.fail(ptr + "/interest_lifetime_ms", "interest_lifetime_ms must be positive");
  c.max_events = r.uint(j, ptr, "max_events", 1'000'000);
  if (c.max_events == 0)
    r.fail(ptr + "/max_events", "max_events must be positive");
  std::string scope = r.str(j, ptr, "loss_scope", std::string("all"));
  if (scope == "all")
    c.loss_scope = LossScope::All;
  else if (scope == "requests")
    c.loss_scope = LossScope::RequestsOnly;
  else
    r.fail(ptr + "/loss_scope", "loss_scope must be all or requests");

  if (auto it = j.find("topology"); it != j.end()) {
    const std::string tptr = ptr + "/topology";
    r.only(*it, tptr, {"forwarders", "links"});
    s.topology.forwarders.clear();
    auto f = it->find("forwarders");
    if (f == it->end() || !f->is_array() || f->empty())
      r.fail(tptr, "topology needs a non-empty 'forwarders' list");
    for (size_t i = 0; i < f->size(); ++i) {
      if (!(*f)[i].is_string())
        r.fail(tptr + "/forwarders/" + std::to_string(i), "forwarder name must be a string");
      s.topology.forwarders.push_back((*f)[i].get<std::string>());
    }
    if (auto l = it->find("links"); l != it->end()) {
      if (!l->is_array())
        r.fail(tptr + "/links", "links must be a list");
      for (size_t i = 0; i < l->size(); ++i) {
        const auto& e = (*l)[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
          r.fail(tptr + "/links/" + std::to_string(i), "link must be [forwarder, forwarder]");
        s.topology.links.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
  }
}

void
parse_nodes(const Reader& r, const json& j, Scenario& s)
{
  if (!j.is_array() || j.empty())
    r.fail("/nodes", "nodes must be a non-empty list");
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string ptr = "/nodes/" + std::to_string(i);
    const auto& n = j[i];
    r.only(n, ptr,
           {"id", "prefix", "roles", "priority", "retry", "max_age_ms", "learn_prefix", "forwarder", "tick_ms",
            "max_rounds"});
    NodeSpec spec;
    auto& c = spec.config;
    c.id = r.str(n, ptr, "id");
    if (!is_valid_id(c.id))
      r.fail(ptr + "/id", "invalid node id '" + c.id + "'");
    if (s.find(c.id))
      r.fail(ptr + "/id", "duplicate node id '" + c.id + "'");
    c.prefix = r.str(n, ptr, "prefix", "/" + c.id);
    if (auto roles = n.find("roles"); roles != n.end()) {
      if (!roles->is_array())
        r.fail(ptr + "/roles", "roles must be a list");
      for (size_t k = 0; k < roles->size(); ++k) {
        const auto& role = (*roles)[k];
        const std::string rp = ptr + "/roles/" + std::to_string(k);
        if (!role.is_string())
          r.fail(rp, "role must be a string");
        const auto name = role.get<std::string>();
        if (name == "proposer")
          c.proposer = true;
        else if (name == "acceptor")
          c.acceptor = true;
        else if (name == "learner")
          c.learner = true;
        else
          r.fail(rp, "unknown role '" + name + "'");
      }
    }
    c.priority = r.opt_uint(n, ptr, "priority");
    if (auto retry = n.find("retry"); retry != n.end()) {
      r.only(*retry, ptr + "/retry", {"count", "backoff_ms"});
      c.retry.count = static_cast<uint32_t>(r.uint(*retry, ptr + "/retry", "count", 3));
      c.retry.backoff_ms = r.uint(*retry, ptr + "/retry", "backoff_ms", 2 * s.network.interest_lifetime_ms);
    }
    else {
      c.retry.backoff_ms = 2 * s.network.interest_lifetime_ms;
    }
    c.max_age_ms = r.uint(n, ptr, "max_age_ms", s.network.default_max_age_ms);
    c.learn_prefix = r.str(n, ptr, "learn_prefix", c.learner ? "/" + c.id + "-learn" : std::string());
    spec.forwarder = r.str(n, ptr, "forwarder", s.topology.forwarders.front());
    c.tick_ms = r.uint(n, ptr, "tick_ms", 10);
    c.max_rounds = static_cast<uint32_t>(r.uint(n, ptr, "max_rounds", 64));
    c.mode = s.mode;
    try {
      c.validate();
      split_path(c.prefix);
    }
    catch (const Error& e) {
      r.fail(ptr, e.what());
    }
    if (has_path_prefix(c.prefix, "/" + s.grp))
      r.fail(ptr + "/prefix", "node prefix must not lie under the group prefix /" + s.grp);
    s.nodes.push_back(std::move(spec));
  }

  // Ballots with and without priority do not compare.
  const NodeSpec* first_proposer = nullptr;
  for (size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& c = s.nodes[i].config;
    if (!c.proposer)
      continue;
    if (!first_proposer)
      first_proposer = &s.nodes[i];
    else if (c.priority.has_value() != first_proposer->config.priority.has_value())
      r.fail("/nodes/" + std::to_string(i), "proposers '" + first_proposer->config.id + "' and '" + c.id +
                                               "' disagree on whether ballots carry a priority");
  }

  // Prefixes must be pairwise disjoint, learn prefixes included.
  std::vector<std::pair<std::string, std::string>> prefixes;
  for (size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& c = s.nodes[i].config;
    prefixes.emplace_back(c.prefix, "/nodes/" + std::to_string(i) + "/prefix");
    if (c.learner)
      prefixes.emplace_back(c.learn_prefix, "/nodes/" + std::to_string(i) + "/learn_prefix");
  }
  for (size_t a = 0; a < prefixes.size(); ++a) {
    for (size_t b = a + 1; b < prefixes.size(); ++b) {
      if (has_path_prefix(prefixes[a].first, prefixes[b].first) ||
          has_path_prefix(prefixes[b].first, prefixes[a].first))
        r.fail(prefixes[b].second, "prefix '" + prefixes[b].first + "' overlaps '" + prefixes[a].first + "'");
    }
  }
}

void
parse_group(const Reader& r, const json& j, Scenario& s)
{
  const std::string ptr = "/group";
  r.only(j, ptr, {"grp", "grpver", "members", "learner"});
  s.grpver = r.uint(j, ptr, "grpver", 1);
  auto m = j.find("members");
  if (m == j.end() || !m->is_array() || m->empty())
    r.fail(ptr, "group needs a non-empty 'members' list");
  for (size_t i = 0; i < m->size(); ++i) {
    const std::string mp = ptr + "/members/" + std::to_string(i);
    if (!(*m)[i].is_string())
      r.fail(mp, "member must be a node id");
    auto id = (*m)[i].get<std::string>();
    const auto* spec = s.find(id);
    if (!spec)
      r.fail(mp, "unknown node '" + id + "'");
    if (!spec->config.acceptor)
      r.fail(mp, "member '" + id + "' lacks the acceptor role");
    for (const auto& prev : s.members) {
      if (prev == id)
        r.fail(mp, "duplicate member '" + id + "'");
    }
    s.members.push_back(id);
  }
  s.learner = r.str(j, ptr, "learner");
  const auto* l = s.find(s.learner);
  if (!l)
    r.fail(ptr + "/learner", "unknown node '" + s.learner + "'");
  if (!l->config.learner)
    r.fail(ptr + "/learner", "node '" + s.learner + "' lacks the learner role");
}

void
parse_workload(const Reader& r, const json& j, Scenario& s)
{
  using K = WorkloadAction::Kind;
  if (!j.is_array())
    r.fail("/workload", "workload must be a list");
  Millis last = 0;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string ptr = "/workload/" + std::to_string(i);
    const auto& a = j[i];
    r.only(a, ptr, {"t", "action", "node", "var", "value", "iter", "target"});
    WorkloadAction w;
    w.line = r.line(ptr);
    w.t = r.uint(a, ptr, "t");
    if (w.t < last)
      r.fail(ptr + "/t", "action times must be non-decreasing");
    last = w.t;
    w.kind = parse_action(r, ptr + "/action", r.str(a, ptr, "action"));
    w.node = r.str(a, ptr, "node");
    const auto* node = s.find(w.node);
    if (!node)
      r.fail(ptr + "/node", "unknown node '" + w.node + "'");
    w.var = r.str(a, ptr, "var", std::string(kLogVar));
    if (!is_valid_component(w.var))
      r.fail(ptr + "/var", "invalid variable name '" + w.var + "'");
    w.iter = r.opt_uint(a, ptr, "iter");

    auto need_proposer = [&] {
      if (!node->config.proposer)
        r.fail(ptr + "/node", "node '" + w.node + "' lacks the proposer role");
    };
    switch (w.kind) {
    case K::Propose:
      need_proposer();
      w.value = r.str(a, ptr, "value");
      break;
    case K::Read: {
      w.target = r.str(a, ptr, "target");
      if (!s.find(w.target))
        r.fail(ptr + "/target", "unknown node '" + w.target + "'");
      break;
    }
    case K::AddMember:
    case K::RemoveMember: {
      need_proposer();
      w.target = r.str(a, ptr, "target");
      const auto* t = s.find(w.target);
      if (!t)
        r.fail(ptr + "/target", "unknown node '" + w.target + "'");
      if (w.kind == K::AddMember && !t->config.acceptor)
        r.fail(ptr + "/target", "node '" + w.target + "' lacks the acceptor role");
      break;
    }
    case K::ChangeLearner: {
      need_proposer();
      w.target = r.str(a, ptr, "target");
      const auto* t = s.find(w.target);
      if (!t)
        r.fail(ptr + "/target", "unknown node '" + w.target + "'");
      if (!t->config.learner)
        r.fail(ptr + "/target", "node '" + w.target + "' lacks the learner role");
      break;
    }
    case K::Elect:
    case K::FillNoops:
      need_proposer();
      break;
    case K::Crash:
    case K::Restart:
      break;
    }
    s.workload.push_back(std::move(w));
  }
}

} // namespace

std::string_view
to_string(WorkloadAction::Kind kind) noexcept
{
  using K = WorkloadAction::Kind;
  switch (kind) {
  case K::Propose:
    return "propose";
  case K::Read:
    return "read";
  case K::AddMember:
    return "add_member";
  case K::RemoveMember:
    return "remove_member";
  case K::ChangeLearner:
    return "change_learner";
  case K::Crash:
    return "crash";
  case K::Restart:
    return "restart";
  case K::Elect:
    return "elect";
  case K::FillNoops:
    return "fill_noops";
  }
  return "propose";
}

const NodeSpec*
Scenario::find(std::string_view id) const
{
  for (const auto& n : nodes) {
    if (n.config.id == id)
      return &n;
  }
  return nullptr;
}

GroupConfig
Scenario::initial_group() const
{
  GroupConfig g;
  g.grp = grp;
  g.grpver = grpver;
  for (const auto& id : members)
    g.members.push_back(Member{id, find(id)->config.prefix});
  g.learner_target = find(learner)->config.learn_prefix;
  for (const auto& n : nodes) {
    if (n.config.proposer || n.config.learner)
      g.observers.push_back(Member{n.config.id, n.config.prefix});
  }
  normalize(g);
  return g;
}

Scenario
parse_scenario(std::string_view text, const std::string& source)
{
  json j;
  try {
    j = json::parse(text);
  }
  catch (const json::parse_error& e) {
    // byte offset -> line
    size_t line = 1;
    for (size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n')
        ++line;
    }
    throw Error(Errc::InvalidConfig, source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  LineIndex index(text);
  Reader r(source, index);
  r.only(j, "", {"name", "mode", "seed", "group", "network", "nodes", "workload", "until_ms"});

  Scenario s;
  s.name = r.str(j, "", "name");
  if (!is_valid_id(s.name))
    r.fail("/name", "invalid scenario name '" + s.name + "'");
  try {
    s.mode = parse_mode(r.str(j, "", "mode", std::string("individual")));
  }
  catch (const Error& e) {
    r.fail("/mode", e.what());
  }
  s.seed = r.uint(j, "", "seed", 1);
  s.until_ms = r.opt_uint(j, "", "until_ms");

  if (auto g = j.find("group"); g != j.end() && g->is_object()) {
    s.grp = r.str(*g, "/group", "grp", std::string("g"));
    if (!is_valid_id(s.grp))
      r.fail("/group/grp", "invalid group name '" + s.grp + "'");
  }
  if (auto n = j.find("network"); n != j.end())
    parse_network(r, *n, s);
  try {
    Network probe(s.network, s.topology);
  }
  catch (const Error& e) {
    r.fail("/network/topology", e.what());
  }

  auto nodes = j.find("nodes");
  if (nodes == j.end())
    r.fail("", "missing 'nodes'");
  parse_nodes(r, *nodes, s);
  for (size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& f = s.nodes[i].forwarder;
    if (std::find(s.topology.forwarders.begin(), s.topology.forwarders.end(), f) == s.topology.forwarders.end())
      r.fail("/nodes/" + std::to_string(i) + "/forwarder", "unknown forwarder '" + f + "'");
  }

  auto group = j.find("group");
  if (group == j.end())
    r.fail("", "missing 'group'");
  parse_group(r, *group, s);

  if (auto w = j.find("workload"); w != j.end())
    parse_workload(r, *w, s);
  return s;
}

Scenario
load_scenario(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::InvalidConfig, path + ":1: cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

} // namespace ccnpaxos
