#include "fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccnpaxos::testing {

std::string
source_path(const std::string& relative)
{
  return std::string(CCNPAXOS_SOURCE_DIR) + "/" + relative;
}

std::string
read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Scenario
bundled(const std::string& name)
{
  return load_scenario(source_path("scenarios/" + name + ".json"));
}

namespace {

std::string
random_component(std::mt19937_64& rng, bool id)
{
  static constexpr std::string_view kAlphabet = "abcxyzAZ09_-.~%v\x01\x7f\xc3\xa9 ";
  std::uniform_int_distribution<size_t> len(1, 8);
  std::uniform_int_distribution<size_t> pick(0, kAlphabet.size() - 1);
  std::string out;
  const size_t n = len(rng);
  while (out.size() < n) {
    char c = kAlphabet[pick(rng)];
    if (id && c == '.')
      continue;
    out.push_back(c);
  }
  return out;
}

uint64_t
random_number(std::mt19937_64& rng)
{
  switch (rng() % 4) {
    case 0: return rng() % 10;
    case 1: return rng() % 100000;
    case 2: return ~uint64_t{0} - rng() % 3;
    default: return rng();
  }
}

} // namespace

ConsensusName
random_name(std::mt19937_64& rng)
{
  ConsensusName name;
  name.scheme = rng() % 2 ? Scheme::Individual : Scheme::Group;
  if (name.scheme == Scheme::Individual) {
    const size_t depth = 1 + rng() % 3;
    for (size_t i = 0; i < depth; ++i)
      name.routable_prefix.push_back(random_component(rng, false));
  }
  else {
    name.grpver = random_number(rng);
  }
  name.grp = random_component(rng, false);
  name.prg = random_component(rng, false);
  name.var = random_component(rng, false);
  const Verb verbs[] = {Verb::Read, Verb::Prepare, Verb::Accept, Verb::Learn};
  name.verb = verbs[name.scheme == Scheme::Individual ? rng() % 4 : 1 + rng() % 3];

  const bool ballot = name.verb != Verb::Read || rng() % 2;
  if (ballot) {
    BallotNumber b;
    b.n = random_number(rng);
    if (rng() % 2)
      b.priority = random_number(rng);
    b.id = random_component(rng, true);
    name.ballot = b;
  }
  if (rng() % 2)
    name.iter = random_number(rng);
  return name;
}

std::string
mutate(std::string text, std::mt19937_64& rng)
{
  static constexpr std::string_view kNasty{"/./0v9\x00\xff.", 9};
  const size_t edits = 1 + rng() % 4;
  for (size_t e = 0; e < edits; ++e) {
    const size_t pos = text.empty() ? 0 : rng() % (text.size() + 1);
    const char c = rng() % 2 ? kNasty[rng() % kNasty.size()] : static_cast<char>(rng() & 0xff);
    switch (rng() % 4) {
      case 0:
        if (pos < text.size())
          text[pos] = c;
        break;
      case 1:
        text.insert(text.begin() + static_cast<std::ptrdiff_t>(pos), c);
        break;
      case 2:
        if (pos < text.size())
          text.erase(pos, 1 + rng() % 3);
        break;
      default:
        if (pos < text.size())
          text.insert(pos, text.substr(pos, 1 + rng() % 6));
        break;
    }
  }
  return text;
}

std::vector<WireExample>
wire_examples(const std::string& markdown)
{
  std::vector<WireExample> out;
  std::istringstream in(markdown);
  std::string line;
  bool in_hex = false;
  while (std::getline(in, line)) {
    if (line.rfind("#### ", 0) == 0) {
      out.push_back({line.substr(5), {}, {}});
    }
    else if (line == "```hex") {
      in_hex = true;
    }
    else if (in_hex && line == "```") {
      in_hex = false;
    }
    else if (in_hex && !out.empty()) {
      std::istringstream bytes(line);
      std::string byte;
      while (bytes >> byte)
        out.back().bytes.push_back(static_cast<char>(std::stoul(byte, nullptr, 16)));
    }
    else if (line.rfind("digest `", 0) == 0 && !out.empty()) {
      out.back().digest = line.substr(8, line.find('`', 8) - 8);
    }
  }
  return out;
}

size_t
count_events(const Trace& trace, const std::function<bool(const TraceEvent&)>& pred)
{
  size_t n = 0;
  for (const auto& e : trace)
    n += pred(e) ? 1 : 0;
  return n;
}

std::string
trace_text(const Trace& trace)
{
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

} // namespace ccnpaxos::testing
