#include "ccnpaxos/naming.hpp"

#include "ccnpaxos/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>

namespace ccnpaxos {

namespace {

constexpr std::array<std::pair<std::string_view, Verb>, 4> kVerbs{{
  {"read", Verb::Read},
  {"prepare", Verb::Prepare},
  {"accept", Verb::Accept},
  {"learn", Verb::Learn},
}};

std::optional<Verb>
verb_from_token(std::string_view token)
{
  for (const auto& [text, verb] : kVerbs) {
    if (token == text)
      return verb;
  }
  return std::nullopt;
}

// Canonical decimal: no sign, no leading zeros (except "0"), fits in 64 bits.
std::optional<uint64_t>
parse_decimal(std::string_view text)
{
  if (text.empty() || text.size() > 20)
    return std::nullopt;
  if (text.size() > 1 && text.front() == '0')
    return std::nullopt;
  if (!std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return std::nullopt;
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    return std::nullopt;
  return value;
}

void
require_component(std::string_view component, std::string_view what)
{
  if (!is_valid_component(component))
    throw Error(Errc::InvalidComponent, std::string(what) + " component '" + std::string(component) + "'");
}

} // namespace

Ordering
compare_ballots(const BallotNumber& a, const BallotNumber& b)
{
  if (a.priority.has_value() != b.priority.has_value())
    throw Error(Errc::MixedBallotForms, to_string(a) + " vs " + to_string(b));
  if (a.n != b.n)
    return a.n < b.n ? Ordering::Less : Ordering::Greater;
  if (a.priority && *a.priority != *b.priority)
    return *a.priority < *b.priority ? Ordering::Less : Ordering::Greater;
  int c = a.id.compare(b.id);
  if (c == 0)
    return Ordering::Equal;
  return c < 0 ? Ordering::Less : Ordering::Greater;
}

std::strong_ordering
operator<=>(const BallotNumber& a, const BallotNumber& b)
{
  switch (compare_ballots(a, b)) {
    case Ordering::Less: return std::strong_ordering::less;
    case Ordering::Equal: return std::strong_ordering::equal;
    case Ordering::Greater: break;
  }
  return std::strong_ordering::greater;
}

std::string
to_string(const BallotNumber& ballot)
{
  std::string out = std::to_string(ballot.n);
  if (ballot.priority) {
    out += '.';
    out += std::to_string(*ballot.priority);
  }
  out += '.';
  out += ballot.id;
  return out;
}

BallotNumber
parse_ballot(std::string_view text)
{
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    auto dot = text.find('.', start);
    parts.push_back(text.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos)
      break;
    start = dot + 1;
  }
  if (parts.size() != 2 && parts.size() != 3)
    throw Error(Errc::MalformedBallot, "'" + std::string(text) + "'");

  BallotNumber ballot;
  auto n = parse_decimal(parts[0]);
  if (!n)
    throw Error(Errc::MalformedBallot, "bad counter in '" + std::string(text) + "'");
  ballot.n = *n;
  if (parts.size() == 3) {
    auto p = parse_decimal(parts[1]);
    if (!p)
      throw Error(Errc::MalformedBallot, "bad priority in '" + std::string(text) + "'");
    ballot.priority = *p;
  }
  if (!is_valid_id(parts.back()))
    throw Error(Errc::MalformedBallot, "bad id in '" + std::string(text) + "'");
  ballot.id = std::string(parts.back());
  return ballot;
}

std::ostream&
operator<<(std::ostream& os, const BallotNumber& ballot)
{
  return os << to_string(ballot);
}

std::string_view
to_string(Verb verb) noexcept
{
  for (const auto& [text, v] : kVerbs) {
    if (v == verb)
      return text;
  }
  return "?";
}

bool
is_valid_component(std::string_view component) noexcept
{
  return !component.empty() && component.find('/') == std::string_view::npos;
}

bool
is_valid_id(std::string_view id) noexcept
{
  return is_valid_component(id) && id.find('.') == std::string_view::npos;
}

std::vector<std::string>
split_path(std::string_view path)
{
  if (path.empty() || path.front() != '/')
    throw Error(Errc::MalformedName, "path must begin with '/': '" + std::string(path) + "'");
  std::vector<std::string> out;
  size_t start = 1;
  while (start <= path.size()) {
    auto slash = path.find('/', start);
    auto end = slash == std::string_view::npos ? path.size() : slash;
    if (end == start)
      throw Error(Errc::MalformedName, "empty component in '" + std::string(path) + "'");
    out.emplace_back(path.substr(start, end - start));
    if (slash == std::string_view::npos)
      break;
    start = slash + 1;
  }
  return out;
}

std::string
join_path(const std::vector<std::string>& components)
{
  std::string out;
  for (const auto& c : components) {
    out += '/';
    out += c;
  }
  return out;
}

bool
has_path_prefix(std::string_view path, std::string_view prefix)
{
  if (prefix.empty() || prefix == "/")
    return true;
  if (path.size() < prefix.size() || path.substr(0, prefix.size()) != prefix)
    return false;
  return path.size() == prefix.size() || path[prefix.size()] == '/';
}

void
validate(const ConsensusName& name)
{
  if (name.scheme == Scheme::Individual) {
    if (name.routable_prefix.empty())
      throw Error(Errc::MalformedName, "individual name needs a routable prefix");
    for (const auto& c : name.routable_prefix)
      require_component(c, "prefix");
  }
  require_component(name.grp, "grp");
  require_component(name.prg, "prg");
  require_component(name.var, "var");
  if (name.verb == Verb::Read) {
    if (name.scheme != Scheme::Individual)
      throw Error(Errc::MalformedName, "read is only defined for individual names");
  }
  else if (!name.ballot) {
    throw Error(Errc::MalformedName, std::string(to_string(name.verb)) + " needs a ballot");
  }
  if (name.ballot && !is_valid_id(name.ballot->id))
    throw Error(Errc::InvalidComponent, "ballot id '" + name.ballot->id + "'");
}

std::string
encode_name(const ConsensusName& name)
{
  validate(name);
  std::string out;
  auto append = [&out](std::string_view c) {
    out += '/';
    out += c;
  };
  if (name.scheme == Scheme::Individual) {
    for (const auto& c : name.routable_prefix)
      append(c);
    append(name.grp);
  }
  else {
    append(name.grp);
    append("v" + std::to_string(name.grpver));
  }
  append(name.prg);
  append(name.var);
  append(to_string(name.verb));
  if (name.ballot)
    append(to_string(*name.ballot));
  if (name.iter)
    append(std::to_string(*name.iter));
  return out;
}

ConsensusName
parse_name(std::string_view path, Scheme scheme)
{
  auto parts = split_path(path);

  // Suffix components (ballots contain '.', iters are decimal) can never be
  // verb tokens, so the rightmost verb token is the verb.
  std::optional<size_t> verb_at;
  for (size_t i = parts.size(); i-- > 0;) {
    if (verb_from_token(parts[i])) {
      verb_at = i;
      break;
    }
  }
  if (!verb_at)
    throw Error(Errc::UnknownVerb, "no verb in '" + std::string(path) + "'");

  ConsensusName name;
  name.scheme = scheme;
  name.verb = *verb_from_token(parts[*verb_at]);

  const size_t head = *verb_at;
  if (scheme == Scheme::Individual) {
    if (head < 4)
      throw Error(Errc::MalformedName, "too few components in '" + std::string(path) + "'");
    name.routable_prefix.assign(parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(head - 3));
    name.grp = parts[head - 3];
  }
  else {
    if (head != 4)
      throw Error(Errc::MalformedName, "group name needs grp/grpver/prg/var in '" + std::string(path) + "'");
    name.grp = parts[0];
    const auto& ver = parts[1];
    std::optional<uint64_t> grpver;
    if (ver.size() > 1 && ver.front() == 'v')
      grpver = parse_decimal(std::string_view(ver).substr(1));
    if (!grpver)
      throw Error(Errc::MalformedName, "bad grpver '" + ver + "'");
    name.grpver = *grpver;
  }
  name.prg = parts[head - 2];
  name.var = parts[head - 1];

  const size_t suffix = parts.size() - head - 1;
  if (suffix > 2)
    throw Error(Errc::MalformedName, "trailing components in '" + std::string(path) + "'");
  if (suffix >= 1) {
    const auto& first = parts[head + 1];
    if (first.find('.') != std::string::npos) {
      name.ballot = parse_ballot(first);
    }
    else if (name.verb == Verb::Read && suffix == 1) {
      auto iter = parse_decimal(first);
      if (!iter)
        throw Error(Errc::MalformedName, "bad iter '" + first + "'");
      name.iter = *iter;
    }
    else {
      throw Error(Errc::MalformedBallot, "'" + first + "'");
    }
  }
  if (suffix == 2) {
    auto iter = parse_decimal(parts[head + 2]);
    if (!iter)
      throw Error(Errc::MalformedName, "bad iter '" + parts[head + 2] + "'");
    name.iter = *iter;
  }

  validate(name);
  return name;
}

} // namespace ccnpaxos
