#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ccnpaxos {

/// Totally ordered proposal number, either (n, id) or (n, priority, id).
///
/// Ordering is lexicographic. A larger priority wins at equal n. Ids are
/// compared by byte order and break every remaining tie, so two servers never
/// produce equal ballots. The two forms must not be mixed within one
/// consensus variable; comparing them throws MixedBallotForms.
struct BallotNumber
{
  uint64_t n = 0;
  std::optional<uint64_t> priority;
  std::string id;

  friend bool operator==(const BallotNumber&, const BallotNumber&) = default;
};

enum class Ordering { Less, Equal, Greater };

Ordering
compare_ballots(const BallotNumber& a, const BallotNumber& b);

std::strong_ordering
operator<=>(const BallotNumber& a, const BallotNumber& b);

/// "n.id" or "n.p.id".
std::string
to_string(const BallotNumber& ballot);

BallotNumber
parse_ballot(std::string_view text);

std::ostream&
operator<<(std::ostream& os, const BallotNumber& ballot);

enum class Scheme { Individual, Group };
enum class Verb { Read, Prepare, Accept, Learn };

std::string_view
to_string(Verb verb) noexcept;

/// A parsed consensus name.
///
/// Individual scheme: /<prefix...>/grp/prg/var/<verb>[/N[/iter]]
/// Group scheme:      /grp/v<grpver>/prg/var/<verb>/N[/iter]
///
/// Read is only valid under the Individual scheme and may omit the ballot.
/// A Read may also carry an iter without a ballot ("read/3"): ballots always
/// contain a '.', so a bare decimal component is unambiguous.
struct ConsensusName
{
  Scheme scheme = Scheme::Individual;
  std::vector<std::string> routable_prefix;
  std::string grp;
  uint64_t grpver = 0;
  std::string prg;
  std::string var;
  Verb verb = Verb::Read;
  std::optional<BallotNumber> ballot;
  std::optional<uint64_t> iter;

  friend bool operator==(const ConsensusName&, const ConsensusName&) = default;
};

/// Throws InvalidComponent or MalformedName when the invariants do not hold.
void
validate(const ConsensusName& name);

std::string
encode_name(const ConsensusName& name);

ConsensusName
parse_name(std::string_view path, Scheme scheme);

/// Splits "/a/b/c" into {"a","b","c"}. Throws MalformedName on a path that
/// does not begin with '/' or contains an empty component.
std::vector<std::string>
split_path(std::string_view path);

std::string
join_path(const std::vector<std::string>& components);

/// True if `prefix` (a '/'-path) is a component-wise prefix of `path`.
bool
has_path_prefix(std::string_view path, std::string_view prefix);

/// Valid name component: non-empty, no '/'.
bool
is_valid_component(std::string_view component) noexcept;

/// Valid server identifier: a valid component that also has no '.'.
bool
is_valid_id(std::string_view id) noexcept;

} // namespace ccnpaxos
