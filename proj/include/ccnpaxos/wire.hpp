#pragma once

#include "ccnpaxos/naming.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ccnpaxos {

enum class ValueKind : uint8_t { Opaque = 0, Link = 1, NoOp = 2 };

/// A consensus value. NoOp carries no bytes and differs from every other
/// value, including an empty Opaque.
struct Value
{
  ValueKind kind = ValueKind::Opaque;
  std::string bytes;

  static Value
  opaque(std::string bytes)
  {
    return {ValueKind::Opaque, std::move(bytes)};
  }

  static Value
  link(std::string name)
  {
    return {ValueKind::Link, std::move(name)};
  }

  static Value
  noop()
  {
    return {ValueKind::NoOp, {}};
  }

  bool
  is_noop() const noexcept
  {
    return kind == ValueKind::NoOp;
  }

  friend bool operator==(const Value&, const Value&) = default;
};

/// Printable, injective rendering used in traces: "noop", "opaque:<text>",
/// "link:<text>" with non-printable bytes as \xHH.
std::string
describe(const Value& value);

/// One (N, iter, V) tuple.
struct LogEntry
{
  BallotNumber ballot;
  uint64_t iter = 0;
  Value value;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct PrepareReq
{
  friend bool operator==(const PrepareReq&, const PrepareReq&) = default;
};

/// On ack, current_max is the promised ballot and priors lists every
/// accepted entry at or above the requested iter.
struct PrepareResp
{
  bool ack = false;
  BallotNumber current_max;
  std::vector<LogEntry> priors;

  friend bool operator==(const PrepareResp&, const PrepareResp&) = default;
};

struct AcceptReq
{
  Value value;
  uint64_t grpver = 0;

  friend bool operator==(const AcceptReq&, const AcceptReq&) = default;
};

struct AcceptResp
{
  bool ack = false;
  BallotNumber current_max;

  friend bool operator==(const AcceptResp&, const AcceptResp&) = default;
};

/// entries are non-empty, sorted by iter, one per iter.
struct Learn
{
  std::vector<LogEntry> entries;
  uint64_t grpver = 0;

  friend bool operator==(const Learn&, const Learn&) = default;
};

struct ReadReq
{
  friend bool operator==(const ReadReq&, const ReadReq&) = default;
};

struct ReadResp
{
  std::vector<LogEntry> found;

  friend bool operator==(const ReadResp&, const ReadResp&) = default;
};

enum class NackReason : uint8_t {
  Unspecified = 0,
  NotFound = 1,
  NotMaster = 2,
  BadVerbPayload = 3,
  UnknownGrpver = 4,
  Malformed = 5,
};

struct Nack
{
  NackReason reason = NackReason::Unspecified;
  std::string hint;

  friend bool operator==(const Nack&, const Nack&) = default;
};

/// Content Object / Push acknowledgement of a Learn.
struct Ack
{
  friend bool operator==(const Ack&, const Ack&) = default;
};

using Body = std::variant<PrepareReq, PrepareResp, AcceptReq, AcceptResp, Learn, ReadReq, ReadResp, Nack, Ack>;

struct Payload
{
  Body body;
  /// Where responses go. Required on Group-scheme requests.
  std::optional<std::string> response_target;
  /// Sending node id.
  std::optional<std::string> origin;

  friend bool operator==(const Payload&, const Payload&) = default;
};

/// Canonical encoding; see docs/wire.md. Learn entries are sorted by iter.
std::string
encode_payload(const Payload& payload);

/// Throws MalformedPayload on anything outside the image of encode_payload.
Payload
decode_payload(std::string_view bytes);

/// Sorts entries by iter in place.
void
canonicalize(Learn& learn);

uint64_t
fnv1a(std::string_view bytes) noexcept;

/// 16 lowercase hex digits of fnv1a(bytes).
std::string
hex_digest(std::string_view bytes);

uint64_t
digest(const Value& value) noexcept;

enum class MessageKind : uint8_t { Interest, ContentObject, PushRequest, PushAck };

std::string_view
to_string(MessageKind kind) noexcept;

/// A network message. `payload` holds an encode_payload() image.
///
/// Interests are matched (PIT, Content Store) by name plus the digest of
/// their payload; a Content Object carries the name and request digest of
/// the Interest it answers.
struct Message
{
  MessageKind kind = MessageKind::Interest;
  std::string name;
  std::string payload;
  uint64_t request_digest = 0;
  uint64_t max_age_ms = 0;
};

Message
make_interest(std::string name, const Payload& payload);

Message
make_content(const Message& interest, const Payload& payload, uint64_t max_age_ms);

Message
make_push(std::string name, const Payload& payload);

Message
make_push_ack(std::string name, const Payload& payload);

namespace codec {

/// Minimal LEB128 and length-prefixed string primitives shared with the
/// membership sub-format.
class Writer
{
public:
  void u8(uint8_t v);
  void varint(uint64_t v);
  void str(std::string_view s);

  std::string
  take()
  {
    return std::move(m_out);
  }

private:
  std::string m_out;
};

class Reader
{
public:
  explicit Reader(std::string_view in)
    : m_in(in)
  {
  }

  uint8_t u8();
  uint64_t varint();
  std::string str();
  bool boolean();

  size_t
  remaining() const noexcept
  {
    return m_in.size() - m_pos;
  }

  /// Throws MalformedPayload unless all input was consumed.
  void finish() const;

private:
  std::string_view m_in;
  size_t m_pos = 0;
};

} // namespace codec

} // namespace ccnpaxos
