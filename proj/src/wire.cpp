#include "ccnpaxos/wire.hpp"

#include "ccnpaxos/error.hpp"

#include <algorithm>

namespace ccnpaxos {

namespace {

constexpr uint8_t kVersion = 1;
constexpr uint8_t kHasTarget = 0x01;
constexpr uint8_t kHasOrigin = 0x02;

[[noreturn]] void
malformed(const std::string& why)
{
  throw Error(Errc::MalformedPayload, why);
}

void
put_ballot(codec::Writer& w, const BallotNumber& b)
{
  w.varint(b.n);
  w.u8(b.priority ? 1 : 0);
  if (b.priority)
    w.varint(*b.priority);
  w.str(b.id);
}

BallotNumber
get_ballot(codec::Reader& r)
{
  BallotNumber b;
  b.n = r.varint();
  if (r.boolean())
    b.priority = r.varint();
  b.id = r.str();
  if (!is_valid_id(b.id))
    malformed("invalid ballot id");
  return b;
}

void
put_value(codec::Writer& w, const Value& v)
{
  w.u8(static_cast<uint8_t>(v.kind));
  w.str(v.bytes);
}

Value
get_value(codec::Reader& r)
{
  Value v;
  auto kind = r.u8();
  if (kind > static_cast<uint8_t>(ValueKind::NoOp))
    malformed("unknown value kind");
  v.kind = static_cast<ValueKind>(kind);
  v.bytes = r.str();
  if (v.kind == ValueKind::NoOp && !v.bytes.empty())
    malformed("no-op value with bytes");
  return v;
}

void
put_entries(codec::Writer& w, const std::vector<LogEntry>& entries)
{
  w.varint(entries.size());
  for (const auto& e : entries) {
    put_ballot(w, e.ballot);
    w.varint(e.iter);
    put_value(w, e.value);
  }
}

std::vector<LogEntry>
get_entries(codec::Reader& r)
{
  auto count = r.varint();
  // Each entry takes at least 5 bytes; reject counts the input cannot hold.
  if (count > r.remaining() / 5)
    malformed("entry count exceeds input");
  std::vector<LogEntry> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    LogEntry e;
    e.ballot = get_ballot(r);
    e.iter = r.varint();
    e.value = get_value(r);
    out.push_back(std::move(e));
  }
  return out;
}

void
check_mixed_forms(const std::vector<LogEntry>& entries)
{
  for (const auto& e : entries) {
    if (e.ballot.priority.has_value() != entries.front().ballot.priority.has_value())
      malformed("mixed ballot forms");
  }
}

template<class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template<class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

namespace codec {

void
Writer::u8(uint8_t v)
{
  m_out.push_back(static_cast<char>(v));
}

void
Writer::varint(uint64_t v)
{
  while (v >= 0x80) {
    m_out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  m_out.push_back(static_cast<char>(v));
}

void
Writer::str(std::string_view s)
{
  varint(s.size());
  m_out.append(s);
}

uint8_t
Reader::u8()
{
  if (m_pos >= m_in.size())
    malformed("truncated");
  return static_cast<uint8_t>(m_in[m_pos++]);
}

uint64_t
Reader::varint()
{
  uint64_t value = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    uint8_t byte = u8();
    if (shift == 63 && byte > 1)
      malformed("varint overflow");
    value |= static_cast<uint64_t>(byte & 0x7f) << shift;
    if ((byte & 0x80) == 0) {
      if (byte == 0 && shift != 0)
        malformed("non-minimal varint");
      return value;
    }
  }
  malformed("varint too long");
}

std::string
Reader::str()
{
  auto len = varint();
  if (len > remaining())
    malformed("string length exceeds input");
  std::string out(m_in.substr(m_pos, len));
  m_pos += len;
  return out;
}

bool
Reader::boolean()
{
  auto b = u8();
  if (b > 1)
    malformed("bad boolean");
  return b == 1;
}

void
Reader::finish() const
{
  if (m_pos != m_in.size())
    malformed("trailing bytes");
}

} // namespace codec

std::string
describe(const Value& value)
{
  if (value.kind == ValueKind::NoOp)
    return "noop";
  std::string out = value.kind == ValueKind::Link ? "link:" : "opaque:";
  static constexpr char kHex[] = "0123456789abcdef";
  for (unsigned char c : value.bytes) {
    if (c >= 0x20 && c < 0x7f && c != '\\') {
      out.push_back(static_cast<char>(c));
    }
    else {
      out += "\\x";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    }
  }
  return out;
}

void
canonicalize(Learn& learn)
{
  std::stable_sort(learn.entries.begin(), learn.entries.end(),
                   [](const LogEntry& a, const LogEntry& b) { return a.iter < b.iter; });
}

std::string
encode_payload(const Payload& payload)
{
  codec::Writer w;
  w.u8(kVersion);
  w.u8(static_cast<uint8_t>(payload.body.index() + 1));
  uint8_t flags = 0;
  if (payload.response_target)
    flags |= kHasTarget;
  if (payload.origin)
    flags |= kHasOrigin;
  w.u8(flags);
  if (payload.response_target)
    w.str(*payload.response_target);
  if (payload.origin)
    w.str(*payload.origin);

  std::visit(overloaded{
               [](const PrepareReq&) {},
               [&](const PrepareResp& p) {
                 w.u8(p.ack ? 1 : 0);
                 put_ballot(w, p.current_max);
                 put_entries(w, p.priors);
               },
               [&](const AcceptReq& p) {
                 put_value(w, p.value);
                 w.varint(p.grpver);
               },
               [&](const AcceptResp& p) {
                 w.u8(p.ack ? 1 : 0);
                 put_ballot(w, p.current_max);
               },
               [&](const Learn& p) {
                 Learn sorted = p;
                 canonicalize(sorted);
                 put_entries(w, sorted.entries);
                 w.varint(sorted.grpver);
               },
               [](const ReadReq&) {},
               [&](const ReadResp& p) { put_entries(w, p.found); },
               [&](const Nack& p) {
                 w.u8(static_cast<uint8_t>(p.reason));
                 w.str(p.hint);
               },
               [](const Ack&) {},
             },
             payload.body);
  return w.take();
}

Payload
decode_payload(std::string_view bytes)
{
  if (bytes.empty())
    malformed("empty");
  codec::Reader r(bytes);
  if (r.u8() != kVersion)
    malformed("unknown version");
  auto tag = r.u8();
  auto flags = r.u8();
  if (flags & ~(kHasTarget | kHasOrigin))
    malformed("unknown flags");

  Payload p;
  if (flags & kHasTarget)
    p.response_target = r.str();
  if (flags & kHasOrigin)
    p.origin = r.str();

  switch (tag) {
    case 1:
      p.body = PrepareReq{};
      break;
    case 2: {
      PrepareResp resp;
      resp.ack = r.boolean();
      resp.current_max = get_ballot(r);
      resp.priors = get_entries(r);
      p.body = std::move(resp);
      break;
    }
    case 3: {
      AcceptReq req;
      req.value = get_value(r);
      req.grpver = r.varint();
      p.body = std::move(req);
      break;
    }
    case 4: {
      AcceptResp resp;
      resp.ack = r.boolean();
      resp.current_max = get_ballot(r);
      p.body = std::move(resp);
      break;
    }
    case 5: {
      Learn learn;
      learn.entries = get_entries(r);
      learn.grpver = r.varint();
      if (learn.entries.empty())
        malformed("empty learn");
      for (size_t i = 1; i < learn.entries.size(); ++i) {
        if (learn.entries[i - 1].iter >= learn.entries[i].iter)
          malformed("learn entries not strictly sorted by iter");
      }
      check_mixed_forms(learn.entries);
      p.body = std::move(learn);
      break;
    }
    case 6:
      p.body = ReadReq{};
      break;
    case 7: {
      ReadResp resp;
      resp.found = get_entries(r);
      p.body = std::move(resp);
      break;
    }
    case 8: {
      Nack nack;
      auto reason = r.u8();
      if (reason > static_cast<uint8_t>(NackReason::Malformed))
        malformed("unknown nack reason");
      nack.reason = static_cast<NackReason>(reason);
      nack.hint = r.str();
      p.body = std::move(nack);
      break;
    }
    case 9:
      p.body = Ack{};
      break;
    default:
      malformed("unknown body tag");
  }
  r.finish();
  return p;
}

uint64_t
fnv1a(std::string_view bytes) noexcept
{
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string
hex_digest(std::string_view bytes)
{
  static constexpr char kHex[] = "0123456789abcdef";
  uint64_t h = fnv1a(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

uint64_t
digest(const Value& value) noexcept
{
  std::string buf;
  buf.reserve(value.bytes.size() + 1);
  buf.push_back(static_cast<char>(value.kind));
  buf += value.bytes;
  return fnv1a(buf);
}

std::string_view
to_string(MessageKind kind) noexcept
{
  switch (kind) {
    case MessageKind::Interest: return "interest";
    case MessageKind::ContentObject: return "content";
    case MessageKind::PushRequest: return "push";
    case MessageKind::PushAck: return "push_ack";
  }
  return "?";
}

Message
make_interest(std::string name, const Payload& payload)
{
  Message m;
  m.kind = MessageKind::Interest;
  m.name = std::move(name);
  m.payload = encode_payload(payload);
  m.request_digest = fnv1a(m.payload);
  return m;
}

Message
make_content(const Message& interest, const Payload& payload, uint64_t max_age_ms)
{
  Message m;
  m.kind = MessageKind::ContentObject;
  m.name = interest.name;
  m.payload = encode_payload(payload);
  m.request_digest = interest.request_digest;
  m.max_age_ms = max_age_ms;
  return m;
}

Message
make_push(std::string name, const Payload& payload)
{
  Message m;
  m.kind = MessageKind::PushRequest;
  m.name = std::move(name);
  m.payload = encode_payload(payload);
  m.request_digest = fnv1a(m.payload);
  return m;
}

Message
make_push_ack(std::string name, const Payload& payload)
{
  Message m = make_push(std::move(name), payload);
  m.kind = MessageKind::PushAck;
  return m;
}

} // namespace ccnpaxos
