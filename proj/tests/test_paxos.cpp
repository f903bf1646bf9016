#include "ccnpaxos/error.hpp"
#include "ccnpaxos/paxos.hpp"
#include "model_check.hpp"

#include <doctest.h>

#include <random>

using namespace ccnpaxos;

namespace {

const VarKey kKey{"g", "kv", "log"};

BallotNumber
b(uint64_t n, std::string id, std::optional<uint64_t> p = std::nullopt)
{
  return {n, p, std::move(id)};
}

GroupConfig
group3()
{
  GroupConfig g;
  g.grp = "g";
  g.grpver = 1;
  g.learner_target = "/l";
  g.members = {{"a0", "/a0"}, {"a1", "/a1"}, {"a2", "/a2"}};
  return g;
}

Proposer
master_at(const std::string& id, const GroupConfig& g, std::vector<PrepareResp> promises = {})
{
  ProposerOptions opts;
  opts.my_id = id;
  Proposer p(opts);
  auto round = p.start_round(g);
  while (promises.size() < g.majority())
    promises.push_back(PrepareResp{true, round.ballot, {}});
  for (size_t i = 0; i < promises.size(); ++i)
    p.on_promise(g.members[i].id, round.ballot, promises[i]);
  REQUIRE(p.phase() == Proposer::Phase::Master);
  return p;
}

} // namespace

TEST_CASE("acceptor prepare")
{
  Acceptor fresh(kKey);
  auto r = fresh.on_prepare(b(1, "p0"), 0);
  CHECK(r.ack);
  CHECK(r.priors.empty());
  CHECK(fresh.promised() == b(1, "p0"));

  Acceptor a(kKey);
  a.on_prepare(b(2, "p1"));
  a.on_accept(b(2, "p1"), 0, Value::opaque("X"), "/l", 1);
  auto r2 = a.on_prepare(b(3, "p0"), 0);
  CHECK(r2.ack);
  REQUIRE(r2.priors.size() == 1);
  CHECK(r2.priors[0] == LogEntry{b(2, "p1"), 0, Value::opaque("X")});

  Acceptor c(kKey);
  c.on_prepare(b(3, "p1"));
  auto deny = c.on_prepare(b(2, "p0"));
  CHECK(!deny.ack);
  CHECK(deny.current_max == b(3, "p1"));
  CHECK(c.promised() == b(3, "p1"));
}

TEST_CASE("acceptor accept")
{
  Acceptor a(kKey);
  a.on_prepare(b(3, "p0"));
  auto ok = a.on_accept(b(3, "p0"), 0, Value::opaque("V"), "/l", 1);
  CHECK(ok.resp.ack);
  REQUIRE(ok.notify);
  CHECK(ok.notify->target == "/l");
  CHECK(ok.notify->entry == LogEntry{b(3, "p0"), 0, Value::opaque("V")});

  Acceptor c(kKey);
  c.on_prepare(b(3, "p1"));
  auto no = c.on_accept(b(2, "p0"), 0, Value::opaque("V"), "/l", 1);
  CHECK(!no.resp.ack);
  CHECK(no.resp.current_max == b(3, "p1"));
  CHECK(!no.notify);
  CHECK(c.accepted().empty());

  Acceptor fresh(kKey);
  auto noop = fresh.on_accept(b(1, "a"), 5, Value::noop(), "/l", 1);
  CHECK(noop.resp.ack);
  CHECK(fresh.accepted().at(5).value.is_noop());
}

TEST_CASE("acceptor promise is monotone under random traffic")
{
  std::mt19937_64 rng(1);
  Acceptor a(kKey);
  std::vector<AcceptorTransition> log;
  a.set_transition_hook([&](const AcceptorTransition& t) { log.push_back(t); });
  for (int i = 0; i < 5000; ++i) {
    BallotNumber ballot = b(rng() % 20, "p" + std::to_string(rng() % 3));
    if (rng() % 2)
      a.on_prepare(ballot, 0);
    else
      a.on_accept(ballot, rng() % 4, Value::opaque("v"), "/l", 1);
  }
  REQUIRE(log.size() == 5000);
  for (const auto& t : log) {
    if (t.promised_before)
      REQUIRE(t.promised_after);
    if (t.promised_before && t.promised_after)
      REQUIRE(!(*t.promised_after < *t.promised_before));
  }
  for (const auto& [iter, av] : a.accepted())
    CHECK(!(*a.promised() < av.ballot));
}

TEST_CASE("proposer rounds and ballots")
{
  ProposerOptions opts;
  opts.my_id = "p0";
  Proposer p(opts);
  auto round = p.start_round(group3());
  CHECK(round.ballot == b(1, "p0"));
  CHECK(round.sends.size() == 3);
  CHECK_THROWS_AS(p.start_round(group3()), Error);

  p.on_promise("a0", round.ballot, PrepareResp{false, b(4, "p1"), {}});
  CHECK(p.phase() == Proposer::Phase::Idle);
  CHECK(p.start_round(group3()).ballot == b(5, "p0"));

  ProposerOptions prio;
  prio.my_id = "p0";
  prio.priority = 7;
  Proposer q(prio);
  CHECK(q.start_round(group3()).ballot == b(1, "p0", 7));
}

TEST_CASE("retry ballots exceed every observed ballot")
{
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    ProposerOptions opts;
    opts.my_id = "p0";
    Proposer p(opts);
    BallotNumber highest_seen;
    for (int step = 0; step < 20; ++step) {
      auto round = p.start_round(group3());
      REQUIRE(highest_seen < round.ballot);
      BallotNumber rival = b(round.ballot.n + rng() % 5, "p" + std::to_string(1 + rng() % 3));
      if (rival < round.ballot)
        rival = b(round.ballot.n + 1, "p1");
      p.on_promise("a" + std::to_string(rng() % 3), round.ballot, PrepareResp{false, rival, {}});
      REQUIRE(p.phase() == Proposer::Phase::Idle);
      highest_seen = std::max(highest_seen, rival);
    }
  }
}

TEST_CASE("proposer becomes master on a majority")
{
  ProposerOptions opts;
  opts.my_id = "p0";
  Proposer p(opts);
  auto round = p.start_round(group3());
  auto first = p.on_promise("a0", round.ballot, PrepareResp{true, round.ballot, {}});
  CHECK(first.status == Proposer::PromiseOutcome::Status::Recorded);
  CHECK(p.phase() == Proposer::Phase::Preparing);
  // Duplicate promise from the same acceptor does not count twice.
  p.on_promise("a0", round.ballot, PrepareResp{true, round.ballot, {}});
  CHECK(p.phase() == Proposer::Phase::Preparing);
  // Stale ballot and non-member are ignored.
  CHECK(p.on_promise("a1", b(9, "zz"), PrepareResp{true, b(9, "zz"), {}}).status ==
        Proposer::PromiseOutcome::Status::Stale);
  CHECK(p.on_promise("x9", round.ballot, PrepareResp{true, round.ballot, {}}).status ==
        Proposer::PromiseOutcome::Status::Stale);
  auto second = p.on_promise("a1", round.ballot, PrepareResp{true, round.ballot, {}});
  CHECK(second.status == Proposer::PromiseOutcome::Status::BecameMaster);
  CHECK(second.sends.empty());
}

TEST_CASE("new master re-proposes the prior with the highest ballot")
{
  auto g = group3();
  ProposerOptions opts;
  opts.my_id = "p0";
  Proposer p(opts);
  p.observe(b(5, "z"));
  auto round = p.start_round(g);
  p.on_promise("a0", round.ballot, PrepareResp{true, round.ballot, {{b(1, "a"), 0, Value::opaque("X")}}});
  auto out = p.on_promise("a1", round.ballot, PrepareResp{true, round.ballot, {{b(2, "b"), 0, Value::opaque("Y")}}});
  REQUIRE(out.status == Proposer::PromiseOutcome::Status::BecameMaster);
  REQUIRE(out.reproposed.size() == 1);
  CHECK(out.reproposed[0].value == Value::opaque("Y"));
  CHECK(out.sends.size() == 3);
  for (const auto& s : out.sends) {
    CHECK(s.iter == 0);
    CHECK(s.ballot == round.ballot);
  }
  // The next fresh iter follows the reproposal.
  CHECK(p.submit(Value::opaque("Z"), g).front().iter == 1);
}

TEST_CASE("submit assigns consecutive iters")
{
  auto g = group3();
  ProposerOptions opts;
  opts.my_id = "p0";
  Proposer idle(opts);
  CHECK_THROWS_AS(idle.submit(Value::opaque("v"), g), Error);
  idle.start_round(g);
  CHECK_THROWS_AS(idle.submit(Value::opaque("v"), g), Error);

  Proposer p = master_at("p0", g);
  CHECK(p.submit(Value::opaque("a"), g).front().iter == 0);
  CHECK(p.submit(Value::opaque("b"), g).front().iter == 1);
  CHECK(p.submit(Value::opaque("c"), g).front().iter == 2);
  CHECK(p.submit(Value::opaque("d"), g).size() == 3);
}

TEST_CASE("accept responses choose on a majority and preempt on a deny")
{
  auto g = group3();
  Proposer p = master_at("p0", g);
  const auto ballot = p.ballot();
  p.submit(Value::opaque("a"), g);
  auto r0 = p.on_accept_resp("a0", ballot, 0, AcceptResp{true, ballot});
  CHECK(r0.status == Proposer::AcceptOutcome::Status::Recorded);
  auto r1 = p.on_accept_resp("a1", ballot, 0, AcceptResp{true, ballot});
  CHECK(r1.status == Proposer::AcceptOutcome::Status::Chosen);
  CHECK(r1.acks == 2);
  CHECK(r1.quorum == 2);
  CHECK(p.chosen().at(0).value == Value::opaque("a"));
  // Late ack after choice is stale.
  CHECK(p.on_accept_resp("a2", ballot, 0, AcceptResp{true, ballot}).status ==
        Proposer::AcceptOutcome::Status::Stale);

  p.submit(Value::opaque("b"), g);
  auto pre = p.on_accept_resp("a2", ballot, 1, AcceptResp{false, b(9, "p9")});
  CHECK(pre.status == Proposer::AcceptOutcome::Status::Preempted);
  CHECK(p.phase() == Proposer::Phase::Idle);
  CHECK(p.max_seen_n() == 9);
  // Chosen entries survive abandonment.
  CHECK(p.chosen().count(0) == 1);
}

TEST_CASE("reads")
{
  auto g = group3();
  Proposer p = master_at("p0", g);
  p.on_learned({b(2, "p0"), 0, Value::opaque("V")});
  auto hit = std::get<ReadResp>(p.on_read(std::nullopt, 0));
  CHECK(hit.found == std::vector<LogEntry>{{b(2, "p0"), 0, Value::opaque("V")}});
  CHECK(std::get<Nack>(p.on_read(std::nullopt, 9)).reason == NackReason::NotFound);
  p.on_learned({b(2, "p0"), 3, Value::noop()});
  CHECK(std::get<ReadResp>(p.on_read(std::nullopt, 3)).found.front().value.is_noop());
  CHECK(std::get<ReadResp>(p.on_read(std::nullopt, std::nullopt)).found.size() == 2);
  CHECK(std::get<ReadResp>(p.on_read(b(7, "x"), std::nullopt)).found.empty());

  ProposerOptions opts;
  opts.my_id = "p1";
  Proposer empty(opts);
  auto none = p.on_read(std::nullopt, std::nullopt);
  CHECK(std::holds_alternative<ReadResp>(empty.on_read(std::nullopt, std::nullopt)));
  CHECK(std::get<ReadResp>(empty.on_read(std::nullopt, std::nullopt)).found.empty());
  CHECK(std::holds_alternative<ReadResp>(none));
}

TEST_CASE("fill_noops covers exactly the gaps")
{
  auto g = group3();
  Proposer p = master_at("p0", g);
  CHECK_THROWS_AS(Proposer(ProposerOptions{"p9", {}, 0, {}}).fill_noops(3, g), Error);
  p.on_learned({b(1, "p0"), 0, Value::opaque("a")});
  p.on_learned({b(1, "p0"), 2, Value::opaque("c")});
  auto sends = p.fill_noops(3, g);
  REQUIRE(sends.size() == 3);
  for (const auto& s : sends) {
    CHECK(s.iter == 1);
    CHECK(s.value.is_noop());
  }
  CHECK(p.fill_noops(3, g).empty());
}

TEST_CASE("learner tallies a majority of distinct acceptors")
{
  GroupRegistry reg(group3());
  Learner l;
  LogEntry e{b(1, "p0"), 0, Value::opaque("V")};
  auto first = l.on_learn("a0", {e}, 1, reg);
  CHECK(first.learned.empty());
  auto dup = l.on_learn("a0", {e}, 1, reg);
  CHECK(dup.learned.empty());
  CHECK(l.votes(0, e.ballot, e.value) == 1);
  auto outsider = l.on_learn("zz", {e}, 1, reg);
  CHECK(outsider.learned.empty());
  auto second = l.on_learn("a1", {e}, 1, reg);
  REQUIRE(second.learned.size() == 1);
  CHECK(second.learned[0].entry == e);
  CHECK(second.learned[0].votes == 2);
  CHECK(second.notify.size() == 3);
  CHECK(second.announcement.entries == std::vector<LogEntry>{e});
  CHECK(l.on_learn("a2", {e}, 1, reg).learned.empty());
  CHECK_THROWS_AS(l.on_learn("a0", {e}, 9, reg), Error);
}

TEST_CASE("learner aggregate")
{
  LogEntry e0{b(2, "a"), 0, Value::opaque("V0")};
  LogEntry e1{b(5, "b"), 1, Value::opaque("V1")};
  auto agg = learner_aggregate({e1, e0}, 1);
  CHECK(agg.ballot == b(5, "b"));
  CHECK(agg.learn.entries == std::vector<LogEntry>{e0, e1});
  CHECK(learner_aggregate({e0}, 1).ballot == e0.ballot);
  CHECK_THROWS_AS(learner_aggregate({}, 1), Error);
}

TEST_CASE("small model check")
{
  testing::ModelConfig cfg;
  cfg.acceptors = 3;
  cfg.proposers = 2;
  cfg.max_steps = 6;
  auto safe = testing::model_check(cfg);
  CHECK(safe.violations == 0);
  CHECK(safe.states > 1000);

  cfg.selection = PriorSelection::LowestBallot;
  auto unsafe = testing::model_check(cfg);
  CHECK(unsafe.violations > 0);
  CHECK(unsafe.counterexample.has_value());
}

TEST_CASE("acceptor symmetry reduction keeps the verdict")
{
  for (auto selection : {PriorSelection::HighestBallot, PriorSelection::LowestBallot}) {
    testing::ModelConfig cfg;
    cfg.max_steps = 6;
    cfg.selection = selection;
    auto reduced = testing::model_check(cfg);
    cfg.symmetry = false;
    auto full = testing::model_check(cfg);
    CHECK(reduced.states < full.states);
    const bool safe = selection == PriorSelection::HighestBallot;
    CHECK((full.violations == 0) == safe);
    CHECK((reduced.violations == 0) == safe);
  }
}
