#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include "eq/instances.hpp"

using namespace eq;

namespace {

Elem le(const QuantalePtr& q, std::initializer_list<std::string> pre,
        std::initializer_list<std::string> post) {
  return lock_eff(q, Multiset::of(pre), Multiset::of(post));
}

}  // namespace

TEST_CASE("atomicity join table") {
  auto q = atomicity_quantale();
  const Mover all[] = {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ, Mover::Err};

  // Golden table for the published lattice plus Err on top. Rows/cols in the
  // order B, L, R, A, TOP, ERR.
  const Mover expected[6][6] = {
      {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ, Mover::Err},
      {Mover::L, Mover::L, Mover::A, Mover::A, Mover::TopFQ, Mover::Err},
      {Mover::R, Mover::A, Mover::R, Mover::A, Mover::TopFQ, Mover::Err},
      {Mover::A, Mover::A, Mover::A, Mover::A, Mover::TopFQ, Mover::Err},
      {Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::Err},
      {Mover::Err, Mover::Err, Mover::Err, Mover::Err, Mover::Err, Mover::Err},
  };
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(std::get<Mover>(atomicity_join(atom(all[i]), atom(all[j])).payload) == expected[i][j]);

  CHECK(q->leq(atom(Mover::B), atom(Mover::A)));
  CHECK(q->leq(atom(Mover::L), atom(Mover::A)));
  CHECK_FALSE(q->leq(atom(Mover::L), atom(Mover::R)));
}

TEST_CASE("atomicity seq table") {
  // Golden table: published composition with Err as annihilator.
  const Mover all[] = {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ, Mover::Err};
  const Mover expected[6][6] = {
      {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ, Mover::Err},
      {Mover::L, Mover::L, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::Err},
      {Mover::R, Mover::A, Mover::R, Mover::A, Mover::TopFQ, Mover::Err},
      {Mover::A, Mover::A, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::Err},
      {Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::Err},
      {Mover::Err, Mover::Err, Mover::Err, Mover::Err, Mover::Err, Mover::Err},
  };
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(std::get<Mover>(atomicity_seq(atom(all[i]), atom(all[j])).payload) == expected[i][j]);

  CHECK(std::get<Mover>(atomicity_seq(atom(Mover::R), atom(Mover::L)).payload) == Mover::A);
  CHECK(std::get<Mover>(atomicity_seq(atom(Mover::A), atom(Mover::A)).payload) == Mover::TopFQ);
}

TEST_CASE("lockset worked compositions") {
  auto q = lockset_quantale({"l", "l1", "l2"});

  // acquire then release cancels
  CHECK(q->eq(lockset_seq(le(q, {}, {"l"}), le(q, {"l"}, {})), le(q, {}, {})));
  // recursive acquisition keeps both claims
  CHECK(q->eq(lockset_seq(le(q, {}, {"l"}), le(q, {}, {"l"})), le(q, {}, {"l", "l"})));
  // hand-over-hand locking
  CHECK(q->eq(lockset_seq(le(q, {}, {"l2"}), le(q, {"l1"}, {})), le(q, {"l1"}, {"l2"})));
}

TEST_CASE("lockset join requires matching deltas") {
  auto q = lockset_quantale({"l"});
  CHECK(q->eq(lockset_join(le(q, {}, {}), le(q, {"l"}, {"l"})), le(q, {"l"}, {"l"})));
  CHECK(q->is_top(lockset_join(le(q, {}, {"l"}), le(q, {"l"}, {}))));
  Elem x = le(q, {"l"}, {"l"});
  CHECK(q->eq(lockset_join(x, x), x));
  // derived order via pointwise multiset join
  CHECK(q->leq(le(q, {"l"}, {"l"}), le(q, {"l", "l"}, {"l", "l"})));
}

namespace {

// Brute-force oracle for the least (c, c') of a lockset composition: scan all
// start multisets up to a bound and keep the pointwise-minimal one satisfying
// the containment conditions.
struct SeqOracle {
  std::vector<Multiset> space;

  explicit SeqOracle(const std::vector<std::string>& names, int bound) {
    std::vector<int> counts(names.size(), 0);
    for (;;) {
      Multiset m;
      for (std::size_t i = 0; i < names.size(); ++i)
        if (counts[i]) m.set(names[i], counts[i]);
      space.push_back(std::move(m));
      std::size_t k = 0;
      while (k < counts.size() && ++counts[k] > bound) counts[k++] = 0;
      if (k == counts.size()) break;
    }
  }

  static Multiset after(const Multiset& c, const Multiset& pre, const Multiset& post) {
    return Multiset::sum(Multiset::diff(c, Multiset::diff(pre, post)), Multiset::diff(post, pre));
  }

  std::optional<std::pair<Multiset, Multiset>> least(const LockEffect& x, const LockEffect& y) {
    std::optional<Multiset> best;
    for (const auto& c : space) {
      if (!Multiset::leq(x.pre, c)) continue;
      Multiset mid = after(c, x.pre, x.post);
      if (!Multiset::leq(y.pre, mid)) continue;
      if (!best || Multiset::leq(c, *best)) best = c;
    }
    if (!best) return std::nullopt;
    Multiset mid = after(*best, x.pre, x.post);
    return std::make_pair(*best, after(mid, y.pre, y.post));
  }
};

}  // namespace

TEST_CASE("lockset seq is the least composition (bounded oracle)") {
  const NameSet locks{"a", "b"};
  auto q = lockset_quantale(locks);
  auto elems = enumerate_lock_effects(q, locks, 2);
  SeqOracle oracle({"a", "b"}, 6);

  for (const auto& x : elems) {
    for (const auto& y : elems) {
      const auto& lx = std::get<LockEffect>(x.payload);
      const auto& ly = std::get<LockEffect>(y.payload);
      if (lx.err || ly.err) continue;
      Elem got = lockset_seq(x, y);
      auto want = oracle.least(lx, ly);
      REQUIRE(want.has_value());
      const auto& lg = std::get<LockEffect>(got.payload);
      CHECK(lg.pre == want->first);
      CHECK(lg.post == want->second);
      // minimality: decrementing any claim of c breaks a containment
      for (const auto& [name, count] : lg.pre.entries()) {
        Multiset c = lg.pre;
        c.set(name, count - 1);
        Multiset mid = SeqOracle::after(c, lx.pre, lx.post);
        CHECK((!Multiset::leq(lx.pre, c) || !Multiset::leq(ly.pre, mid)));
      }
    }
  }
}

TEST_CASE("balanced lock effects compose by join") {
  const NameSet locks{"a", "b"};
  auto q = lockset_quantale(locks);
  auto elems = enumerate_lock_effects(q, locks, 2);
  for (const auto& x : elems) {
    const auto& lx = std::get<LockEffect>(x.payload);
    if (lx.err || lx.pre != lx.post) continue;
    for (const auto& y : elems) {
      const auto& ly = std::get<LockEffect>(y.payload);
      if (ly.err || ly.pre != ly.post) continue;
      Elem got = lockset_seq(x, y);
      Multiset j = Multiset::join(lx.pre, ly.pre);
      CHECK(q->eq(got, lock_eff(q, j, j)));
    }
  }
}

TEST_CASE("law suite passes exhaustively on atomicity") {
  auto report = check_laws(atomicity_quantale());
  for (const auto& r : report.laws) {
    INFO(r.law);
    CHECK(r.pass);
    CHECK(r.exhaustive);
  }
}

TEST_CASE("law suite passes on bounded locksets") {
  const NameSet locks{"a", "b"};
  auto q = lockset_quantale(locks);
  auto elems = enumerate_lock_effects(q, locks, 2);
  LawCheckConfig cfg;
  cfg.exhaustive_cap = 1000000;  // exhaustive through arity 3 at this bound
  auto report = check_laws(q, elems, cfg);
  for (const auto& r : report.laws) {
    INFO(r.law, r.counterexample.empty() ? "" : q->render(r.counterexample[0]));
    CHECK(r.pass);
  }
}

TEST_CASE("set variant laws: everything but seq-assoc, which set pairs cannot support") {
  const NameSet locks{"a", "b"};
  auto q = lockset_set_quantale(locks);
  auto elems = enumerate_lock_effects(q, locks, 1);
  LawCheckConfig cfg;
  cfg.exhaustive_cap = 1000000;
  auto report = check_laws(q, elems, cfg);
  for (const auto& r : report.laws) {
    INFO(r.law);
    if (r.law == "seq-assoc") continue;
    CHECK(r.pass);
  }
  // acq;acq;rel brackets differently: the pair abstraction loses the transient
  // double claim that multisets keep.
  auto* assoc = report.failed("seq-assoc");
  REQUIRE(assoc != nullptr);
  Elem acq = le(q, {}, {"a"});
  Elem rel = le(q, {"a"}, {});
  CHECK(q->is_top(q->seq(q->seq(acq, acq), rel)));
  CHECK(q->eq(q->seq(acq, q->seq(acq, rel)), acq));
}

TEST_CASE("set variant agrees with multisets on non-recursive programs") {
  const NameSet locks{"a", "b"};
  auto qs = lockset_set_quantale(locks);
  auto qm = lockset_quantale(locks);
  auto elems = enumerate_lock_effects(qs, locks, 1);
  for (const auto& x : elems) {
    for (const auto& y : elems) {
      Elem sv = qs->seq(x, y);
      Elem mv = qm->seq(qm->own(x.payload), qm->own(y.payload));
      const auto& lm = std::get<LockEffect>(mv.payload);
      if (!lm.err && lm.pre.max_count() <= 1 && lm.post.max_count() <= 1) {
        CHECK(payload_eq(sv.payload, mv.payload));
      } else {
        CHECK(qs->is_top(sv));
      }
    }
  }
}

TEST_CASE("powerset lift: seq is union with empty unit") {
  auto q = powerset_quantale({"IOExc", "ArgExc"});
  Elem io = *q->parse_elem("{IOExc}");
  Elem arg = *q->parse_elem("{ArgExc}");
  Elem both = *q->parse_elem("{IOExc,ArgExc}");
  CHECK(q->eq(q->seq(io, arg), both));
  CHECK(q->eq(q->seq(q->unit(), io), io));
  CHECK(q->eq(q->join(io, io), io));

  auto report = check_laws(q);
  for (const auto& r : report.laws) {
    INFO(r.law);
    CHECK(r.pass);
    CHECK(r.exhaustive);
  }
}

TEST_CASE("commutative lift rejects a broken bottom") {
  SemilatticeSpec spec;
  spec.key = "broken";
  spec.name = "broken";
  spec.carrier = {NameSet{}, NameSet{"a"}};
  spec.join = [](const Payload& a, const Payload&) { return a; };  // not a join
  spec.bottom = NameSet{};
  spec.top = NameSet{"a"};
  spec.render = [](const Payload&) { return std::string("?"); };
  CHECK_THROWS_AS(commutative_lift(std::move(spec)), ConstructionError);
}

TEST_CASE("broken seq-assoc instance is reported with a 3-element counterexample") {
  TableSpec spec;
  spec.key = "bad";
  spec.name = "bad";
  spec.labels = {"I", "x", "y", "T"};
  // join: chain I < x < y < T
  spec.join = {{0, 1, 2, 3}, {1, 1, 2, 3}, {2, 2, 2, 3}, {3, 3, 3, 3}};
  // seq keeps unit/top laws but (x;x);x = y;x = x while x;(x;x) = x;y = T
  spec.seq = {{0, 1, 2, 3}, {1, 2, 3, 3}, {2, 1, 2, 3}, {3, 3, 3, 3}};
  spec.unit = 0;
  spec.top = 3;
  auto q = table_quantale(spec);
  auto report = check_laws(q);
  auto* fail = report.failed("seq-assoc");
  REQUIRE(fail != nullptr);
  CHECK(fail->counterexample.size() == 3);
}

TEST_CASE("cross-instance mixing is a usage error") {
  auto a = atomicity_quantale();
  auto l = lockset_quantale({"x"});
  CHECK_THROWS_AS(a->join(atom(Mover::B), l->unit()), UsageError);
  CHECK_THROWS_AS(l->leq(l->unit(), atom(Mover::A)), UsageError);
}

TEST_CASE("product collapses component tops into Err") {
  auto l = lockset_quantale({"x"});
  auto a = atomicity_quantale();
  auto q = product(l, a);

  Elem acq = make_product_elem(q, le(l, {}, {"x"}), atom(Mover::R));
  Elem rel = make_product_elem(q, le(l, {"x"}, {}), atom(Mover::L));
  Elem balanced_atomic = make_product_elem(q, le(l, {}, {}), atom(Mover::A));

  // seq((∅,{x})⊗R, ({x},∅)⊗L) = (∅,∅)⊗A, pointwise
  CHECK(q->eq(q->seq(acq, rel), balanced_atomic));
  // unit law
  CHECK(q->eq(q->seq(q->unit(), acq), acq));
  // disagreeing lock deltas force Err under join
  CHECK(q->is_top(q->join(acq, rel)));
  // Err annihilates
  CHECK(q->is_top(q->seq(q->top(), acq)));
}

TEST_CASE("product of small instances passes the law suite") {
  auto l = lockset_quantale({"x"});
  auto a = atomicity_quantale();
  auto q = product(l, a);
  auto lock_elems = enumerate_lock_effects(l, {"x"}, 2);
  std::vector<Elem> elems;
  for (const auto& le1 : lock_elems) {
    if (l->is_top(le1)) continue;
    for (const auto& m : {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ})
      elems.push_back(make_product_elem(q, le1, atom(m)));
  }
  elems.push_back(q->top());
  LawCheckConfig cfg;
  cfg.budget = 40000;
  auto report = check_laws(q, elems, cfg);
  for (const auto& r : report.laws) {
    INFO(r.law);
    CHECK(r.pass);
  }
}

TEST_CASE("lockset family: include and collapse transports") {
  auto fam = lockset_family();
  auto hom = fam->include({"x"}, {"x", "y"});
  auto qx = fam->instantiate({"x"});
  Elem e = le(qx, {}, {"x"});
  Elem moved = apply_hom(hom, e);
  CHECK(moved.owner->key() == fam->instantiate({"x", "y"})->key());
  CHECK(payload_eq(moved.payload, e.payload));

  // collapse x into y merges claims: (∅,{x,y}) -> (∅,{y,y})
  auto col = fam->collapse({"y"}, "x", "y");
  auto qxy = fam->instantiate({"x", "y"});
  Elem both = le(qxy, {}, {"x", "y"});
  Elem merged = apply_hom(col, both);
  auto qy = fam->instantiate({"y"});
  CHECK(qy->eq(merged, lock_eff(qy, {}, Multiset{{"y", 2}})));

  // top maps to top
  CHECK(qy->is_top(apply_hom(col, qxy->top())));
}

TEST_CASE("include preserves join and seq (bounded exhaustive)") {
  auto fam = lockset_family();
  auto hom = fam->include({"a"}, {"a", "b"});
  auto qs = fam->instantiate({"a"});
  auto qt = fam->instantiate({"a", "b"});
  auto elems = enumerate_lock_effects(qs, {"a"}, 2);
  for (const auto& x : elems)
    for (const auto& y : elems) {
      CHECK(qt->eq(apply_hom(hom, qs->join(x, y)), qt->join(apply_hom(hom, x), apply_hom(hom, y))));
      CHECK(qt->eq(apply_hom(hom, qs->seq(x, y)), qt->seq(apply_hom(hom, x), apply_hom(hom, y))));
    }
}

TEST_CASE("multiset collapse satisfies the collapsibility law; set variant fails it") {
  auto run = [](const FamilyPtr& fam, int mult) {
    auto col = fam->collapse({"y"}, "x", "y");
    auto src = fam->instantiate({"x", "y"});
    auto tgt = fam->instantiate({"y"});
    auto elems = enumerate_lock_effects(src, {"x", "y"}, mult);
    std::vector<std::pair<Elem, Elem>> violations;
    for (const auto& a : elems)
      for (const auto& b : elems) {
        Elem fa = apply_hom(col, a);
        Elem fb = apply_hom(col, b);
        if (tgt->is_top(tgt->seq(fa, fb)) && !src->is_top(src->seq(a, b)))
          violations.push_back({a, b});
        if (tgt->is_top(tgt->join(fa, fb)) && !src->is_top(src->join(a, b)))
          violations.push_back({a, b});
      }
    return violations;
  };

  CHECK(run(lockset_family(), 2).empty());

  // §-witness shape: images of (∅,{x}) and (∅,{y}) compose to Err under the
  // set discipline while the originals compose to (∅,{x,y}).
  auto violations = run(lockset_set_variant(), 1);
  REQUIRE(!violations.empty());
  auto fam = lockset_set_variant();
  auto src = fam->instantiate({"x", "y"});
  auto tgt = fam->instantiate({"y"});
  auto col = fam->collapse({"y"}, "x", "y");
  Elem ax = le(src, {}, {"x"});
  Elem ay = le(src, {}, {"y"});
  CHECK(tgt->is_top(tgt->seq(apply_hom(col, ax), apply_hom(col, ay))));
  CHECK(src->eq(src->seq(ax, ay), le(src, {}, {"x", "y"})));
}

TEST_CASE("rendering and parsing of elements") {
  auto l = lockset_quantale({"x", "y"});
  Elem e = lock_eff(l, Multiset::of({"x"}), Multiset{{"y", 2}});
  CHECK(l->render(e) == "{x^1}=>{y^2}");
  CHECK(l->eq(*l->parse_elem("{x^1}=>{y^2}"), e));
  CHECK(l->eq(*l->parse_elem("{x}=>{y^2}"), e));
  CHECK(l->is_top(*l->parse_elem("ERR")));
  CHECK_FALSE(l->parse_elem("{z}=>{}").has_value());

  auto a = atomicity_quantale();
  CHECK(a->render(atom(Mover::TopFQ)) == "TOP");
  CHECK(a->eq(*a->parse_elem("A"), atom(Mover::A)));

  auto q = product(l, a);
  Elem p = make_product_elem(q, e, atom(Mover::R));
  CHECK(q->render(p) == "{x^1}=>{y^2}⊗R");
  CHECK(q->eq(*q->parse_elem("{x^1}=>{y^2}⊗R"), p));
}

TEST_CASE("lifted instances have commutative, idempotent sequencing") {
  auto q = powerset_quantale({"a", "b", "c"});
  auto all = *q->enumerate();
  for (const auto& x : all)
    for (const auto& y : all) {
      CHECK(q->eq(q->seq(x, y), q->seq(y, x)));
      CHECK(q->eq(q->seq(x, x), x));
      CHECK(q->eq(q->seq(x, y), q->join(x, y)));
    }
}

TEST_CASE("instances are shareable across threads") {
  auto q = product(lockset_quantale({"a", "b"}), atomicity_quantale());
  auto elems = enumerate_lock_effects(product_lhs(q), {"a", "b"}, 1);
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (int round = 0; round < 200; ++round) {
        for (const auto& x : elems) {
          if (product_lhs(q)->is_top(x)) continue;
          Elem p = make_product_elem(q, x, atom(Mover(t % 5)));
          Elem r = q->seq(q->join(p, p), q->unit());
          if (!q->eq(r, p) && !q->is_top(r)) failures.fetch_add(1);
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(failures.load() == 0);
}
