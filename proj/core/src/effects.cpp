#include "eq/effects.hpp"

#include <algorithm>
#include <cctype>

namespace eq {

struct EffExpr::Node {
  Tag tag;
  std::optional<Elem> lit;
  std::string var;
  std::shared_ptr<const Node> a, b;
};

EffExpr EffExpr::lit(Elem e) {
  auto n = std::make_shared<Node>();
  n->tag = Tag::Lit;
  n->lit = std::move(e);
  return EffExpr(std::move(n));
}

EffExpr EffExpr::var(std::string name) {
  auto n = std::make_shared<Node>();
  n->tag = Tag::Var;
  n->var = std::move(name);
  return EffExpr(std::move(n));
}

EffExpr EffExpr::join(EffExpr a, EffExpr b) {
  auto n = std::make_shared<Node>();
  n->tag = Tag::Join;
  n->a = std::move(a.node_);
  n->b = std::move(b.node_);
  return EffExpr(std::move(n));
}

EffExpr EffExpr::seq(EffExpr a, EffExpr b) {
  auto n = std::make_shared<Node>();
  n->tag = Tag::Seq;
  n->a = std::move(a.node_);
  n->b = std::move(b.node_);
  return EffExpr(std::move(n));
}

EffExpr EffExpr::star(EffExpr a) {
  auto n = std::make_shared<Node>();
  n->tag = Tag::Star;
  n->a = std::move(a.node_);
  return EffExpr(std::move(n));
}

EffExpr::Tag EffExpr::tag() const { return node_->tag; }
const Elem& EffExpr::literal() const { return *node_->lit; }
const std::string& EffExpr::var_name() const { return node_->var; }
EffExpr EffExpr::lhs() const { return EffExpr(node_->a); }
EffExpr EffExpr::rhs() const { return EffExpr(node_->b); }
EffExpr EffExpr::body() const { return EffExpr(node_->a); }

QuantalePtr EffExpr::instance() const {
  switch (tag()) {
    case Tag::Lit: return literal().owner;
    case Tag::Var: return nullptr;
    case Tag::Star: return body().instance();
    default: {
      auto q = lhs().instance();
      return q ? q : rhs().instance();
    }
  }
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

std::strong_ordering atom_cmp(const NfAtom& a, const NfAtom& b);

std::strong_ordering seq_cmp(const std::vector<NfAtom>& a, const std::vector<NfAtom>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = atom_cmp(a[i], b[i]);
    if (c != 0) return c;
  }
  if (a.size() < b.size()) return std::strong_ordering::less;
  if (a.size() > b.size()) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

int atom_kind(const NfAtom& a) { return a.lit ? 0 : (a.var ? 1 : 2); }

std::strong_ordering atom_cmp(const NfAtom& a, const NfAtom& b) {
  if (atom_kind(a) != atom_kind(b))
    return atom_kind(a) < atom_kind(b) ? std::strong_ordering::less : std::strong_ordering::greater;
  if (a.lit) return payload_cmp(a.lit->payload, b.lit->payload);
  if (a.var) return *a.var <=> *b.var;
  return nf_cmp(*a.star, *b.star);
}

struct NormCtx {
  QuantalePtr q;
  std::optional<ClosureOperator> star_op;
  bool star_unavailable = false;

  void adopt(const QuantalePtr& owner) {
    if (!owner) return;
    if (!q) {
      q = owner;
      return;
    }
    if (q->key() != owner->key())
      throw UsageError("effect expression mixes instances '" + q->key() + "' and '" +
                       owner->key() + "'");
  }

  const ClosureOperator& star() {
    if (!star_op && !star_unavailable) {
      if (!q) throw EffectError("iteration of a literal with no owning instance");
      try {
        star_op = closure(q);
      } catch (const ConstructionError&) {
        star_unavailable = true;
      }
    }
    if (star_unavailable)
      throw EffectError("instance '" + (q ? q->name() : std::string("?")) +
                        "' has no iteration (closure) operator");
    return *star_op;
  }
};

NormalForm unit_nf() { return NormalForm{{{}}}; }

bool atom_is_top(const NfAtom& a, const QuantalePtr& q) {
  return a.lit && q && q->is_top(*a.lit);
}

NfAtom lit_atom(Elem e) {
  NfAtom a;
  a.lit = std::move(e);
  return a;
}

NfAtom var_atom(std::string v) {
  NfAtom a;
  a.var = std::move(v);
  return a;
}

NfAtom star_atom(NormalForm n) {
  NfAtom a;
  a.star = std::make_shared<NormalForm>(std::move(n));
  return a;
}

/// In-place simplification of one sequence: unit removal, literal fusion,
/// top collapse, and the checked seq-with-star absorption.
void simplify_seq(std::vector<NfAtom>& seq, NormCtx& ctx) {
  for (bool changed = true; changed;) {
    changed = false;
    // Drop unit literals.
    for (std::size_t i = 0; i < seq.size();) {
      if (seq[i].lit && ctx.q && ctx.q->is_unit(*seq[i].lit)) {
        seq.erase(seq.begin() + long(i));
        changed = true;
      } else {
        ++i;
      }
    }
    // Top absorbs the whole sequence.
    for (const auto& a : seq) {
      if (atom_is_top(a, ctx.q)) {
        seq = {lit_atom(ctx.q->top())};
        return;
      }
    }
    // Fuse adjacent literals.
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      if (seq[i].lit && seq[i + 1].lit) {
        Elem fused = ctx.q->seq(*seq[i].lit, *seq[i + 1].lit);
        seq[i] = lit_atom(std::move(fused));
        seq.erase(seq.begin() + long(i) + 1);
        changed = true;
        break;
      }
    }
    if (changed) continue;
    // a ; a*  ->  a*   (and symmetrically) when the instance confirms P2
    // as an equality for this literal.
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const NfAtom *l = &seq[i], *s = &seq[i + 1];
      bool lit_first = true;
      if (!(l->lit && s->star)) {
        std::swap(l, s);
        lit_first = false;
        if (!(l->lit && s->star)) continue;
      }
      const NormalForm& body = *s->star;
      if (body.alts.size() != 1 || body.alts[0].size() != 1 || !body.alts[0][0].lit) continue;
      if (payload_cmp(body.alts[0][0].lit->payload, l->lit->payload) != 0) continue;
      Elem starred = ctx.star()(*l->lit);
      if (!ctx.q->eq(ctx.q->seq(*l->lit, starred), starred)) continue;
      seq.erase(seq.begin() + long(lit_first ? i : i + 1));
      changed = true;
      break;
    }
  }
}

NormalForm canonical(std::vector<std::vector<NfAtom>> alts, NormCtx& ctx) {
  // Top absorbs sibling alternatives.
  for (const auto& s : alts) {
    if (s.size() == 1 && atom_is_top(s[0], ctx.q)) {
      return NormalForm{{{lit_atom(ctx.q->top())}}};
    }
  }
  // Fold ground alternatives (unit or single literal) through the instance join.
  if (ctx.q) {
    std::optional<Elem> folded;
    std::size_t ground_count = 0;
    for (const auto& s : alts) {
      if (s.empty() || (s.size() == 1 && s[0].lit)) {
        Elem v = s.empty() ? ctx.q->unit() : *s[0].lit;
        folded = folded ? ctx.q->join(*folded, v) : v;
        ++ground_count;
      }
    }
    if (ground_count > 1) {
      std::vector<std::vector<NfAtom>> rest;
      for (auto& s : alts)
        if (!(s.empty() || (s.size() == 1 && s[0].lit))) rest.push_back(std::move(s));
      if (ctx.q->is_top(*folded)) return NormalForm{{{lit_atom(ctx.q->top())}}};
      if (ctx.q->is_unit(*folded))
        rest.push_back({});
      else
        rest.push_back({lit_atom(*folded)});
      alts = std::move(rest);
    }
  }
  // P1: an alternative equal to a member of a starred sibling is absorbed.
  {
    std::vector<const NormalForm*> stars;
    for (const auto& s : alts)
      if (s.size() == 1 && s[0].star) stars.push_back(s[0].star.get());
    if (!stars.empty()) {
      std::vector<std::vector<NfAtom>> kept;
      for (auto& s : alts) {
        bool absorbed = false;
        if (!(s.size() == 1 && s[0].star)) {
          for (const auto* st : stars) {
            for (const auto& member : st->alts)
              if (seq_cmp(member, s) == 0) {
                absorbed = true;
                break;
              }
            if (absorbed) break;
          }
        }
        if (!absorbed) kept.push_back(std::move(s));
      }
      alts = std::move(kept);
    }
  }
  std::sort(alts.begin(), alts.end(), [](const auto& a, const auto& b) { return seq_cmp(a, b) < 0; });
  alts.erase(std::unique(alts.begin(), alts.end(),
                         [](const auto& a, const auto& b) { return seq_cmp(a, b) == 0; }),
             alts.end());
  return NormalForm{std::move(alts)};
}

NormalForm norm(const EffExpr& e, NormCtx& ctx) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: {
      ctx.adopt(e.literal().owner);
      if (ctx.q->is_unit(e.literal())) return unit_nf();
      return NormalForm{{{lit_atom(e.literal())}}};
    }
    case EffExpr::Tag::Var:
      return NormalForm{{{var_atom(e.var_name())}}};
    case EffExpr::Tag::Join: {
      NormalForm a = norm(e.lhs(), ctx);
      NormalForm b = norm(e.rhs(), ctx);
      std::vector<std::vector<NfAtom>> alts = std::move(a.alts);
      for (auto& s : b.alts) alts.push_back(std::move(s));
      return canonical(std::move(alts), ctx);
    }
    case EffExpr::Tag::Seq: {
      NormalForm a = norm(e.lhs(), ctx);
      NormalForm b = norm(e.rhs(), ctx);
      std::vector<std::vector<NfAtom>> alts;
      for (const auto& s : a.alts)
        for (const auto& t : b.alts) {
          std::vector<NfAtom> cat = s;
          cat.insert(cat.end(), t.begin(), t.end());
          simplify_seq(cat, ctx);
          alts.push_back(std::move(cat));
        }
      return canonical(std::move(alts), ctx);
    }
    case EffExpr::Tag::Star: {
      NormalForm n = norm(e.body(), ctx);
      if (nf_is_unit(n)) return unit_nf();
      if (n.alts.size() == 1 && n.alts[0].size() == 1) {
        const NfAtom& a = n.alts[0][0];
        if (a.star) return n;  // (e*)* = e*
        if (a.lit) {
          Elem starred = ctx.star()(*a.lit);
          if (ctx.q->is_unit(starred)) return unit_nf();
          return NormalForm{{{lit_atom(std::move(starred))}}};
        }
      }
      return NormalForm{{{star_atom(std::move(n))}}};
    }
  }
  throw EffectError("normalize: unreachable");
}

}  // namespace

NormalForm normalize(const EffExpr& e) {
  NormCtx ctx;
  ctx.adopt(e.instance());
  return norm(e, ctx);
}

bool nf_equal(const NormalForm& a, const NormalForm& b) { return nf_cmp(a, b) == 0; }

std::strong_ordering nf_cmp(const NormalForm& a, const NormalForm& b) {
  const std::size_t n = std::min(a.alts.size(), b.alts.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = seq_cmp(a.alts[i], b.alts[i]);
    if (c != 0) return c;
  }
  if (a.alts.size() < b.alts.size()) return std::strong_ordering::less;
  if (a.alts.size() > b.alts.size()) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

bool nf_is_unit(const NormalForm& n) { return n.alts.size() == 1 && n.alts[0].empty(); }

std::optional<Elem> nf_ground(const NormalForm& n, const QuantalePtr& q) {
  if (n.alts.size() != 1) return std::nullopt;
  if (n.alts[0].empty()) return q ? std::optional<Elem>(q->unit()) : std::nullopt;
  if (n.alts[0].size() == 1 && n.alts[0][0].lit) return n.alts[0][0].lit;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string render_prec(const EffExpr& e, int parent_prec);

// precedence: join 0, seq 1, star 2
std::string render_node(const EffExpr& e, int prec) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: {
      const Elem& v = e.literal();
      if (v.owner->is_unit(v)) return "I";
      return "eff{" + v.owner->render(v) + "}";
    }
    case EffExpr::Tag::Var: return e.var_name();
    case EffExpr::Tag::Join:
      return render_prec(e.lhs(), 0) + " | " + render_prec(e.rhs(), 0);
    case EffExpr::Tag::Seq:
      return render_prec(e.lhs(), 1) + " ; " + render_prec(e.rhs(), 1);
    case EffExpr::Tag::Star: return render_prec(e.body(), 2) + "*";
  }
  return "?";
}

int node_prec(const EffExpr& e) {
  switch (e.tag()) {
    case EffExpr::Tag::Join: return 0;
    case EffExpr::Tag::Seq: return 1;
    default: return 3;
  }
}

std::string render_prec(const EffExpr& e, int parent_prec) {
  std::string body = render_node(e, parent_prec);
  if (node_prec(e) < parent_prec) return "(" + body + ")";
  return body;
}

}  // namespace

std::string render_effect(const EffExpr& e) { return render_prec(e, 0); }

EffExpr nf_to_expr(const NormalForm& n, const QuantalePtr& q) {
  auto atom_expr = [&](const NfAtom& a, auto&& self) -> EffExpr {
    if (a.lit) return EffExpr::lit(*a.lit);
    if (a.var) return EffExpr::var(*a.var);
    // star body
    std::optional<EffExpr> body;
    for (const auto& alt : a.star->alts) {
      std::optional<EffExpr> seq_e;
      for (const auto& at : alt) {
        EffExpr x = self(at, self);
        seq_e = seq_e ? EffExpr::seq(*seq_e, x) : x;
      }
      EffExpr alt_e = seq_e ? *seq_e : EffExpr::lit(q->unit());
      body = body ? EffExpr::join(*body, alt_e) : alt_e;
    }
    return EffExpr::star(body ? *body : EffExpr::lit(q->unit()));
  };
  std::optional<EffExpr> out;
  for (const auto& alt : n.alts) {
    std::optional<EffExpr> seq_e;
    for (const auto& at : alt) {
      EffExpr x = atom_expr(at, atom_expr);
      seq_e = seq_e ? EffExpr::seq(*seq_e, x) : x;
    }
    EffExpr alt_e = seq_e ? *seq_e : EffExpr::lit(q->unit());
    out = out ? EffExpr::join(*out, alt_e) : alt_e;
  }
  if (!out) throw EffectError("nf_to_expr: empty normal form");
  return *out;
}

std::string render_nf(const NormalForm& n, const QuantalePtr& q) {
  return render_effect(nf_to_expr(n, q));
}

// ---------------------------------------------------------------------------
// Decision procedure

Subsumption subeffect(const EffExpr& a, const EffExpr& b) {
  NormalForm nb = normalize(b);
  NormalForm nj = normalize(EffExpr::join(a, b));
  if (nf_equal(nj, nb)) return Subsumption::Yes;
  NormalForm na = normalize(a);
  QuantalePtr q = a.instance();
  if (!q) q = b.instance();
  if (q && nf_ground(na, q) && nf_ground(nb, q)) return Subsumption::No;
  return Subsumption::Unknown;
}

bool is_ground(const EffExpr& e) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: return true;
    case EffExpr::Tag::Var: return false;
    case EffExpr::Tag::Star: return is_ground(e.body());
    default: return is_ground(e.lhs()) && is_ground(e.rhs());
  }
}

namespace {

Elem eval_rec(const EffExpr& e, std::optional<ClosureOperator>& star) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: return e.literal();
    case EffExpr::Tag::Var: throw EffectError("eval of open effect expression");
    case EffExpr::Tag::Join: {
      Elem a = eval_rec(e.lhs(), star);
      return a.owner->join(a, eval_rec(e.rhs(), star));
    }
    case EffExpr::Tag::Seq: {
      Elem a = eval_rec(e.lhs(), star);
      return a.owner->seq(a, eval_rec(e.rhs(), star));
    }
    case EffExpr::Tag::Star: {
      Elem a = eval_rec(e.body(), star);
      if (!star) star = closure(a.owner);
      return (*star)(a);
    }
  }
  throw EffectError("eval: unreachable");
}

}  // namespace

Elem eval_ground(const EffExpr& e) {
  std::optional<ClosureOperator> star;
  return eval_rec(e, star);
}

// ---------------------------------------------------------------------------
// Substitution and transport

EffExpr subst_effect_var(const EffExpr& e, const std::string& var, const EffExpr& replacement) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: return e;
    case EffExpr::Tag::Var: return e.var_name() == var ? replacement : e;
    case EffExpr::Tag::Join:
      return EffExpr::join(subst_effect_var(e.lhs(), var, replacement),
                           subst_effect_var(e.rhs(), var, replacement));
    case EffExpr::Tag::Seq:
      return EffExpr::seq(subst_effect_var(e.lhs(), var, replacement),
                          subst_effect_var(e.rhs(), var, replacement));
    case EffExpr::Tag::Star:
      return EffExpr::star(subst_effect_var(e.body(), var, replacement));
  }
  throw EffectError("subst: unreachable");
}

EffExpr subst_effect_name(const EffExpr& e, const std::string& from, const std::string& to,
                          const IndexedFamily& family) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: {
      const Elem& v = e.literal();
      // The collapse transports every element of the source scope, including
      // those that do not mention the name; owners must move uniformly.
      NameSet scope =
          v.owner->index_names().value_or(v.owner->indexed_payload_names(v.payload));
      if (!scope.count(from)) {
        if (!v.owner->indexed_payload_names(v.payload).count(from)) return e;
        scope.insert(from);
      }
      Homomorphism h = family.rename(scope, from, to);
      return EffExpr::lit(h.map(v));
    }
    case EffExpr::Tag::Var: return e;
    case EffExpr::Tag::Join:
      return EffExpr::join(subst_effect_name(e.lhs(), from, to, family),
                           subst_effect_name(e.rhs(), from, to, family));
    case EffExpr::Tag::Seq:
      return EffExpr::seq(subst_effect_name(e.lhs(), from, to, family),
                          subst_effect_name(e.rhs(), from, to, family));
    case EffExpr::Tag::Star:
      return EffExpr::star(subst_effect_name(e.body(), from, to, family));
  }
  throw EffectError("subst: unreachable");
}

EffExpr subst_effect(const EffExpr& e, const EffectBinding& binding, const IndexedFamily* family) {
  if (std::holds_alternative<EffExpr>(binding.replacement))
    return subst_effect_var(e, binding.name, std::get<EffExpr>(binding.replacement));
  if (!family) throw UsageError("value substitution into effects requires the indexed family");
  return subst_effect_name(e, binding.name, std::get<std::string>(binding.replacement), *family);
}

EffExpr rescope_effect(const EffExpr& e, const IndexedFamily& family, const NameSet& scope) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: {
      const Elem& v = e.literal();
      auto target = family.instantiate(scope);
      if (v.owner->key() == target->key()) return e;
      NameSet from = v.owner->indexed_payload_names(v.payload);
      for (const auto& n : from)
        if (!scope.count(n))
          throw EffectError("effect mentions '" + n + "' which is not in scope");
      return EffExpr::lit(family.transport(v, target, [](const std::string& n) { return n; }));
    }
    case EffExpr::Tag::Var: return e;
    case EffExpr::Tag::Join:
      return EffExpr::join(rescope_effect(e.lhs(), family, scope),
                           rescope_effect(e.rhs(), family, scope));
    case EffExpr::Tag::Seq:
      return EffExpr::seq(rescope_effect(e.lhs(), family, scope),
                          rescope_effect(e.rhs(), family, scope));
    case EffExpr::Tag::Star:
      return EffExpr::star(rescope_effect(e.body(), family, scope));
  }
  throw EffectError("rescope: unreachable");
}

NameSet effect_names(const EffExpr& e) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit:
      return e.literal().owner->indexed_payload_names(e.literal().payload);
    case EffExpr::Tag::Var: return {};
    case EffExpr::Tag::Star: return effect_names(e.body());
    default: {
      NameSet out = effect_names(e.lhs());
      out.merge(effect_names(e.rhs()));
      return out;
    }
  }
}

NameSet effect_vars(const EffExpr& e) {
  switch (e.tag()) {
    case EffExpr::Tag::Lit: return {};
    case EffExpr::Tag::Var: return {e.var_name()};
    case EffExpr::Tag::Star: return effect_vars(e.body());
    default: {
      NameSet out = effect_vars(e.lhs());
      out.merge(effect_vars(e.rhs()));
      return out;
    }
  }
}

// ---------------------------------------------------------------------------
// Surface parser

namespace {

struct EffParser {
  std::string_view text;
  std::size_t pos = 0;
  const IndexedFamily& family;

  explicit EffParser(std::string_view t, const IndexedFamily& f) : text(t), family(f) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw EffectError("effect syntax error at offset " + std::to_string(pos) + ": " + what +
                      " in '" + std::string(text) + "'");
  }

  EffExpr parse() {
    EffExpr e = parse_join();
    skip_ws();
    if (pos != text.size()) fail("trailing input");
    return e;
  }

  EffExpr parse_join() {
    EffExpr e = parse_seq();
    while (eat('|')) e = EffExpr::join(e, parse_seq());
    return e;
  }

  EffExpr parse_seq() {
    EffExpr e = parse_star();
    while (eat(';')) e = EffExpr::seq(e, parse_star());
    return e;
  }

  EffExpr parse_star() {
    EffExpr e = parse_atom();
    for (;;) {
      skip_ws();
      if (pos < text.size() && text[pos] == '*') {
        ++pos;
        e = EffExpr::star(e);
      } else {
        break;
      }
    }
    return e;
  }

  EffExpr parse_atom() {
    skip_ws();
    if (pos >= text.size()) fail("expected an effect");
    if (text[pos] == '(') {
      ++pos;
      EffExpr e = parse_join();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (text.compare(pos, 4, "eff{") == 0) {
      std::size_t start = pos + 4;
      int depth = 1;
      std::size_t i = start;
      for (; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}' && --depth == 0) break;
      }
      if (depth != 0) fail("unterminated eff{...}");
      std::string_view payload = text.substr(start, i - start);
      pos = i + 1;
      auto elem = family.parse_payload(payload);
      if (!elem) fail("unparsable effect literal '" + std::string(payload) + "'");
      return EffExpr::lit(*elem);
    }
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
            text[pos] == '\''))
      ++pos;
    if (pos == start) fail("unexpected character");
    std::string_view ident = text.substr(start, pos - start);
    if (ident == "I") return EffExpr::lit(family.instantiate({})->unit());
    return EffExpr::var(std::string(ident));
  }
};

}  // namespace

EffExpr parse_effect(std::string_view text, const IndexedFamily& family) {
  EffParser p(text, family);
  EffExpr e = p.parse();
  NameSet names = effect_names(e);
  return rescope_effect(e, family, names);
}

}  // namespace eq
