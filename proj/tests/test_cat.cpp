#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eq/cat.hpp"

using namespace eq;

namespace {

LanguageParams& fq() {
  static LanguageParams params = fq_params();
  return params;
}

CatEnv base_env() {
  std::string problems;
  auto env = build_cat_env(*parse_cat("()", fq()), fq(), &problems);
  return env;
}

Mover check_src(const char* src) {
  auto t = parse_cat(src, fq());
  std::string problems;
  CatEnv env = build_cat_env(*t, fq(), &problems);
  INFO(problems);
  return cat_check(env, *t);
}

}  // namespace

TEST_CASE("primitive atomicities derived from the delta bundle") {
  CatEnv env = base_env();
  CHECK(env.at("new_lock") == Mover::B);
  CHECK(env.at("acquire") == Mover::R);
  CHECK(env.at("release") == Mover::L);
  CHECK(env.at("alloc") == Mover::B);
  CHECK(env.at("read_sync") == Mover::B);
  CHECK(env.at("read_racy") == Mover::A);
  CHECK(env.at("write_sync") == Mover::B);
  CHECK(env.at("write_racy") == Mover::A);
  CHECK(env.at("req_atomic") == Mover::B);
}

TEST_CASE("oracle rules on the published table") {
  CHECK(check_src("(read x :lock l :type bool :race #f)") == Mover::B);
  CHECK(check_src("(read x :lock l :type bool :race #t)") == Mover::A);
  // assign with a both-mover payload: a;A = A
  CHECK(check_src("(assign x (read y :lock l :type bool :race #f) :lock l :type bool :race #t)") ==
        Mover::A);
  CHECK(check_src("(let (v true) (read x :lock l :type bool :race #t))") == Mover::A);
  // acquire; touch; release reduces to atomic
  CHECK(check_src("(let (u (prim acquire l))"
                  "  (let (v (read x :lock l :type bool :race #f))"
                  "    (prim release l)))") == Mover::A);
  // if: cond ; (join of branches)
  CHECK(check_src("(if (read c :lock l :type bool :race #f)"
                  "    (prim acquire l) (prim acquire l))") == Mover::R);
  // while: a1 ; (a2;a1)*
  CHECK(check_src("(while (read c :lock l :type bool :race #f)"
                  "       (read x :lock l :type bool :race #f))") == Mover::B);
  // an atomic body repeated is no longer atomic: star lifts A to TOP
  CHECK(check_src("(while (read c :lock l :type bool :race #f)"
                  "       (read x :lock l :type bool :race #t))") == Mover::TopFQ);
  CHECK(check_src("(fork (read x :lock l :type bool :race #t))") == Mover::A);
}

TEST_CASE("atomic blocks reject bodies above A") {
  CHECK(check_src("(atomic (read x :lock l :type bool :race #t))") == Mover::A);
  // two racy writes in sequence: A;A = TOP, not below A
  CHECK_THROWS_AS(
      check_src("(atomic (let (u (assign x true :lock l :type bool :race #t))"
                "             (assign x false :lock l :type bool :race #t)))"),
      CheckError);
}

TEST_CASE("function definitions check against their declared atomicity") {
  // the closure's final latent effect provides the declaration
  CHECK(check_src("(fun f ((x lock)) (prim acquire x))") == Mover::B);
  CHECK(check_src("(invoke (fun f ((x lock)) (prim acquire x)) (f) y)") == Mover::R);
}

TEST_CASE("translation shapes") {
  auto& params = fq();
  // reads become annotated primitive spines
  auto read = translate_cat(*parse_cat("(read x :lock l :type bool :race #t)", params), params);
  auto spine = as_prim_spine(read);
  REQUIRE(spine.has_value());
  CHECK(spine->prim == "read_racy");
  REQUIRE(spine->args.size() == 3);
  CHECK(std::get<TmVar>(spine->args[0].term()->node).name == "l");
  CHECK_FALSE(spine->args[1].is_term());
  CHECK(std::get<TmVar>(spine->args[2].term()->node).name == "x");

  // fork: discarded thunk plus wraplock ()
  auto fork = translate_cat(*parse_cat("(fork true)", params), params);
  CHECK(std::holds_alternative<TmApp>(fork->node));
  CHECK(render_term(*fork).find("new_lock") != std::string::npos);
  CHECK(render_term(*fork).find("req_atomic") == std::string::npos);

  // atomic: req_atomic thunk, then the duplicate body
  auto atomic = translate_cat(*parse_cat("(atomic true)", params), params);
  CHECK(render_term(*atomic).find("req_atomic") != std::string::npos);
  CHECK(render_term(*atomic).find("new_lock") != std::string::npos);
}

TEST_CASE("wraplock is atomic exactly when its body is") {
  auto& params = fq();
  // body B: typing succeeds, latent atomicity of the wrapped thunk is A
  TermPtr ok = tm_lam("b", ty_bool(), std::nullopt, wraplock(tm_true()));
  TypingResult r = type_of(params, TypeEnv{}, ok);
  const auto* pi = std::get_if<TPi>(&r.type->node);
  REQUIRE(pi != nullptr);
  NormalForm nf = normalize(pi->latent);
  auto inst = params.family->instantiate({});
  auto latent = nf_ground(nf, inst);
  REQUIRE(latent.has_value());
  CHECK(atomicity_of(*latent) == Mover::A);

  // body TOP (a repeated racy loop): wraplock cannot be atomic
  auto top_body = check_program(
      params,
      "(lam (l lock) (lam (x ((ref (singleton l)) bool))"
      "  (while (app (tyapp (app (prim read_racy) l) bool) x) ())))");
  REQUIRE(top_body.ok());
}

TEST_CASE("differential: well-synchronized read under a held lock agrees at B") {
  const char* src =
      "(fun f ((l lock) (x ((ref (singleton l)) bool)))"
      "  (let (u (prim acquire l))"
      "    (let (v (read x :lock l :type bool :race #f))"
      "      (prim release l))))";
  auto report = unembed_check(fq(), std::string_view(src));
  INFO(report.detail, report.core_error, report.cat_error);
  CHECK(report.core_accepts);
  CHECK(report.cat_accepts);
  CHECK(report.agree);
  // the definition itself is a value
  REQUIRE(report.core_atomicity.has_value());
  CHECK(*report.core_atomicity == Mover::B);
  CHECK(*report.cat_atomicity == Mover::B);
}

TEST_CASE("differential: atomic block with two racy writes rejected on both sides") {
  const char* src =
      "(fun g ((l lock) (x ((ref (singleton l)) bool)))"
      "  (atomic (let (u (assign x true :lock l :type bool :race #t))"
      "               (assign x false :lock l :type bool :race #t))))";
  auto report = unembed_check(fq(), std::string_view(src));
  INFO(report.detail, " core:", report.core_error, " cat:", report.cat_error);
  CHECK_FALSE(report.core_accepts);
  CHECK_FALSE(report.cat_accepts);
  CHECK(report.agree);
}

TEST_CASE("differential: lock-discipline divergence is flagged as expected") {
  // a loop acquiring a lock each iteration: the core rejects (iteration of an
  // unbalanced lock effect is Err) while the lock-blind oracle accepts at TOP
  const char* src =
      "(fun h ((l lock) (c ((ref (singleton l)) bool)))"
      "  (while (read c :lock l :type bool :race #f) (prim acquire l)))";
  auto report = unembed_check(fq(), std::string_view(src));
  INFO(report.detail, " core:", report.core_error, " cat:", report.cat_error);
  CHECK_FALSE(report.core_accepts);
  CHECK(report.cat_accepts);
  CHECK_FALSE(report.agree);
  CHECK(report.expected_divergence);
}
