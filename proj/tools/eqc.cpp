// eqc — effect quantale checker: law suites, iteration reports, type-and-effect
// checking, interpretation, and the CAT differential pipeline.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "eq/bridges.hpp"
#include "eq/cat.hpp"
#include "eq/instances.hpp"
#include "eq/interp.hpp"
#include "eq/iteration.hpp"
#include "eq/locking.hpp"

using nlohmann::json;
using namespace eq;

namespace {

struct Options {
  std::string instance = "fq";
  std::string input;
  std::string elem;
  std::string report_path;
  std::string lock_model = "bool";
  std::uint64_t fuel = 100000;
  std::uint64_t budget = 10000;
  std::uint64_t seed = 0x5eed0eff;
  int locks = 2;
  int mult = 2;
  bool bridge = false;
  bool trace = false;
  bool harness = false;
  bool as_json = false;
};

NameSet lock_names(int n) {
  NameSet out;
  for (int i = 1; i <= n; ++i) out.insert("l" + std::to_string(i));
  return out;
}

struct Instance {
  QuantalePtr q;
  std::vector<Elem> elems;  // carrier or bounded sample
  bool exhaustive = false;
};

Instance resolve_instance(const std::string& name, const Options& opts) {
  if (name == "atomicity") {
    auto q = atomicity_quantale();
    return {q, *q->enumerate(), true};
  }
  if (name == "lockset") {
    auto q = lockset_quantale(lock_names(opts.locks));
    return {q, enumerate_lock_effects(q, lock_names(opts.locks), opts.mult), false};
  }
  if (name == "lockset-set") {
    auto q = lockset_set_quantale(lock_names(opts.locks));
    return {q, enumerate_lock_effects(q, lock_names(opts.locks), 1), false};
  }
  if (name == "powerset") {
    auto q = powerset_quantale({"IOExc", "ArgExc"});
    return {q, *q->enumerate(), true};
  }
  if (name.rfind("product:", 0) == 0) {
    auto rest = name.substr(8);
    auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw CLI::ValidationError("instance", "product selector needs two components");
    Instance lhs = resolve_instance(rest.substr(0, comma), opts);
    Instance rhs = resolve_instance(rest.substr(comma + 1), opts);
    auto q = product(lhs.q, rhs.q);
    std::vector<Elem> elems;
    for (const auto& a : lhs.elems) {
      if (lhs.q->is_top(a)) continue;
      for (const auto& b : rhs.elems) {
        if (rhs.q->is_top(b)) continue;
        elems.push_back(make_product_elem(q, a, b));
      }
    }
    elems.push_back(q->top());
    return {q, std::move(elems), lhs.exhaustive && rhs.exhaustive};
  }
  if (name == "fq") return resolve_instance("product:lockset,atomicity", opts);
  throw CLI::ValidationError("instance", "unknown instance '" + name + "'");
}

LanguageParams resolve_params(const std::string& name, const Options& opts) {
  if (name == "fq")
    return fq_params(opts.lock_model == "count" ? LockModel::Counting : LockModel::Boolean);
  if (name == "fq-set")
    return fq_params_set_variant(opts.lock_model == "count" ? LockModel::Counting
                                                            : LockModel::Boolean);
  if (name == "atomicity") return pure_params(constant_family(atomicity_quantale()));
  if (name == "lockset") return pure_params(lockset_family());
  if (name == "lockset-set") return pure_params(lockset_set_variant());
  if (name == "powerset")
    return pure_params(constant_family(powerset_quantale({"IOExc", "ArgExc"})));
  if (name.rfind("product:", 0) == 0) {
    Instance inst = resolve_instance(name, opts);
    return pure_params(constant_family(inst.q));
  }
  throw CLI::ValidationError("instance", "unknown instance '" + name + "'");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void emit(const Options& opts, const json& doc, const std::string& human) {
  if (opts.as_json)
    std::cout << doc.dump(2) << "\n";
  else
    std::cout << human;
  if (!opts.report_path.empty()) {
    std::ofstream out(opts.report_path);
    out << doc.dump(2) << "\n";
  }
}

json law_report_json(const QuantalePtr& q, const LawReport& report) {
  json laws = json::array();
  for (const auto& r : report.laws) {
    json entry{{"law", r.law},
               {"pass", r.pass},
               {"cases", r.cases},
               {"exhaustive", r.exhaustive}};
    if (!r.counterexample.empty()) {
      json ce = json::array();
      for (const auto& e : r.counterexample) ce.push_back(q->render(e));
      entry["counterexample"] = ce;
    }
    laws.push_back(entry);
  }
  return json{{"instance", report.instance}, {"laws", laws}, {"all_pass", report.all_pass()}};
}

json property_json(const QuantalePtr& q, const PropertyResult& r) {
  json out{{"pass", r.pass}};
  if (!r.witness.empty()) {
    json w = json::array();
    for (const auto& e : r.witness) w.push_back(q->render(e));
    out["witness"] = w;
  }
  if (!r.note.empty()) out["note"] = r.note;
  return out;
}

int cmd_laws(const Options& opts) {
  Instance inst = resolve_instance(opts.instance, opts);
  LawCheckConfig cfg;
  cfg.budget = opts.budget;
  cfg.seed = opts.seed;
  LawReport report = check_laws(inst.q, inst.elems, cfg);

  std::ostringstream human;
  human << "law suite for " << inst.q->name() << " (" << inst.elems.size() << " elements"
        << (inst.exhaustive ? ", full carrier" : ", bounded sample") << ")\n";
  for (const auto& r : report.laws) {
    human << "  " << (r.pass ? "pass" : "FAIL") << "  " << r.law << "  [" << r.cases
          << (r.exhaustive ? " cases, exhaustive" : " sampled cases") << "]";
    if (!r.counterexample.empty()) {
      human << "  at";
      for (const auto& e : r.counterexample) human << " " << inst.q->render(e);
    }
    human << "\n";
  }
  json doc = law_report_json(inst.q, report);

  IterReport iter = iterability(inst.q, inst.elems, inst.exhaustive);
  human << "iteration: least-element " << (iter.least_element_condition.pass ? "pass" : "FAIL")
        << ", join-closed " << (iter.join_closed.pass ? "pass" : "FAIL");
  if (!iter.join_closed.pass && iter.join_closed.witness.size() == 2)
    human << " (witness " << inst.q->render(iter.join_closed.witness[0]) << ", "
          << inst.q->render(iter.join_closed.witness[1]) << ")";
  human << "\n";
  for (const auto& [name, r] : iter.p_results) {
    human << "  " << (r.pass ? "pass" : "FAIL") << "  " << name;
    if (!r.note.empty()) human << "  " << r.note;
    human << "\n";
  }
  json pj = json::object();
  for (const auto& [name, r] : iter.p_results) pj[name] = property_json(inst.q, r);
  doc["iteration"] = {{"least_element_condition", property_json(inst.q, iter.least_element_condition)},
                      {"join_closed", property_json(inst.q, iter.join_closed)},
                      {"properties", pj}};

  if (opts.bridge) {
    try {
      Effectoid e = quantale_to_effectoid(inst.q);
      auto laws = check_effectoid_laws(e);
      human << "effectoid: identity " << (laws.identity.pass ? "pass" : "FAIL")
            << ", associativity " << (laws.associativity.pass ? "pass" : "FAIL")
            << ", reflexive-congruence " << (laws.reflexive_congruence.pass ? "pass" : "FAIL")
            << "\n";
      auto rt = effectoid_round_trip(inst.q);
      human << "round trip: " << (rt.isomorphic ? "isomorphic" : "not isomorphic (" + rt.detail + ")")
            << "\n";
      doc["effectoid"] = {{"identity", property_json(inst.q, laws.identity)},
                          {"associativity", property_json(inst.q, laws.associativity)},
                          {"reflexive_congruence", property_json(inst.q, laws.reflexive_congruence)},
                          {"round_trip_isomorphic", rt.isomorphic},
                          {"round_trip_detail", rt.detail}};
      if (!rt.isomorphic && inst.exhaustive) {
        // instances whose top is a meaningful effect only bridge after adding
        // a synthetic error element
        auto rt2 = effectoid_round_trip(with_synthetic_err(inst.q));
        human << "round trip via synthetic Err: "
              << (rt2.isomorphic ? "isomorphic" : "not isomorphic (" + rt2.detail + ")") << "\n";
        doc["effectoid"]["round_trip_with_synthetic_err"] = rt2.isomorphic;
      }
    } catch (const Error& e) {
      human << "effectoid: unavailable (" << e.what() << ")\n";
      doc["effectoid"] = {{"error", e.what()}};
    }
  }
  emit(opts, doc, human.str());
  return report.all_pass() ? 0 : 1;
}

int cmd_iterate(const Options& opts) {
  Instance inst = resolve_instance(opts.instance, opts);
  IterReport report = iterability(inst.q, inst.elems, inst.exhaustive);
  std::ostringstream human;
  json doc{{"instance", inst.q->name()},
           {"exact", report.exact},
           {"least_element_condition", property_json(inst.q, report.least_element_condition)},
           {"join_closed", property_json(inst.q, report.join_closed)}};
  human << "freely iterable elements of " << inst.q->name() << ":";
  json iter = json::array();
  for (const auto& e : report.iter_set) {
    human << " " << inst.q->render(e);
    iter.push_back(inst.q->render(e));
  }
  doc["iter_set"] = iter;
  human << "\nleast-element condition: " << (report.least_element_condition.pass ? "pass" : "FAIL")
        << "\njoin-closed: " << (report.join_closed.pass ? "pass" : "FAIL");
  if (!report.join_closed.pass && report.join_closed.witness.size() == 2)
    human << " (witness " << inst.q->render(report.join_closed.witness[0]) << ", "
          << inst.q->render(report.join_closed.witness[1]) << ")";
  human << "\n";
  json pj = json::object();
  for (const auto& [name, r] : report.p_results) {
    human << "  " << (r.pass ? "pass" : "FAIL") << "  " << name << "\n";
    pj[name] = property_json(inst.q, r);
  }
  doc["properties"] = pj;

  if (!opts.elem.empty()) {
    auto e = inst.q->parse_elem(opts.elem);
    if (!e) {
      std::cerr << "cannot parse element '" << opts.elem << "' for " << inst.q->name() << "\n";
      return 2;
    }
    auto star = closure(inst.q);
    Elem starred = star(*e);
    human << inst.q->render(*e) << "* = " << inst.q->render(starred) << "\n";
    doc["star"] = {{"element", inst.q->render(*e)}, {"result", inst.q->render(starred)}};
  }
  emit(opts, doc, human.str());
  return 0;
}

json diagnostics_json(const std::vector<Diagnostic>& diags) {
  json out = json::array();
  for (const auto& d : diags)
    out.push_back({{"rule", d.rule},
                   {"message", d.message},
                   {"line", d.span.line},
                   {"col", d.span.col}});
  return out;
}

json trace_json(const TraceNode& t) {
  json out{{"rule", t.rule}, {"judgment", t.judgment}};
  if (!t.children.empty()) {
    json kids = json::array();
    for (const auto& c : t.children) kids.push_back(trace_json(c));
    out["children"] = kids;
  }
  return out;
}

int cmd_check(const Options& opts) {
  LanguageParams params = resolve_params(opts.instance, opts);
  CheckOutcome out = check_program(params, slurp(opts.input));
  std::ostringstream human;
  json doc{{"file", opts.input}, {"instance", opts.instance}, {"ok", out.ok()}};
  if (out.ok()) {
    human << "type:   " << render_type(*out.result->type) << "\n"
          << "effect: " << render_effect(out.result->effect) << "\n";
    doc["type"] = render_type(*out.result->type);
    doc["effect"] = render_effect(out.result->effect);
    doc["derivation"] = trace_json(out.result->trace);
  } else {
    for (const auto& d : out.diagnostics)
      human << d.span.line << ":" << d.span.col << " [" << d.rule << "] " << d.message << "\n";
    doc["diagnostics"] = diagnostics_json(out.diagnostics);
  }
  emit(opts, doc, human.str());
  return out.ok() ? 0 : 1;
}

int cmd_run(const Options& opts) {
  LanguageParams params = resolve_params(opts.instance, opts);
  CheckOutcome checked = check_program(params, slurp(opts.input));
  std::ostringstream human;
  json doc{{"file", opts.input}};
  if (!checked.ok()) {
    for (const auto& d : checked.diagnostics)
      human << d.span.line << ":" << d.span.col << " [" << d.rule << "] " << d.message << "\n";
    doc["ok"] = false;
    doc["diagnostics"] = diagnostics_json(checked.diagnostics);
    emit(opts, doc, human.str());
    return 1;
  }
  doc["static_effect"] = render_effect(checked.result->effect);
  human << "static effect: " << render_effect(checked.result->effect) << "\n";

  if (opts.harness) {
    HarnessReport report = preservation_harness(params, checked.term, opts.fuel);
    human << "harness: " << (report.ok ? "pass" : "FAIL") << " after " << report.steps
          << " steps, outcome " << report.outcome << ", accumulated "
          << report.final_accumulated << "\n";
    if (report.violation)
      human << "violation at step " << report.violation->step << ": " << report.violation->what
            << "\n";
    doc["harness"] = {{"ok", report.ok},
                      {"steps", report.steps},
                      {"outcome", report.outcome},
                      {"static_effect", report.static_effect},
                      {"accumulated", report.final_accumulated}};
    if (report.violation)
      doc["harness"]["violation"] = {{"step", report.violation->step},
                                     {"what", report.violation->what}};
    emit(opts, doc, human.str());
    return report.ok ? 0 : 1;
  }

  json trace = json::array();
  TraceFn trace_fn = nullptr;
  if (opts.trace)
    trace_fn = [&](std::uint64_t i, const std::string& rule, const Elem& eff,
                   const MachineState& next) {
      std::string line = std::to_string(i) + "  " + rule + "  step " +
                         eff.owner->render(eff) + "  accumulated " +
                         next.accumulated.owner->render(next.accumulated) + "  |Σ|=" +
                         std::to_string(next.sigma.entries.size());
      human << line << "\n";
      trace.push_back({{"index", i},
                       {"rule", rule},
                       {"step_effect", eff.owner->render(eff)},
                       {"accumulated", next.accumulated.owner->render(next.accumulated)},
                       {"sigma_size", next.sigma.entries.size()}});
    };
  RunResult r = run(params, checked.term, opts.fuel, trace_fn);
  const char* kind = r.kind == RunResult::Kind::Value      ? "value"
                     : r.kind == RunResult::Kind::Diverged ? "diverged"
                     : r.kind == RunResult::Kind::Stuck    ? "stuck"
                                                           : "type-error";
  human << "outcome: " << kind << " after " << r.steps << " steps\n";
  if (r.kind == RunResult::Kind::Value)
    human << "value: " << render_term(*r.final_state.term) << "\n";
  if (!r.detail.empty()) human << r.detail << "\n";
  human << "accumulated effect: "
        << r.final_state.accumulated.owner->render(r.final_state.accumulated) << "\n";
  doc["outcome"] = kind;
  doc["steps"] = r.steps;
  doc["accumulated"] = r.final_state.accumulated.owner->render(r.final_state.accumulated);
  if (opts.trace) doc["trace"] = trace;
  if (r.kind == RunResult::Kind::Value) doc["value"] = render_term(*r.final_state.term);
  emit(opts, doc, human.str());
  return r.kind == RunResult::Kind::Value ? 0 : 1;
}

int cmd_cat_check(const Options& opts) {
  LanguageParams params = resolve_params("fq", opts);
  DifferentialReport report = unembed_check(params, std::string_view(slurp(opts.input)));
  std::ostringstream human;
  human << "oracle:   "
        << (report.cat_accepts ? "atomicity " + std::string(mover_name(*report.cat_atomicity))
                               : "reject (" + report.cat_error + ")")
        << "\n";
  human << "core:     "
        << (report.core_accepts ? "effect " + report.core_effect
                                : "reject (" + report.core_error + ")")
        << "\n";
  human << "verdict:  "
        << (report.agree ? "agree"
                         : (report.expected_divergence ? "expected lock-discipline divergence"
                                                       : "DIVERGENCE"))
        << "\n";
  if (!report.detail.empty()) human << "detail:   " << report.detail << "\n";
  json env = json::object();
  for (const auto& [name, m] : report.env) env[name] = std::string(mover_name(m));
  json doc{{"file", opts.input},
           {"cat_accepts", report.cat_accepts},
           {"core_accepts", report.core_accepts},
           {"agree", report.agree},
           {"expected_divergence", report.expected_divergence},
           {"detail", report.detail},
           {"env", env}};
  if (report.cat_atomicity) doc["cat_atomicity"] = std::string(mover_name(*report.cat_atomicity));
  if (report.core_accepts) doc["core_effect"] = report.core_effect;
  if (report.core_atomicity)
    doc["core_atomicity"] = std::string(mover_name(*report.core_atomicity));
  if (!report.cat_error.empty()) doc["cat_error"] = report.cat_error;
  if (!report.core_error.empty()) doc["core_error"] = report.core_error;
  emit(opts, doc, human.str());
  return report.agree ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"effect quantales: law checking, iteration, type-and-effect checking, "
               "interpretation, and the CAT differential"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_flag("--json", opts.as_json, "emit the report as JSON on stdout");
    cmd->add_option("--report", opts.report_path, "also write the JSON report to this file");
    cmd->add_option("--seed", opts.seed, "seed for sampled checks");
  };

  CLI::App* laws = app.add_subcommand("laws", "check the effect quantale laws of an instance");
  laws->add_option("instance", opts.instance,
                   "atomicity | lockset | lockset-set | powerset | fq | product:<a>,<b>")
      ->required();
  laws->add_option("--budget", opts.budget, "sampled tuples per law");
  laws->add_option("--locks", opts.locks, "lock names for bounded lockset enumeration");
  laws->add_option("--mult", opts.mult, "multiplicity bound for lockset enumeration");
  laws->add_flag("--bridge", opts.bridge, "also check the effectoid laws and round trip");
  add_common(laws);

  CLI::App* iterate = app.add_subcommand("iterate", "iterability report and star values");
  iterate->add_option("instance", opts.instance)->required();
  iterate->add_option("elem", opts.elem, "element whose star to print");
  iterate->add_option("--locks", opts.locks);
  iterate->add_option("--mult", opts.mult);
  add_common(iterate);

  CLI::App* check = app.add_subcommand("check", "typecheck a core-language program");
  check->add_option("file", opts.input)->required();
  check->add_option("--instance", opts.instance, "fq | fq-set | atomicity | lockset | ...");
  add_common(check);

  CLI::App* runc = app.add_subcommand("run", "interpret a program under the locking bundle");
  runc->add_option("file", opts.input)->required();
  runc->add_option("--instance", opts.instance, "fq (default) or fq-set");
  runc->add_option("--fuel", opts.fuel, "maximum number of steps");
  runc->add_option("--lock-model", opts.lock_model, "bool (stuck on re-acquire) or count");
  runc->add_flag("--trace", opts.trace, "print one line per step");
  runc->add_flag("--harness", opts.harness, "run the preservation/progress audit");
  add_common(runc);

  CLI::App* cat = app.add_subcommand("cat-check", "oracle + translation differential on a .cat file");
  cat->add_option("file", opts.input)->required();
  cat->add_option("--lock-model", opts.lock_model);
  add_common(cat);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (laws->parsed()) return cmd_laws(opts);
    if (iterate->parsed()) return cmd_iterate(opts);
    if (check->parsed()) return cmd_check(opts);
    if (runc->parsed()) return cmd_run(opts);
    if (cat->parsed()) return cmd_cat_check(opts);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
