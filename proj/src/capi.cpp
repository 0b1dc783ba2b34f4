#include "conslaw/conslaw.h"

#include <json.hpp>
#include <random>
#include <string>

#include "conslaw/hierarchy.hpp"

using conslaw::ConservedVector;
using conslaw::Expr;
using Json = nlohmann::ordered_json;

struct conslaw_equation {
  conslaw::DceEquation eq;
  conslaw::Scope scope;
};

struct conslaw_system {
  conslaw::EvolutionSystem sys;
  conslaw::Scope scope;
};

struct conslaw_result {
  std::string json;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
conslaw_status guard(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return CONSLAW_OK;
  } catch (const conslaw::ParseError& e) {
    last_error = e.what();
    return CONSLAW_PARSE_ERROR;
  } catch (const conslaw::MathError& e) {
    last_error = e.what();
    return CONSLAW_MATH_FAILURE;
  } catch (const conslaw::ExprError& e) {
    last_error = e.what();
    return CONSLAW_INPUT_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CONSLAW_INTERNAL_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw conslaw::ExprError(what);
}

std::string str_or(const char* s, const char* fallback) { return s ? s : fallback; }

conslaw_result* result(const Json& j) { return new conslaw_result{j.dump(2)}; }

Json cv_json(const ConservedVector& cv) { return Json{{"F", cv.F.str()}, {"G", cv.G.str()}}; }

ConservedVector cv_of(const conslaw::Scope& sc, const char* F, const char* G) {
  require(F && G, "conserved vector needs F and G");
  return ConservedVector{conslaw::parse(F, sc), conslaw::parse(G, sc), ""};
}

Json exprs(const std::vector<Expr>& es) {
  Json a = Json::array();
  for (const auto& e : es) a.push_back(e.str());
  return a;
}

Json system_json(const conslaw::EvolutionSystem& s) {
  Json pots = Json::array();
  std::vector<std::string> rel;
  for (const auto& p : s.potentials()) {
    pots.push_back(Json{{"name", p.name},
                        {"F", p.x_rule.str()},
                        {"G", (-p.t_rule).str()},
                        {"level", p.level}});
    rel.push_back(p.name + "_x = " + p.x_rule.str());
    rel.push_back(p.name + "_t = " + p.t_rule.str());
  }
  return Json{{"rhs", s.dependent() + "_t = " + s.rhs().str()}, {"relations", rel}, {"potentials", pots}};
}

// Residual at pseudo-random rational points; points hitting a pole are redrawn.
Json samples(const Expr& e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> num(-9, 9);
  std::uniform_int_distribution<int> den(1, 5);
  Json out = Json::array();
  for (int k = 0, tries = 0; k < 4 && tries < 40; ++tries) {
    std::map<conslaw::AtomId, conslaw::Rational> values;
    for (conslaw::AtomId a : e.atoms()) values.emplace(a, conslaw::ratio(num(rng), den(rng)));
    try {
      out.push_back(conslaw::rational_str(conslaw::evaluate(e, values)));
      ++k;
    } catch (const std::exception&) {
    }
  }
  return out;
}

std::vector<std::string> strings(const char* const* xs, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    require(xs && xs[i], "missing string argument");
    out.emplace_back(xs[i]);
  }
  return out;
}

Json hierarchy_json(const conslaw::HierarchyReport& r) {
  Json nodes = Json::array();
  for (const auto& n : r.nodes) {
    Json laws = Json::array();
    for (const auto& l : n.laws) {
      Json j = cv_json(l.cv);
      j["verdict"] = l.verdict;
      j["parameters"] = l.parameters;
      j["note"] = l.note;
      laws.push_back(j);
    }
    nodes.push_back(Json{{"level", n.level},
                         {"label", n.label},
                         {"system", system_json(n.system)},
                         {"laws", laws},
                         {"note", n.note}});
  }
  Json local = Json::array();
  for (const auto& cv : r.local) local.push_back(cv_json(cv));
  return Json{{"tag", r.tag},
              {"transformation", r.g.str()},
              {"local", local},
              {"local_family", r.local_family ? cv_json(*r.local_family) : Json()},
              {"nodes", nodes},
              {"depth", r.depth},
              {"termination", r.termination},
              {"summary", r.summary}};
}

}  // namespace

extern "C" {

const char* conslaw_version(void) { return "1.0.0"; }

const char* conslaw_last_error(void) { return last_error.c_str(); }

conslaw_status conslaw_equation_new(const char* relation, const char* A, const char* B, const char* const* constants,
                                    size_t n_constants, conslaw_equation** out) {
  return guard([&] {
    require(out, "null output handle");
    auto h = std::make_unique<conslaw_equation>();
    h->scope = conslaw::Scope::standard();
    for (const auto& c : strings(constants, n_constants)) h->scope.constants.insert(c);
    const std::string rel = str_or(relation, "concrete");
    if (rel == "concrete") {
      require(A && B, "concrete equations need A and B");
      h->eq = conslaw::DceEquation::concrete(conslaw::parse(A, h->scope), conslaw::parse(B, h->scope));
    } else {
      h->eq = conslaw::DceEquation::opaque(rel);
    }
    *out = h.release();
  });
}

void conslaw_equation_free(conslaw_equation* eq) { delete eq; }

conslaw_status conslaw_system_new(const conslaw_equation* eq, conslaw_system** out) {
  return guard([&] {
    require(eq && out, "null handle");
    *out = new conslaw_system{eq->eq.system(), eq->scope};
  });
}

conslaw_status conslaw_system_add_potentials(const conslaw_system* sys, const char* const* F, const char* const* G,
                                             const char* const* names, size_t n, conslaw_system** out) {
  return guard([&] {
    require(sys && out, "null handle");
    std::vector<ConservedVector> cvs;
    const auto fs = strings(F, n);
    const auto gs = strings(G, n);
    for (std::size_t i = 0; i < n; ++i) cvs.push_back(cv_of(sys->scope, fs[i].c_str(), gs[i].c_str()));
    const auto ns = names ? strings(names, n) : std::vector<std::string>{};
    const auto ps = conslaw::build_potential_system(sys->sys, cvs, ns);
    auto h = std::make_unique<conslaw_system>(conslaw_system{ps.system, sys->scope});
    for (const auto& name : ps.added) h->scope.add_potential(name);
    *out = h.release();
  });
}

void conslaw_system_free(conslaw_system* sys) { delete sys; }

conslaw_status conslaw_system_describe(const conslaw_system* sys, conslaw_result** out) {
  return guard([&] {
    require(sys && out, "null handle");
    *out = result(system_json(sys->sys));
  });
}

conslaw_status conslaw_verify(const conslaw_system* sys, const char* F, const char* G, uint64_t seed,
                              conslaw_result** out) {
  return guard([&] {
    require(sys && out, "null handle");
    const auto cv = cv_of(sys->scope, F, G);
    const auto v = conslaw::verify(sys->sys, cv);
    Json j{{"holds", v.holds}, {"residual", v.residual.str()}};
    if (v.holds) {
      const auto t = conslaw::is_trivial(sys->sys, cv);
      j["trivial"] = t.trivial;
      j["witness"] = t.witness ? Json(t.witness->H.str()) : Json();
    } else {
      j["trivial"] = Json();
      j["witness"] = Json();
    }
    j["seed"] = seed;
    j["samples"] = samples(v.residual, seed);
    *out = result(j);
  });
}

conslaw_status conslaw_characteristic(const conslaw_system* sys, const char* F, const char* G,
                                      conslaw_result** out) {
  return guard([&] {
    require(sys && out, "null handle");
    const Expr lambda = conslaw::characteristic(sys->sys, cv_of(sys->scope, F, G));
    const auto adj = conslaw::adjoint_symmetry_check(lambda, sys->sys);
    *out = result(Json{{"characteristic", lambda.str()},
                       {"adjoint_holds", adj.holds},
                       {"adjoint_residual", adj.residual.str()}});
  });
}

conslaw_status conslaw_dependence(const conslaw_system* sys, const char* const* F, const char* const* G, size_t n,
                                  conslaw_result** out) {
  return guard([&] {
    require(sys && out, "null handle");
    std::vector<ConservedVector> cvs;
    const auto fs = strings(F, n);
    const auto gs = strings(G, n);
    for (std::size_t i = 0; i < n; ++i) cvs.push_back(cv_of(sys->scope, fs[i].c_str(), gs[i].c_str()));
    const auto d = conslaw::linear_dependence(sys->sys, cvs);
    Json rel = Json::array();
    for (const auto& r : d.relations) rel.push_back(exprs(r));
    *out = result(Json{{"rank", d.rank}, {"relations", rel}});
  });
}

conslaw_status conslaw_classify(const conslaw_equation* eq, conslaw_result** out) {
  return guard([&] {
    require(eq && out, "null handle");
    const auto canon = conslaw::canonicalize(eq->eq);
    const auto c = conslaw::classify_dce(eq->eq);
    Json basis = Json::array();
    for (const auto& cv : c.basis) basis.push_back(cv_json(cv));
    *out = result(Json{{"tag", canon.tag},
                       {"transformation", canon.g.str()},
                       {"case", c.case_id},
                       {"relation", c.relation},
                       {"basis", basis},
                       {"family", c.family ? cv_json(*c.family) : Json()},
                       {"parameters", c.parameters}});
  });
}

conslaw_status conslaw_potentials_dependent(const conslaw_system* sys, size_t n, conslaw_result** out) {
  return guard([&] {
    require(sys && out, "null handle");
    const auto& pots = sys->sys.potentials();
    require(n >= 1 && n <= pots.size(), "count exceeds the potentials of the system");
    conslaw::PotentialSystem ps{sys->sys, {}};
    for (std::size_t i = pots.size() - n; i < pots.size(); ++i) ps.added.push_back(pots[i].name);
    const auto d = conslaw::potentials_dependent(ps);
    *out = result(Json{{"dependent", d.dependent},
                       {"relation", exprs(d.relation)},
                       {"witness", d.dependent ? Json(d.witness.str()) : Json()}});
  });
}

conslaw_status conslaw_iterate(const conslaw_equation* eq, int max_level, int max_potentials,
                               conslaw_result** out) {
  return guard([&] {
    require(eq && out, "null handle");
    require(max_level >= 1 && max_potentials >= 1, "limits must be positive");
    conslaw::IterateOptions o;
    o.max_level = max_level;
    o.max_potentials = max_potentials;
    *out = result(hierarchy_json(conslaw::iterate(eq->eq, o)));
  });
}

conslaw_status conslaw_transform(const conslaw_system* sys, const char* x_image, const char* u_image,
                                 const char* const* potentials, const char* const* potential_images,
                                 size_t n_potentials, const char* const* inverse_keys,
                                 const char* const* inverse_values, size_t n_inverse, const char* const* F,
                                 const char* const* G, size_t n_vectors, conslaw_result** out) {
  return guard([&] {
    require(sys && out && x_image && u_image, "null argument");
    const auto& sc = sys->scope;
    conslaw::PointTransformation tr;
    tr.x = conslaw::parse(x_image, sc);
    tr.u = conslaw::parse(u_image, sc);
    const auto names = strings(potentials, n_potentials);
    const auto images = strings(potential_images, n_potentials);
    for (std::size_t i = 0; i < n_potentials; ++i) tr.potentials[names[i]] = conslaw::parse(images[i], sc);
    const auto keys = strings(inverse_keys, n_inverse);
    const auto values = strings(inverse_values, n_inverse);
    for (std::size_t i = 0; i < n_inverse; ++i) {
      const Expr k = conslaw::parse(keys[i], sc);
      const auto& terms = k.num().terms();
      require(k.is_polynomial() && terms.size() == 1 && terms.begin()->second == 1 &&
                  terms.begin()->first.factors().size() == 1 && terms.begin()->first.factors()[0].second == 1,
              "inverse keys must be single atoms");
      tr.inverse[terms.begin()->first.factors()[0].first] = conslaw::parse(values[i], sc);
    }
    const auto ts = conslaw::apply_point_transformation(conslaw::PotentialSystem{sys->sys, {}}, tr);
    const auto fs = strings(F, n_vectors);
    const auto gs = strings(G, n_vectors);
    Json moved = Json::array();
    for (std::size_t i = 0; i < n_vectors; ++i) {
      const auto m = ts.transport(cv_of(sc, fs[i].c_str(), gs[i].c_str()));
      Json j = cv_json(m);
      j["holds"] = conslaw::verify(ts.system.system, m).holds;
      moved.push_back(j);
    }
    *out = result(Json{{"system", system_json(ts.system.system)}, {"transported", moved}});
  });
}

conslaw_status conslaw_table1(conslaw_result** out) {
  return guard([&] {
    require(out, "null handle");
    Json rows = Json::array();
    for (const auto& r : conslaw::table1()) {
      const auto v = conslaw::verify(r.system, r.cv);
      rows.push_back(Json{{"label", r.label},
                          {"A", r.A},
                          {"B", r.B},
                          {"F", r.cv.F.str()},
                          {"G", r.cv.G.str()},
                          {"system", r.potential_system},
                          {"constraints", r.constraints},
                          {"holds", v.holds},
                          {"residual", v.residual.str()}});
    }
    *out = result(rows);
  });
}

conslaw_status conslaw_collapse(const char* kase, conslaw_result** out) {
  return guard([&] {
    require(kase && out, "null argument");
    std::vector<std::pair<Expr, Expr>> inst;
    if (std::string(kase) == "heat") {
      const auto sc = conslaw::table_scope();
      inst = {{conslaw::parse("1", sc), conslaw::parse("x", sc)},
              {conslaw::parse("x", sc), conslaw::parse("x^2 - 2*t", sc)}};
    }
    const auto c = conslaw::second_level_collapse(kase, inst);
    Json ws = Json::array();
    for (const auto& w : c.witnesses) {
      Json j{{"law", w.law}, {"F", w.cv.F.str()}, {"G", w.cv.G.str()}, {"w", w.w.str()},
             {"matches", w.matches}, {"trivial", w.trivial}, {"H", w.H.str()}};
      ws.push_back(j);
    }
    *out = result(Json{{"case", c.kase}, {"united", system_json(c.united)}, {"witnesses", ws},
                       {"verified", c.verified}});
  });
}

const char* conslaw_result_json(const conslaw_result* r) { return r ? r->json.c_str() : ""; }

void conslaw_result_free(conslaw_result* r) { delete r; }

}  // extern "C"
