#include "doctest.h"

#include "conslaw/hierarchy.hpp"

using namespace conslaw;

namespace {

Scope scope() {
  Scope s = table_scope();
  s.add_potential("v1");
  s.add_potential("v2");
  s.constants.insert("a");
  return s;
}

Expr P(const std::string& s) { return parse(s, scope()); }
ConservedVector CV(const std::string& f, const std::string& g) { return {P(f), P(g), ""}; }

DceEquation heat() { return DceEquation::concrete(1, 0); }
DceEquation u_minus2() { return DceEquation::concrete(P("u^-2"), 0); }

const Table1Row& row(const std::string& label) {
  static const auto t = table1();
  for (const auto& r : t)
    if (r.label == label) return r;
  throw ExprError("no row " + label);
}

}  // namespace

TEST_CASE("potential system of the general equation") {
  const auto eq = DceEquation::opaque();
  const auto ps = build_potential_system(eq.system(), {eq.case1()}, {"v"});
  REQUIRE(ps.added == std::vector<std::string>{"v"});
  const auto rel = ps.relations();
  REQUIRE(rel.size() == 2);
  CHECK(rel[0] == "v_x = u");
  CHECK(ps.system.potential("v")->t_rule == P("A(u)*u_x + Int[B]"));
}

TEST_CASE("heat potential system with two kernels") {
  const auto ps = build_potential_system(heat().system(), {row("4").cv, CV("beta*u", "beta_x*u - beta*u_x")});
  REQUIRE(ps.added == std::vector<std::string>{"v1", "v2"});
  CHECK(ps.system.potential("v2")->x_rule == P("beta*u"));
  CHECK(ps.system.potential("v2")->t_rule == P("beta*u_x - beta_x*u"));
}

TEST_CASE("dependent generating vectors are rejected with the relation") {
  const auto a = row("4").cv;
  try {
    build_potential_system(heat().system(), {a, P("2") * a});
    FAIL("expected rejection");
  } catch (const ExprError& e) {
    CHECK(std::string(e.what()).find("relation (2, -1)") != std::string::npos);
  }
  CHECK_THROWS_AS(build_potential_system(heat().system(), {CV("u", "0")}), ExprError);
}

TEST_CASE("potential dependence") {
  const auto b0 = DceEquation::opaque("B=0");
  const auto ps = build_potential_system(b0.system(), {b0.case1(), row("2").cv});
  CHECK_FALSE(potentials_dependent(ps).dependent);

  const EvolutionSystem hs = heat().system();
  const ConservedVector a = row("4").cv;
  const PotentialSystem scaled{hs.with_potential("v1", a).with_potential("v2", P("3") * a), {"v1", "v2"}};
  const auto d = potentials_dependent(scaled);
  REQUIRE(d.dependent);
  CHECK(primitive_part(d.witness) == primitive_part(P("v2 - 3*v1")));

  const EvolutionSystem gs = DceEquation::opaque().system();
  const Expr h = P("x*u");
  const ConservedVector trivial{total_derivative(h, Axis::X, gs), -total_derivative(h, Axis::T, gs), ""};
  const PotentialSystem single{gs.with_potential("v", trivial), {"v"}};
  const auto s = potentials_dependent(single);
  REQUIRE(s.dependent);
  CHECK(s.witness.variables().count(jet("v")));
  CHECK(gs.with_potential("v", trivial).reduce(total_derivative(s.witness, Axis::X, gs.with_potential("v", trivial))).is_zero());
}

TEST_CASE("potential ansatz arguments") {
  const auto ps = heat().system().with_potential("v1", row("4").cv).with_potential("v2", row("4").cv);
  const auto a = potential_ansatz(ps);
  CHECK(a.F_args == std::vector<AtomId>{independent("t"), independent("x"), jet("v1"), jet("v2")});
  CHECK(a.G_args == std::vector<AtomId>{independent("t"), independent("x"), jet("u"), jet("v1"), jet("v2")});
}

TEST_CASE("span membership modulo null divergences") {
  const auto b0 = DceEquation::opaque("B=0");
  const auto united = b0.system().with_potential("v1", b0.case1()).with_potential("v2", row("2").cv);
  const auto m = span_membership(united, CV("v1", "-Int[A]"), {b0.case1(), row("2").cv});
  REQUIRE(m.member);
  CHECK(m.H == P("x*v1 - v2"));
  CHECK(m.coefficients == std::vector<Expr>{0, 0});

  const auto sys = u_minus2().system().with_potential("v1", u_minus2().case1());
  const ConservedVector xu = CV("x*u", "-x*u^-2*u_x - u^-1");
  CHECK_FALSE(span_membership(sys, xu, {u_minus2().case1()}).member);
  const auto local = span_membership(sys, P("2") * xu, {u_minus2().case1(), xu});
  REQUIRE(local.member);
  CHECK(local.coefficients == std::vector<Expr>{0, 2});
  const auto none = span_membership(DceEquation::opaque("B=IntA+uA").system().with_potential("v", row("1").cv),
                                    CV("exp(v)", "-exp(v)*Int[A]"), {});
  CHECK_FALSE(none.member);
}

TEST_CASE("span membership through a parameter family") {
  const auto eq = u_minus2();
  const ConservedVector xu = CV("x*u", "-x*u^-2*u_x - u^-1");
  const auto united = eq.system().with_potential("v", eq.case1()).with_potential("v2", xu);
  const LawPiece sigma{CV("sigma(t,v)", "u^-1*sigma_v(t,v)"), {"sigma"}};
  const auto m = span_membership(united, CV("x^-2*v2^2 - 2*t", "2*x^-1*u^-1*v2"), {eq.case1(), xu}, {sigma});
  REQUIRE(m.member);
  REQUIRE(m.parameters.size() == 1);
  CHECK(m.parameters[0] == P("v^2 - 2*t"));
}

TEST_CASE("system on K") {
  const auto free = verify_system_on_K(P("beta"), {P("alpha")}, {"v1"});
  CHECK(free.holds);
  REQUIRE(free.decomposition);
  CHECK(free.decomposition->first.is_zero());
  CHECK(free.decomposition->second == P("beta"));

  const auto lin = verify_system_on_K(P("alpha"), {P("alpha")}, {"v1"});
  CHECK(lin.holds);
  REQUIRE(lin.decomposition);
  CHECK(lin.decomposition->first == P("v1"));
  CHECK(lin.decomposition->second.is_zero());

  const auto quad = verify_system_on_K(P("2*v1 + x"), {P("1")}, {"v1"});
  CHECK(quad.holds);
  REQUIRE(quad.decomposition);
  CHECK(quad.decomposition->first == P("v1^2"));
  CHECK(quad.decomposition->second == P("x"));

  const auto bad = verify_system_on_K(P("x*v1"), {P("1")}, {"v1"});
  CHECK_FALSE(bad.holds);
  CHECK(bad.heat_residual.is_zero());
  CHECK(bad.coupling_residual == P("1"));

  CHECK_THROWS_AS(verify_system_on_K(P("1"), {P("x"), P("2*x")}, {"v1", "v2"}), ExprError);
}

TEST_CASE("hierarchy of the general equation") {
  const auto r = iterate(DceEquation::opaque());
  CHECK(r.tag == "general");
  CHECK(r.local.size() == 1);
  REQUIRE(r.nodes.size() == 1);
  CHECK(r.nodes[0].laws.empty());
  CHECK(r.termination == "all new laws dependent");
  CHECK(r.summary == "1 local law, no potential laws");
}

TEST_CASE("hierarchy for B=0 collapses") {
  const auto r = iterate(DceEquation::opaque("B=0"));
  CHECK(r.summary == "2 local laws, no potential laws");
  CHECK(r.termination == "all new laws dependent");
  REQUIRE(r.nodes.size() == 3);
  REQUIRE(r.nodes[0].laws.size() == 1);
  CHECK(r.nodes[0].laws[0].verdict == "dependent");
  CHECK(r.nodes[0].laws[0].cv.F == P("v1"));
  REQUIRE(r.nodes[1].laws.size() == 1);
  CHECK(r.nodes[1].laws[0].cv.F == P("x^-2*v2"));
  CHECK(r.nodes[2].laws.empty());
}

TEST_CASE("hierarchy for B=IntA+uA stops at level two") {
  const auto r = iterate(DceEquation::opaque("B=IntA+uA"));
  CHECK(r.summary == "1 local law + 1 simplest potential law");
  CHECK(r.depth == 2);
  CHECK(r.termination == "all new laws dependent");
  REQUIRE(r.nodes.size() == 2);
  REQUIRE(r.nodes[0].laws.size() == 1);
  CHECK(r.nodes[0].laws[0].verdict == "new");
  CHECK(r.nodes[0].laws[0].cv.F == P("exp(v)"));
  CHECK(r.nodes[1].laws.empty());
}

TEST_CASE("hierarchy of the linearizable equations") {
  const auto burgers = iterate(DceEquation::concrete(1, P("2*u")));
  CHECK(burgers.summary == "1 local law + infinite simplest potential series (alpha-parameterized)");
  CHECK(burgers.termination == "parameterized series");
  REQUIRE(burgers.nodes[0].laws.size() == 1);
  CHECK(burgers.nodes[0].laws[0].cv.F == P("alpha*exp(v)"));

  const auto h = iterate(heat());
  CHECK(h.summary == "infinite local series (alpha-parameterized), no potential laws");
  REQUIRE(h.nodes.size() == 1);
  CHECK(h.nodes[0].laws[0].verdict == "dependent");

  const auto u2 = iterate(u_minus2());
  CHECK(u2.summary == "2 local laws + infinite simplest potential series (sigma-parameterized)");
  CHECK(u2.tag == "A=u^-2,B=0");
}

TEST_CASE("shifted Burgers keeps its hierarchy") {
  const auto r = iterate(DceEquation::concrete(1, P("2*u + 3")));
  CHECK(r.tag == "A=1,B=2u");
  CHECK(r.g.e7 == P("3"));
  CHECK(r.summary == "1 local law + infinite simplest potential series (alpha-parameterized)");
}

TEST_CASE("hodograph maps u^-2 diffusion to heat") {
  const auto eq = u_minus2();
  const auto ps = build_potential_system(eq.system(), {eq.case1()}, {"v"});
  PointTransformation tr;
  tr.x = P("v");
  tr.u = P("u^-1");
  tr.potentials["v"] = P("x");
  tr.inverse = {{independent("x"), P("v")}, {jet("u"), P("u^-1")}, {jet("v"), P("x")}};
  const auto ts = apply_point_transformation(ps, tr);
  CHECK(ts.system.system.rhs() == P("u_xx"));
  CHECK(same_system(ts.system.system, heat().system().with_potential("v", heat().case1())));

  // 1.4 becomes a local heat law with alpha = sigma
  const auto m = ts.transport(row("1.4").cv);
  CHECK(verify(ts.system.system, m).holds);
}

TEST_CASE("Burgers and heat potential systems are connected") {
  const auto bur = DceEquation::concrete(1, P("2*u"));
  const auto ps = build_potential_system(bur.system(), {bur.case1()}, {"v"});
  PointTransformation tr;
  tr.x = x_var();
  tr.u = P("u*exp(v)");
  tr.potentials["v"] = P("exp(v)");
  tr.inverse = {{independent("x"), x_var()}, {jet("u"), P("u/v")}};
  for (AtomId a : P("exp(v)").atoms()) tr.inverse[a] = P("v");
  const auto ts = apply_point_transformation(ps, tr);
  CHECK(same_system(ts.system.system, heat().system().with_potential("v", heat().case1())));
  const auto m = ts.transport(row("1.6").cv);
  CHECK(m.F == P("alpha*v"));
  CHECK(verify(ts.system.system, m).holds);
}

TEST_CASE("x-translation on the Case 3 system") {
  const auto eq = DceEquation::opaque("B=A");
  const auto ps = build_potential_system(eq.system(), {row("3").cv}, {"v"});
  PointTransformation tr;
  tr.x = P("x + 2");
  tr.u = P("u");
  tr.potentials["v"] = P("v");
  tr.inverse = {{independent("x"), P("x - 2")}, {jet("u"), P("u")}, {jet("v"), P("v")}};
  const auto ts = apply_point_transformation(ps, tr);
  CHECK(ts.system.system.rhs() == eq.system().rhs());
  const auto m = ts.transport(row("3").cv);
  CHECK(verify(eq.system(), m).holds);
  // (exp(x-2) + eps) u = exp(-2) (exp(x) + eps exp(2)) u
  const Expr e2 = exp(P("2"));
  const ConservedVector renormalized{P("exp(x)*u") + P("eps") * e2 * P("u"), Expr{}, ""};
  CHECK(primitive_part(m.F) == primitive_part(renormalized.F));
}

TEST_CASE("triviality is transported") {
  const auto eq = u_minus2();
  const auto ps = build_potential_system(eq.system(), {eq.case1()}, {"v"});
  PointTransformation tr;
  tr.x = P("v");
  tr.u = P("u^-1");
  tr.potentials["v"] = P("x");
  tr.inverse = {{independent("x"), P("v")}, {jet("u"), P("u^-1")}, {jet("v"), P("x")}};
  const auto ts = apply_point_transformation(ps, tr);
  for (const char* h : {"x*v", "v^2*u", "t*x^2"}) {
    const Expr H = P(h);
    const ConservedVector trivial{total_derivative(H, Axis::X, ps.system), -total_derivative(H, Axis::T, ps.system), ""};
    CHECK(is_trivial(ts.system.system, ts.transport(trivial)).trivial);
  }
}

TEST_CASE("Jacobian must not vanish") {
  const auto eq = u_minus2();
  const auto ps = build_potential_system(eq.system(), {eq.case1()}, {"v"});
  PointTransformation tr;
  tr.x = P("t");
  tr.u = P("u");
  tr.potentials["v"] = P("v");
  CHECK_THROWS_AS(apply_point_transformation(ps, tr), ExprError);
}

TEST_CASE("second-level collapse witnesses") {
  for (const char* k : {"B=0", "B=A"}) {
    const auto c = second_level_collapse(k);
    CHECK(c.verified);
    for (const auto& w : c.witnesses) CHECK((w.H - w.w).variables().empty());
  }
  const auto h = second_level_collapse("heat", {{P("1"), P("x")}, {P("x"), P("x^2 - 2*t")}});
  CHECK(h.verified);
  REQUIRE(h.witnesses.size() == 3);
  CHECK(h.witnesses[1].w == P("x*v1 - v2"));
  CHECK_THROWS_AS(second_level_collapse("B=1"), ExprError);
}

TEST_CASE("Table 1 rows verify") {
  const auto t = table1();
  REQUIRE(t.size() == 13);
  for (const auto& r : t) {
    INFO(r.label);
    CHECK(verify(r.system, r.cv).residual.is_zero());
    CHECK_FALSE(is_trivial(r.system, r.cv).trivial);
  }
  CHECK(row("1.4").constraints == std::vector<std::string>{"sigma_t + sigma_vv = 0"});
  CHECK(row("1.3").constraints.back() == "Int[B] = u*Int[A]");
  CHECK(row("2.1").potential_system[1] == "w_x = x^-2*v");
}

TEST_CASE("row 3.1 with eps = 0 is row 1.2 under relabeling") {
  const auto& r = row("3.1");
  const auto cv0 = ConservedVector{substitute(r.cv.F, {{constant("eps"), Expr{}}}),
                                   substitute(r.cv.G, {{constant("eps"), Expr{}}}), ""};
  const auto sys0 = DceEquation::opaque("B=A").system().with_potential("v", CV("exp(x)*u", "-exp(x)*A(u)*u_x"));
  CHECK(verify(sys0, cv0).holds);
  CHECK(cv0.F == P("exp(x)^-1*v"));
}

TEST_CASE("potential relations are cross-derivative consistent") {
  for (const auto& r : table1()) {
    const EvolutionSystem s = r.system.with_potential("w", r.cv);
    for (const auto& p : s.potentials()) {
      INFO(r.label << " " << p.name);
      CHECK(s.reduce(s.dt(p.x_rule) - s.dx(p.t_rule)).is_zero());
    }
  }
}
