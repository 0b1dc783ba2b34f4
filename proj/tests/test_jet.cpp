#include "doctest.h"

#include "conslaw/jet.hpp"
#include "conslaw/parse.hpp"

using namespace conslaw;

namespace {

Scope scope() {
  Scope s = Scope::standard();
  s.constants.insert("eps");
  s.add_potential("v");
  return s;
}

Expr P(const std::string& s) { return parse(s, scope()); }

EvolutionSystem heat() { return EvolutionSystem("u", P("u_xx")); }
EvolutionSystem dce(const std::string& B = "B(u)") {
  return EvolutionSystem("u", total_derivative(P("A(u)*u_x"), Axis::X) + P(B) * P("u_x"));
}

}  // namespace

TEST_CASE("total derivatives") {
  CHECK(total_derivative(P("u"), Axis::X) == P("u_x"));
  CHECK(total_derivative(P("A(u)"), Axis::X) == P("Ap(u)*u_x"));
  CHECK(total_derivative(P("x*u"), Axis::T, heat()) == P("x*u_xx"));
  CHECK(total_derivative(P("alpha(t,x)*u"), Axis::T) == P("-alpha_xx(t,x)*u + alpha(t,x)*u_t"));
}

TEST_CASE("on-shell reduction") {
  CHECK(heat().reduce(P("u_tx")) == P("u_xxx"));
  CHECK(heat().reduce(P("u_tt")) == P("u[4]"));
  CHECK(heat().reduce(P("t*x")) == P("t*x"));
  EvolutionSystem s = dce().with_potential("v", {P("u"), P("-A(u)*u_x - Int[B]"), "1"});
  CHECK(s.reduce(P("v_t")) == P("A(u)*u_x + Int[B]"));
  CHECK(s.reduce(P("v_xx")) == P("u_x"));
  CHECK(s.reduce(s.reduce(P("v_tx + u_t"))) == s.reduce(P("v_tx + u_t")));
}

TEST_CASE("euler operator") {
  CHECK(euler_operator(P("u_x^2/2"), "u") == P("-u_xx"));
  CHECK(euler_operator(P("u*u_xx"), "u") == P("2*u_xx"));
  CHECK(euler_operator(total_derivative(P("x*u*u_x^2 + A(u)*u_t"), Axis::X), "u").is_zero());
  CHECK(euler_operator(total_derivative(P("t*u_x*u_t"), Axis::T), "u").is_zero());
}

TEST_CASE("adjoint symmetry check") {
  CHECK(adjoint_symmetry_check(P("1"), dce()).holds);
  CHECK(adjoint_symmetry_check(P("x"), dce("0")).holds);
  auto r = adjoint_symmetry_check(P("u"), heat());
  CHECK_FALSE(r.holds);
  CHECK_FALSE(r.residual.is_zero());
  CHECK(adjoint_symmetry_check(P("alpha(t,x)"), heat()).holds);
  CHECK(adjoint_symmetry_check(P("exp(x) + eps"), dce("A(u)")).holds);
}

TEST_CASE("symmetry action") {
  EvolutionSystem s = dce("0");
  ConservedVector c2{P("x*u"), P("Int[A] - x*A(u)*u_x"), "2"};
  VectorField dx{Expr(0), Expr(1), Expr(0)};
  ConservedVector r = symmetry_action(c2, dx, s);
  CHECK(r.F == P("-u"));
  CHECK(r.G == P("A(u)*u_x"));
  ConservedVector c1{P("u"), P("-A(u)*u_x - Int[B]"), "1"};
  VectorField dt{Expr(1), Expr(0), Expr(0)};
  ConservedVector z = symmetry_action(c1, dt, dce());
  CHECK(z.F.is_zero());
  CHECK(z.G.is_zero());
}

TEST_CASE("wronskian") {
  const AtomId x = independent("x");
  CHECK(wronskian({P("1"), P("x")}, x) == Expr(1));
  CHECK(wronskian({P("x"), P("2*x")}, x).is_zero());
  CHECK(wronskian({P("1"), P("x"), P("x^2 - 2*t")}, x) == Expr(2));
}
