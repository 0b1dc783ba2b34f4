#include "doctest.h"

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

}  // namespace

TEST_CASE("parse basics") {
  CHECK(P("x*u").str() == "x*u");
  CHECK(P("x + x - 2*x").is_zero());
  CHECK(P("A(u)*u_x - u_x*A(u)").is_zero());
  CHECK(P("(exp(x)+eps)*u") == P("u*exp(x) + eps*u"));
  CHECK(P("Int[A] - x*A(u)*u_x").str() == "-x*u_x*A(u) + Int[A]");
  CHECK(P("u[3]") == P("u_xxx"));
  CHECK(P("2/4") == Expr(Rational(1, 2)));
  CHECK(P("x^-2") == Expr(1) / (P("x") * P("x")));
  CHECK(P("-x^2") == -(P("x") * P("x")));
  CHECK(P("pow(u,-4/3)").str() == "pow(u,-4/3)");
  CHECK(P("u^(1/3)") == P("pow(u,1/3)"));
}

TEST_CASE("kernels differentiate as registered") {
  const AtomId u = jet("u");
  CHECK(partial(P("Int[A]"), u) == P("A(u)"));
  CHECK(partial(P("A(u)"), u) == P("Ap(u)"));
  CHECK(partial(P("Ap(u)"), u) == P("App(u)"));
  CHECK(partial(P("A(u)*u_x"), u) == P("Ap(u)*u_x"));
  CHECK(partial(P("u_x^2"), jet("u", 1)) == P("2*u_x"));
  CHECK(partial(P("x*u"), independent("t")).is_zero());
}

TEST_CASE("heat kernels trade time for space derivatives") {
  CHECK(P("alpha_t(t,x)") == P("-alpha_xx(t,x)"));
  CHECK(partial(P("alpha(t,x)"), independent("t")) == P("-alpha_xx(t,x)"));
  CHECK(P("sigma_v(t,v)").str() == "sigma_v(t,v)");
}

TEST_CASE("printed forms parse back") {
  for (const char* s : {"Int[A] - x*A(u)*u_x", "(exp(x) + eps)*u", "alpha_x(t,x)*u - alpha(t,x)*u_x",
                        "u/(x^2 + 1)", "v/(exp(x) + eps)", "pow(u,-4/3)*u_x + x^-3",
                        "A(2*u + 1)", "exp(-x)/(u + 1)^2", "1/(x*(x + 1))"}) {
    Expr e = P(s);
    CAPTURE(e.str());
    CHECK(P(e.str()).str() == e.str());
  }
}

TEST_CASE("concrete kernels") {
  Scope s = scope();
  s.definitions["A"] = P("u^-2");
  CHECK(parse("A(u)*u_x", s) == P("u^-2*u_x"));
  CHECK(parse("Int[A]", s) == P("-u^-1"));
  CHECK(parse("Ap(u)", s) == P("-2*u^-3"));
}

TEST_CASE("parse errors carry positions") {
  try {
    P("x + foo");
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(e.position == 4);
  }
  CHECK_THROWS_AS(P("u_y"), ParseError);
  CHECK_THROWS_AS(P("(x"), ParseError);
  CHECK_THROWS_AS(P("x +"), ParseError);
  CHECK_THROWS_AS(P("x/0"), ParseError);
}

TEST_CASE("substitution examples") {
  const AtomId x = independent("x");
  const AtomId u = jet("u");
  CHECK(substitute(P("u_t"), {{jet("u", 0, 1), P("u_xx")}}) == P("u_xx"));
  CHECK(substitute(P("x*u"), {{x, P("1 - x^-1")}, {u, P("x^3*u")}}) == P("(1 - x^-1)*x^3*u"));
  CHECK(substitute(P("v"), {{jet("v"), P("x*v - u")}}) == P("x*v - u"));
}
