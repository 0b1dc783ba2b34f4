#include "conslaw/equivalence.hpp"

namespace conslaw {

namespace {

const Expr& U() {
  static const Expr u = var(jet("u"));
  return u;
}

EquivTransformation make(std::initializer_list<std::pair<int, Expr>> set) {
  EquivTransformation g;
  Expr* slots[] = {&g.e1, &g.e2, &g.e3, &g.e4, &g.e5, &g.e6, &g.e7};
  for (const auto& [i, v] : set) *slots[i - 1] = v;
  return g;
}

// u -> (u - e3)/e6 inside an expression in u.
Expr pull_back_u(const Expr& e, const EquivTransformation& g) {
  if (g.e3.is_zero() && g.e6 == Expr(1)) return e;
  return substitute(e, {{jet("u"), (U() - g.e3) / g.e6}});
}

}  // namespace

bool EquivTransformation::is_identity() const { return *this == identity(); }

void EquivTransformation::validate() const {
  if ((e4 * e5 * e6).is_zero()) throw ExprError("equivalence transformation needs e4 e5 e6 != 0");
}

EquivTransformation operator*(const EquivTransformation& b, const EquivTransformation& a) {
  EquivTransformation g;
  g.e4 = a.e4 * b.e4;
  g.e1 = b.e4 * a.e1 + b.e1;
  g.e5 = a.e5 * b.e5;
  g.e7 = b.e5 * a.e7 / b.e4 + b.e7;
  g.e2 = b.e5 * a.e2 + b.e4 * b.e7 * a.e1 + b.e2;
  g.e6 = a.e6 * b.e6;
  g.e3 = b.e6 * a.e3 + b.e3;
  return g;
}

EquivTransformation EquivTransformation::inverse() const {
  validate();
  EquivTransformation c;
  c.e4 = Expr(1) / e4;
  c.e1 = -c.e4 * e1;
  c.e5 = Expr(1) / e5;
  c.e6 = Expr(1) / e6;
  c.e3 = -c.e6 * e3;
  c.e7 = -e4 * e7 / e5;
  c.e2 = -c.e5 * e2 - c.e4 * c.e7 * e1;
  return c;
}

bool operator==(const EquivTransformation& a, const EquivTransformation& b) {
  return a.e1 == b.e1 && a.e2 == b.e2 && a.e3 == b.e3 && a.e4 == b.e4 && a.e5 == b.e5 && a.e6 == b.e6 &&
         a.e7 == b.e7;
}

std::string EquivTransformation::str() const {
  return "(" + e1.str() + ", " + e2.str() + ", " + e3.str() + ", " + e4.str() + ", " + e5.str() + ", " +
         e6.str() + ", " + e7.str() + ")";
}

DceEquation act_on_equation(const EquivTransformation& g, const DceEquation& eq) {
  g.validate();
  DceEquation out;
  out.relation = eq.relation == "concrete" ? "concrete" : "transformed";
  const Expr ka = g.e5 * g.e5 / g.e4;
  const Expr kb = g.e5 / g.e4;
  out.A = ka * pull_back_u(eq.A, g);
  out.B = kb * pull_back_u(eq.B, g) - g.e7;
  out.IntA = ka * g.e6 * pull_back_u(eq.IntA, g);
  out.IntB = kb * g.e6 * pull_back_u(eq.IntB, g) - g.e7 * U();
  return out;
}

ConservedVector act_on_conserved_vector(const EquivTransformation& g, const ConservedVector& cv) {
  g.validate();
  const Expr F = cv.F / g.e5;
  const Expr G = (g.e4 * g.e7 * cv.F + g.e5 * cv.G) / (g.e4 * g.e5);
  const AtomId t = independent("t"), x = independent("x");
  std::map<AtomId, Expr> b;
  const Expr told = (var(t) - g.e1) / g.e4;
  b[t] = told;
  b[x] = (var(x) - g.e4 * g.e7 * told - g.e2) / g.e5;
  std::set<AtomId> vs = F.variables();
  for (AtomId v : G.variables()) vs.insert(v);
  for (AtomId v : vs) {
    const Atom& a = atom(v);
    if (a.kind != AtomKind::Jet) continue;
    if (a.dt != 0) throw ExprError("reduce the conserved vector before transforming it");
    Expr img = var(v) * g.e5.pow(a.dx);
    if (a.name == "u") img = a.dx == 0 ? (var(v) - g.e3) / g.e6 : img / g.e6;
    b[v] = img;
  }
  return {substitute(F, b), substitute(G, b), cv.label};
}

bool has_canonical_form(const DceEquation& eq, const std::string& tag) {
  const Expr& A = eq.A;
  const Expr& B = eq.B;
  const Expr um2 = rational_power(jet("u"), -2);
  if (tag == "A=1,B=0") return A == Expr(1) && B.is_zero();
  if (tag == "A=1,B=2u") return A == Expr(1) && B == Expr(2) * U();
  if (tag == "A=u^-2,B=0") return A == um2 && B.is_zero();
  if (tag == "A=B=u^-2") return A == um2 && B == um2;
  if (tag == "B=0") return B.is_zero();
  if (tag == "B=A") return B == A;
  if (tag == "B=IntA+uA") {
    const AtomId u = jet("u");
    return (partial(B, u) - Expr(2) * A - U() * partial(A, u)).is_zero();
  }
  if (tag == "general") return true;
  throw ExprError("unknown case tag '" + tag + "'");
}

CanonicalForm canonicalize(const DceEquation& eq) {
  const AtomId u = jet("u");
  const Expr& A = eq.A;
  const Expr& B = eq.B;
  const bool a_const = A.variables().empty();
  const auto bspan = span_coefficients(B, A);
  const bool b_const = B.variables().empty();

  if (a_const && b_const) {
    auto g = make({{4, A}}) * make({{7, B}});
    return {"A=1,B=0", g};
  }
  if (a_const) {
    if (auto s = span_coefficients(B, U()); s && !s->first.is_zero()) {
      auto g = make({{6, s->first / (Expr(2) * A)}}) * make({{4, A}}) * make({{7, s->second}});
      return {"A=1,B=2u", g};
    }
  }
  // A = alpha (u + s)^-2
  const Expr Ainv = Expr(1) / A;
  if (!a_const && Ainv.is_polynomial() && Ainv.variables() == std::set<AtomId>{u}) {
    auto co = coefficients_in(Ainv, u);
    bool quad = co.count(2) && !co.at(2).is_zero();
    for (const auto& [k, c] : co)
      if (k < 0 || k > 2 || !c.variables().empty()) quad = false;
    if (quad) {
      const Expr c2 = co.at(2);
      const Expr c1 = co.count(1) ? co.at(1) : Expr{};
      const Expr c0 = co.count(0) ? co.at(0) : Expr{};
      if ((c1 * c1 - Expr(4) * c2 * c0).is_zero() && bspan) {
        const Expr alpha = Expr(1) / c2;
        const auto shift = make({{3, c1 / (Expr(2) * c2)}});
        const auto [c, d] = *bspan;
        if (c.is_zero()) return {"A=u^-2,B=0", shift * make({{4, alpha}}) * make({{7, d}})};
        return {"A=B=u^-2", shift * make({{5, c}, {4, c * c * alpha}}) * make({{7, d}})};
      }
    }
  }
  if (bspan) {
    const auto [c, d] = *bspan;
    if (c.is_zero()) return {"B=0", make({{7, d}})};
    return {"B=A", make({{5, c}}) * make({{7, d}})};
  }
  if (has_canonical_form(eq, "B=IntA+uA")) return {"B=IntA+uA", {}};
  return {"general", {}};
}

DceEquation kernel_group_action(const Expr& a, const Expr& b, const DceEquation& eq) {
  return act_on_equation(make({{1, a}, {2, b}}), eq);
}

ConservedVector kernel_group_action(const Expr& a, const Expr& b, const ConservedVector& cv) {
  return act_on_conserved_vector(make({{1, a}, {2, b}}), cv);
}

EvolutionSystem u43_equation() {
  const AtomId u = jet("u");
  return EvolutionSystem("u", total_derivative(rational_power(u, Rational(-4, 3)) * var(jet("u", 1)), Axis::X));
}

ConservedVector lie_symmetry_map_u43(const ConservedVector& cv) {
  const EvolutionSystem sys = u43_equation();
  if (!verify(sys, cv).holds) throw MathError("not a conservation law of u_t = (u^(-4/3) u_x)_x");
  const AtomId x = independent("x");
  const AtomId s = independent("_s");  // s = 1 - x~ = 1/x
  const Expr F = var(x).pow(2) * sys.reduce(cv.F);
  const Expr G = sys.reduce(cv.G);
  const int n = std::max(jet_order(F, "u"), jet_order(G, "u"));
  std::map<AtomId, Expr> b;
  b[x] = Expr::of_atom(s, -1);
  // old u_k in new variables: D_x = s^2 D_x~, with D_x~ s = -1
  Expr uk = U() * Expr::of_atom(s, 3);
  for (int k = 0; k <= std::max(n, 0); ++k) {
    b[jet("u", k)] = uk;
    uk = Expr::of_atom(s, 2) * (total_derivative(uk, Axis::X) - partial(uk, s));
  }
  const std::map<AtomId, Expr> back{{s, Expr(1) - var(x)}};
  auto move = [&](const Expr& e) { return substitute(substitute(e, b), back); };
  return {move(F), move(G), cv.label};
}

}  // namespace conslaw
