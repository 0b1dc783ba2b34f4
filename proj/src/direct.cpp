#include "conslaw/direct.hpp"

#include <algorithm>

#include "conslaw/parse.hpp"

namespace conslaw {

namespace {

Expr P(const std::string& s) {
  static const Scope scope = Scope::standard();
  return parse(s, scope);
}

int jet_total_order(AtomId a) {
  const Atom& at = atom(a);
  return at.kind == AtomKind::Jet ? at.dx + at.dt : -1;
}

std::string fname(const Expr& u) { return atom(u.num().leading().first.factors()[0].first).name; }

// The part of e whose terms mention a function named `name`.
Expr terms_with(const Expr& e, const std::string& name) {
  Poly keep;
  for (const auto& [m, c] : e.num().terms()) {
    bool hit = false;
    for (const auto& [a, k] : m.factors())
      if (atom(a).kind == AtomKind::Function && atom(a).name == name) hit = true;
    if (hit) keep.add_term(m, c);
  }
  if (keep.is_zero()) return Expr{};
  return e.den().empty() ? Expr(keep) : Expr(keep) / Expr(e.den_poly());
}

Expr coefficient_of(const Expr& e, AtomId c) {
  auto co = coefficients_in(e, c);
  return co.count(1) ? co.at(1) : Expr{};
}

int max_x_order(const Expr& e, const std::string& dep) { return jet_order(e, dep); }

}  // namespace

DceEquation DceEquation::opaque(const std::string& relation) {
  DceEquation eq;
  eq.relation = relation;
  eq.A = P("A(u)");
  eq.IntA = P("Int[A]");
  if (relation == "none") {
    eq.B = P("B(u)");
    eq.IntB = P("Int[B]");
  } else if (relation == "B=0") {
    eq.B = Expr{};
    eq.IntB = Expr{};
  } else if (relation == "B=A") {
    eq.B = eq.A;
    eq.IntB = eq.IntA;
  } else if (relation == "B=IntA+uA") {
    eq.B = P("Int[A] + u*A(u)");
    eq.IntB = P("u*Int[A]");
  } else {
    throw ExprError("unknown relation '" + relation + "'");
  }
  return eq;
}

DceEquation DceEquation::concrete(const Expr& A, const Expr& B) {
  const AtomId u = jet("u");
  for (const Expr* k : {&A, &B})
    for (AtomId v : k->variables())
      if (v != u) throw ExprError("kernel " + k->str() + " depends on more than u");
  if (A.is_zero()) throw ExprError("A must be nonzero");
  DceEquation eq;
  eq.relation = "concrete";
  eq.A = A;
  eq.B = B;
  auto ia = integrate(A, u);
  auto ib = integrate(B, u);
  if (!ia || !ib) throw ExprError("cannot integrate kernels in closed form");
  eq.IntA = *ia;
  eq.IntB = *ib;
  return eq;
}

Expr DceEquation::rhs() const {
  const Expr ux = var(jet("u", 1));
  return total_derivative(A * ux, Axis::X) + B * ux;
}

EvolutionSystem DceEquation::system() const { return EvolutionSystem("u", rhs()); }

ConservedVector DceEquation::case1() const {
  return {var(jet("u")), -A * var(jet("u", 1)) - IntB, "case 1"};
}

std::vector<std::pair<Expr, Expr>> split_by_jets(const Expr& e, int threshold) {
  auto high = [&](AtomId a) { return jet_total_order(a) >= threshold; };
  auto touches = [&](AtomId a) {
    for (AtomId v : atom(a).vars)
      if (high(v)) return true;
    return false;
  };
  for (const auto& f : e.den())
    for (const auto& [m, c] : f.poly.terms())
      for (const auto& [a, k] : m.factors())
        if (touches(a)) throw ExprError("not polynomial in the high jets: " + e.str());
  std::map<Monomial, Poly, MonomialLess> groups;
  for (const auto& [m, c] : e.num().terms()) {
    std::vector<std::pair<AtomId, int>> hi, lo;
    for (const auto& [a, k] : m.factors()) {
      if (high(a)) {
        if (k < 0) throw ExprError("not polynomial in the high jets: " + e.str());
        hi.emplace_back(a, k);
      } else if (touches(a)) {
        throw ExprError("not polynomial in the high jets: " + e.str());
      } else {
        lo.emplace_back(a, k);
      }
    }
    groups[Monomial(hi)].add_term(Monomial(lo), c);
  }
  std::vector<std::pair<Expr, Expr>> out;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    Expr coef(it->second);
    if (!e.den().empty()) coef = coef / Expr(e.den_poly());
    out.emplace_back(Expr(Poly(it->first, 1)), coef);
  }
  return out;
}

Ansatz Ansatz::minimal_order() {
  const AtomId t = independent("t"), x = independent("x"), u = jet("u");
  return {{t, x, u}, {t, x, u, jet("u", 1)}};
}

DeterminingSystem determining_system(const EvolutionSystem& sys, const Ansatz& ansatz) {
  const int r = jet_order(sys.rhs(), sys.dependent());
  auto order_of = [](AtomId a) {
    const Atom& at = atom(a);
    if (at.kind == AtomKind::Independent) return -1;
    if (at.kind != AtomKind::Jet || at.dt != 0) throw ExprError("ansatz arguments must be t, x or x-jets");
    return at.dx;
  };
  int g_order = -1;
  for (AtomId a : ansatz.F_args) {
    if (std::find(ansatz.G_args.begin(), ansatz.G_args.end(), a) == ansatz.G_args.end())
      throw ExprError("G-arguments must include the F-arguments");
    if (order_of(a) > r - 2) throw ExprError("ansatz inconsistent with evolution order");
  }
  for (AtomId a : ansatz.G_args) {
    const int o = order_of(a);
    if (o > r - 1) throw ExprError("ansatz inconsistent with evolution order");
    g_order = std::max(g_order, o);
  }

  DeterminingSystem ds;
  const Expr F = unknown("F", ansatz.F_args);
  const Expr G = unknown("G", ansatz.G_args);
  ds.F = F;
  ds.G = G;
  const Expr div = sys.reduce(sys.dt(F) + sys.dx(G));
  std::vector<Expr> eqs;
  for (auto& [m, c] : split_by_jets(div, g_order + 1)) eqs.push_back(c);

  // Eliminate G when one equation fixes its derivative in the top jet.
  Expr Gval = G;
  bool eliminated = false;
  for (std::size_t i = 0; i < eqs.size() && !eliminated; ++i) {
    auto lf = linear_form(eqs[i]);
    if (!lf) continue;
    std::optional<AtomId> gd;
    bool ok = true;
    for (const auto& [a, c] : lf->coeff) {
      if (atom(a).name != "G") continue;
      if (gd) ok = false;
      gd = a;
    }
    if (!ok || !gd) continue;
    const Atom& ga = atom(*gd);
    int sum = 0;
    std::size_t idx = 0;
    for (std::size_t k = 0; k < ga.orders.size(); ++k) {
      sum += ga.orders[k];
      if (ga.orders[k]) idx = k;
    }
    if (sum != 1) continue;
    const AtomId y = ga.args[idx];
    if (std::find(ansatz.F_args.begin(), ansatz.F_args.end(), y) != ansatz.F_args.end()) continue;
    const Expr rest = eqs[i] - lf->coeff.at(*gd) * Expr::of_atom(*gd);
    auto I = integrate(-rest / lf->coeff.at(*gd), y);
    if (!I) continue;
    std::vector<AtomId> g1_args;
    for (AtomId a : ansatz.G_args)
      if (a != y) g1_args.push_back(a);
    const Expr G1 = unknown("G1", g1_args);
    Gval = *I + G1;
    ds.G = Gval;
    ds.unknowns = {F, G1};
    eqs.erase(eqs.begin() + static_cast<std::ptrdiff_t>(i));
    eliminated = true;
  }
  if (!eliminated) ds.unknowns = {F, G};

  for (const auto& e0 : eqs) {
    Expr e = eliminated ? sys.reduce(apply_value(e0, "G", Gval)) : e0;
    for (const auto& part : split_equation(e)) {
      Expr p = primitive_part(part);
      if (p.is_zero()) continue;
      if (std::none_of(ds.equations.begin(), ds.equations.end(),
                       [&](const Expr& q) { return q == p || q == -p; }))
        ds.equations.push_back(p);
    }
  }
  return ds;
}

LawSearch find_conservation_laws(const EvolutionSystem& sys, const Ansatz& ansatz) {
  LawSearch out;
  out.ds = determining_system(sys, ansatz);
  out.solution = solve_linear(out.ds.equations, out.ds.unknowns);
  if (!out.solution.complete()) {
    std::string msg = "determining system not solved; remaining:";
    for (const auto& e : out.solution.residual) msg += " " + e.str() + ";";
    throw ExprError(msg);
  }
  Expr F = out.ds.F;
  Expr G = out.ds.G;
  for (const auto& u : out.ds.unknowns) {
    const auto& v = out.solution.values.at(fname(u));
    F = apply_value(F, fname(u), v);
    G = apply_value(G, fname(u), v);
  }
  F = sys.reduce(F);
  G = sys.reduce(G);

  std::vector<LawPiece> cand;
  for (AtomId c : out.solution.constants)
    cand.push_back({{coefficient_of(F, c), coefficient_of(G, c), ""}, {}});
  for (const auto& p : out.solution.parameters)
    cand.push_back({{terms_with(F, p), terms_with(G, p), ""}, {p}});

  std::vector<ConservedVector> kept;
  for (auto& piece : cand) {
    if (piece.cv.F.is_zero() && piece.cv.G.is_zero()) continue;
    if (is_trivial(sys, piece.cv).trivial) continue;
    auto trial = kept;
    trial.push_back(piece.cv);
    if (linear_dependence(sys, trial).rank < static_cast<int>(trial.size())) continue;
    kept.push_back(piece.cv);
    out.pieces.push_back(piece);
  }
  return out;
}

std::optional<std::pair<Expr, Expr>> span_coefficients(const Expr& B, const Expr& A) {
  const Expr c = unknown("_sc", {});
  const Expr d = unknown("_sd", {});
  SolveOptions o;
  o.constant_prefix = "_sk";
  auto r = solve_linear({B - c * A - d}, {c, d}, o);
  if (!r.complete()) return std::nullopt;
  std::map<AtomId, Expr> zero;
  for (AtomId k : r.constants) zero.emplace(k, Expr{});
  Expr cv = replace_atoms(r.values.at("_sc"), zero);
  Expr dv = replace_atoms(r.values.at("_sd"), zero);
  if (!(B - cv * A - dv).is_zero()) return std::nullopt;
  return std::make_pair(cv, dv);
}

ClassificationCase classify_dce(const DceEquation& eq) {
  ClassificationCase out;
  out.relation = eq.relation;
  const auto bspan = span_coefficients(eq.B, eq.A);
  const bool b_const = bspan && bspan->first.is_zero();
  const bool a_const = eq.A.variables().empty();
  if (a_const && b_const)
    out.case_id = 4;
  else if (b_const)
    out.case_id = 2;
  else if (bspan)
    out.case_id = 3;
  else
    out.case_id = 1;

  const EvolutionSystem sys = eq.system();
  LawSearch search = find_conservation_laws(sys, Ansatz::minimal_order());
  out.ds = search.ds;

  for (auto& piece : search.pieces) {
    for (const auto& p : piece.parameters) {
      bool heat = false;
      for (AtomId a : piece.cv.F.atoms())
        if (atom(a).name == p && atom(a).traits.heat_time >= 0) heat = true;
      if (heat) {
        piece.cv.F = rename_function(piece.cv.F, p, "alpha");
        piece.cv.G = rename_function(piece.cv.G, p, "alpha");
      }
    }
  }

  if (out.case_id == 4) {
    if (search.pieces.size() != 1 || search.pieces[0].parameters.empty())
      throw ExprError("classification inconsistent: expected a parameterized series");
    ConservedVector fam = search.pieces[0].cv;
    fam.label = "alpha family";
    out.basis.push_back(fam);
    out.family = fam;
    out.parameters = {"alpha"};
    return out;
  }

  ConservedVector c1 = eq.case1();
  out.basis.push_back(c1);
  for (const auto& piece : search.pieces) {
    auto trial = out.basis;
    trial.push_back(piece.cv);
    if (linear_dependence(sys, trial).rank == static_cast<int>(trial.size())) out.basis.push_back(piece.cv);
  }
  const std::size_t expected = out.case_id == 1 ? 1 : 2;
  if (out.basis.size() != expected || search.pieces.size() != expected)
    throw ExprError("classification inconsistent: found " + std::to_string(search.pieces.size()) + " laws");
  for (std::size_t i = 1; i < out.basis.size(); ++i) out.basis[i].label = "case " + std::to_string(out.case_id);
  if (out.case_id == 3) {
    ConservedVector fam = out.basis[1] + Expr::of_atom(constant("eps")) * c1;
    fam.label = "eps family";
    out.family = fam;
    out.parameters = {"eps"};
  }
  return out;
}

ConservedVector reduce_order(const EvolutionSystem& sys, const ConservedVector& cv) {
  if (!verify(sys, cv).holds) throw ExprError("not a conservation law");
  const std::string& u = sys.dependent();
  Expr F = sys.reduce(cv.F);
  Expr G = sys.reduce(cv.G);
  for (int n = max_x_order(F, u); n >= 1; n = max_x_order(F, u)) {
    const AtomId un = jet(u, n);
    const Expr c = partial(F, un);
    if (!partial(c, un).is_zero()) throw ExprError("density not affine in its highest derivative");
    auto H = integrate(c, jet(u, n - 1));
    if (!H) throw ExprError("cannot integrate " + c.str());
    F = sys.reduce(F - sys.dx(*H));
    G = sys.reduce(G + sys.dt(*H));
  }
  return {F, G, cv.label};
}

Expr rename_function(const Expr& e, const std::string& from, const std::string& to) {
  std::map<AtomId, Expr> ren;
  for (AtomId a : e.atoms()) {
    const Atom& at = atom(a);
    if (at.kind != AtomKind::Function || at.name != from) continue;
    ren.emplace(a, function(to, at.args, at.orders, at.traits, at.scale, at.shift));
  }
  return ren.empty() ? e : replace_atoms(e, ren);
}

}  // namespace conslaw
