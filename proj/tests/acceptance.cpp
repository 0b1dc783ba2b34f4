#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "conslaw/hierarchy.hpp"
#include "properties.hpp"

using namespace conslaw;

namespace {

Expr P(const std::string& s) { return parse(s, table_scope()); }
ConservedVector CV(const std::string& f, const std::string& g) { return {P(f), P(g), ""}; }

// Collects failed checks for one criterion.
struct Ledger {
  std::vector<std::string> failures;
  int checks = 0;
  void check(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
};

const Table1Row& row(const std::vector<Table1Row>& t, const std::string& label) {
  for (const auto& r : t)
    if (r.label == label) return r;
  throw ExprError("no row " + label);
}

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string table_rows(Ledger& l) {
  const auto t = table1();
  const std::vector<std::string> labels{"1", "1.1", "1.2", "1.3", "1.4", "1.5", "1.6",
                                        "2", "2.1", "3", "3.1", "4", "4.1"};
  l.check(t.size() == labels.size(), "row count " + std::to_string(t.size()));
  for (const auto& label : labels) {
    const auto& r = row(t, label);
    const auto v = verify(r.system, r.cv);
    l.check(v.holds && v.residual.is_zero(), "row " + label + " residual " + v.residual.str());
  }
  l.check(has(row(t, "1.3").constraints, "Int[B] = u*Int[A]"), "1.3 footnote relation");
  for (const char* label : {"1.6", "4"}) l.check(has(row(t, label).constraints, "alpha_t + alpha_xx = 0"), label);
  l.check(has(row(t, "4.1").constraints, "beta_t + beta_xx = 0"), "4.1 beta constraint");
  for (const char* label : {"1.4", "1.5"}) l.check(has(row(t, label).constraints, "sigma_t + sigma_vv = 0"), label);
  // the kernel constraints are what make the rows hold
  Scope free = table_scope();
  free.kernels["phi"] = KernelDecl{{"t", "x"}, {}};
  const ConservedVector unconstrained{parse("phi(t,x)*u", free), parse("phi_x(t,x)*u - phi(t,x)*u_x", free), ""};
  l.check(!verify(row(t, "4").system, unconstrained).holds, "unconstrained kernel also conserved");
  return std::to_string(t.size()) + " rows, residual 0";
}

std::string classification(Ledger& l) {
  struct Expected {
    DceEquation eq;
    std::vector<ConservedVector> basis;
    std::optional<ConservedVector> family;
  };
  const std::vector<Expected> cases{
      {DceEquation::opaque(), {CV("u", "-A(u)*u_x - Int[B]")}, std::nullopt},
      {DceEquation::opaque("B=0"), {CV("u", "-A(u)*u_x"), CV("x*u", "Int[A] - x*A(u)*u_x")}, std::nullopt},
      {DceEquation::opaque("B=A"),
       {CV("u", "-A(u)*u_x - Int[A]"), CV("exp(x)*u", "-exp(x)*A(u)*u_x")},
       CV("(exp(x) + eps)*u", "-(exp(x) + eps)*A(u)*u_x - eps*Int[A]")},
      {DceEquation::concrete(1, 0), {CV("alpha(t,x)*u", "alpha_x(t,x)*u - alpha(t,x)*u_x")},
       CV("alpha(t,x)*u", "alpha_x(t,x)*u - alpha(t,x)*u_x")},
  };
  std::ostringstream os;
  for (const auto& c : cases) {
    const auto cl = classify_dce(c.eq);
    const std::string tag = c.eq.relation;
    l.check(cl.basis.size() == c.basis.size(), tag + " basis size");
    for (std::size_t i = 0; i < std::min(cl.basis.size(), c.basis.size()); ++i)
      l.check(cl.basis[i].F == c.basis[i].F && cl.basis[i].G == c.basis[i].G, tag + " basis " + cl.basis[i].F.str());
    l.check(cl.family.has_value() == c.family.has_value(), tag + " family presence");
    if (cl.family && c.family)
      l.check(cl.family->F == c.family->F && cl.family->G == c.family->G, tag + " family " + cl.family->F.str());

    // nothing beyond the classification at the ansatz order of the proof
    const auto found = find_conservation_laws(c.eq.system(), Ansatz::minimal_order());
    if (c.eq.relation == "concrete") {
      l.check(found.pieces.size() == 1 && found.pieces[0].parameters.size() == 1, "heat pieces");
      if (!found.pieces.empty() && !found.pieces[0].parameters.empty()) {
        const auto& p = found.pieces[0];
        const std::string k = p.parameters[0];
        const ConservedVector renamed{rename_function(p.cv.F, k, "alpha"), rename_function(p.cv.G, k, "alpha"), ""};
        l.check(are_equivalent(c.eq.system(), renamed, *c.family), "heat piece " + p.cv.F.str());
      }
      os << "heat 1 series";
      continue;
    }
    std::vector<ConservedVector> all = c.basis;
    for (const auto& p : found.pieces) all.push_back(p.cv);
    const int rank = linear_dependence(c.eq.system(), all).rank;
    l.check(rank == static_cast<int>(c.basis.size()), tag + " rank " + std::to_string(rank));
    os << tag << " " << c.basis.size() << (c.family ? " + eps family" : "") << ", ";
  }
  return os.str();
}

std::string collapse(Ledger& l) {
  std::ostringstream os;
  for (const char* k : {"B=0", "B=A", "heat"}) {
    const auto c = std::string(k) == "heat"
                       ? second_level_collapse(k, {{P("1"), P("x")}, {P("x"), P("x^2 - 2*t")}})
                       : second_level_collapse(k);
    l.check(c.verified, std::string(k) + " not verified");
    for (const auto& w : c.witnesses) {
      l.check(w.matches, w.law + " does not match w = " + w.w.str());
      l.check(w.trivial, w.law + " not trivial");
      l.check((w.H - w.w).variables().empty(), w.law + " witness " + w.H.str() + " vs " + w.w.str());
      os << w.law << " ";
    }
  }
  return os.str() + "trivial with matching witnesses";
}

std::string characteristics(Ledger& l) {
  struct Case {
    std::string name;
    DceEquation eq;
    ConservedVector cv;
    std::string lambda;
  };
  const std::vector<Case> cases{
      {"Case 1", DceEquation::opaque(), CV("u", "-A(u)*u_x - Int[B]"), "1"},
      {"Case 2", DceEquation::opaque("B=0"), CV("x*u", "Int[A] - x*A(u)*u_x"), "x"},
      {"Case 3", DceEquation::opaque("B=A"), CV("(exp(x) + eps)*u", "-(exp(x) + eps)*A(u)*u_x - eps*Int[A]"),
       "exp(x) + eps"},
      {"Case 4", DceEquation::concrete(1, 0), CV("alpha(t,x)*u", "alpha_x(t,x)*u - alpha(t,x)*u_x"), "alpha(t,x)"},
  };
  for (const auto& c : cases) {
    const Expr lambda = characteristic(c.eq.system(), c.cv);
    l.check(lambda == P(c.lambda), c.name + " lambda = " + lambda.str());
    const auto adj = adjoint_symmetry_check(lambda, c.eq.system());
    l.check(adj.holds && adj.residual.is_zero(), c.name + " adjoint residual " + adj.residual.str());
  }
  return "1, x, exp(x) + eps, alpha pass the adjoint condition";
}

std::string transformations(Ledger& l) {
  const auto t = table1();
  const auto heat = DceEquation::concrete(1, 0);
  const EvolutionSystem heat_ps = heat.system().with_potential("v", heat.case1());

  // hodograph: u^-2 diffusion potential system onto the heat potential system
  const auto u2 = DceEquation::concrete(P("u^-2"), 0);
  const auto ps = build_potential_system(u2.system(), {u2.case1()}, {"v"});
  PointTransformation hod;
  hod.x = P("v");
  hod.u = P("u^-1");
  hod.potentials["v"] = P("x");
  hod.inverse = {{independent("x"), P("v")}, {jet("u"), P("u^-1")}, {jet("v"), P("x")}};
  const auto h = apply_point_transformation(ps, hod);
  l.check(same_system(h.system.system, heat_ps), "hodograph image " + h.system.system.rhs().str());
  l.check(verify(h.system.system, h.transport(row(t, "1.4").cv)).holds, "hodograph transport of 1.4");

  // Burgers potential system onto the heat potential system
  const auto bur = DceEquation::concrete(1, P("2*u"));
  const auto pb = build_potential_system(bur.system(), {bur.case1()}, {"v"});
  PointTransformation bh;
  bh.x = x_var();
  bh.u = P("u*exp(v)");
  bh.potentials["v"] = P("exp(v)");
  bh.inverse = {{independent("x"), x_var()}, {jet("u"), P("u/v")}};
  for (AtomId a : P("exp(v)").atoms()) bh.inverse[a] = P("v");
  const auto b = apply_point_transformation(pb, bh);
  l.check(same_system(b.system.system, heat_ps), "Burgers image");
  const auto m16 = b.transport(row(t, "1.6").cv);
  l.check(m16.F == P("alpha(t,x)*v") && verify(b.system.system, m16).holds, "1.6 image " + m16.F.str());

  // u^(-4/3) symmetry
  const auto sys = u43_equation();
  const auto c1 = CV("u", "-pow(u,-4/3)*u_x");
  const auto c2 = CV("x*u", "-3*pow(u,-1/3) - x*pow(u,-4/3)*u_x");
  const auto m1 = lie_symmetry_map_u43(c1);
  const auto m2 = lie_symmetry_map_u43(c2);
  l.check(verify(sys, m1).holds && are_equivalent(sys, m1, c1 - c2), "u^-4/3 image of Case 1");
  l.check(linear_dependence(sys, {m1, c1, c2}).rank == 2 && !are_equivalent(sys, m1, c1),
          "u^-4/3 image of Case 1 carries Case 2");
  l.check(verify(sys, m2).holds && are_equivalent(sys, m2, c1), "u^-4/3 image of Case 2");

  // x-translation on Case 2 adds a multiple of Case 1
  const auto b0 = DceEquation::opaque("B=0");
  const ConservedVector case2 = row(t, "2").cv;
  Scope sa = table_scope();
  sa.constants.insert("a");
  const Expr a = parse("a", sa);
  EquivTransformation tr;
  tr.e2 = -a;
  const auto moved = act_on_conserved_vector(tr, case2);
  const auto expected = case2 + a * b0.case1();
  l.check(moved.F == expected.F && moved.G == expected.G, "translated Case 2 " + moved.F.str());
  l.check(verify(act_on_equation(tr, b0).system(), moved).holds, "translated Case 2 conserved");
  return "hodograph, Burgers-heat, u^-4/3 (Case 1 -> Case 1 - Case 2, Case 2 -> Case 1), x-translation";
}

std::string properties(Ledger& l) {
  const auto seed = props::seed_from_env();
  std::ostringstream os;
  auto take = [&](const std::string& name, const props::Outcome& o) {
    l.check(o.ok(), name + ": " + o.str());
    os << name << " " << o.checks << ", ";
  };
  take("euler", props::euler_annihilates_divergences(200, seed));
  take("commute", props::total_derivatives_commute(200, seed));
  take("wronskian", props::wronskian_matches_rank(seed));
  take("propagation", props::proportional_propagation(40, seed));
  take("dependence", props::dependence_matches_oracle(seed));
  std::string s = os.str();
  return s.substr(0, s.size() - 2) + " checks, seed " + std::to_string(seed);
}

std::string hierarchy(Ledger& l) {
  struct Case {
    std::string name;
    DceEquation eq;
    std::string summary;
    bool linearizable;
  };
  const std::vector<Case> cases{
      {"general", DceEquation::opaque(), "1 local law, no potential laws", false},
      {"B=0", DceEquation::opaque("B=0"), "2 local laws, no potential laws", false},
      {"B=A", DceEquation::opaque("B=A"), "2 local laws, no potential laws", false},
      {"B=IntA+uA", DceEquation::opaque("B=IntA+uA"), "1 local law + 1 simplest potential law", false},
      {"heat", DceEquation::concrete(1, 0), "infinite local series (alpha-parameterized), no potential laws", true},
      {"Burgers", DceEquation::concrete(1, P("2*u")),
       "1 local law + infinite simplest potential series (alpha-parameterized)", true},
      {"u^-2 diffusion", DceEquation::concrete(P("u^-2"), 0),
       "2 local laws + infinite simplest potential series (sigma-parameterized)", true},
      {"u^-2 convection", DceEquation::concrete(P("u^-2"), P("u^-2")),
       "2 local laws + infinite simplest potential series (sigma-parameterized)", true},
  };
  for (const auto& c : cases) {
    const auto r = iterate(c.eq);
    l.check(r.summary == c.summary, c.name + ": " + r.summary);
    if (!c.linearizable)
      l.check(r.termination == "all new laws dependent" && r.depth <= 2,
              c.name + " terminates with " + r.termination + " at level " + std::to_string(r.depth));
  }
  return std::to_string(cases.size()) + " cases verbatim";
}

}  // namespace

int main() {
  struct Criterion {
    const char* title;
    std::function<std::string(Ledger&)> run;
  };
  const std::vector<Criterion> criteria{
      {"Table 1 corpus verifies on its systems", table_rows},
      {"classification of the four relation classes", classification},
      {"second-level triviality witnesses", collapse},
      {"characteristics and the adjoint condition", characteristics},
      {"transformation suite", transformations},
      {"oracle-backed property suites", properties},
      {"hierarchy regression", hierarchy},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Ledger l;
    std::string detail;
    const auto start = std::chrono::steady_clock::now();
    try {
      detail = criteria[i].run(l);
    } catch (const std::exception& e) {
      l.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = l.failures.empty();
    if (!ok) ++failed;
    std::printf("%s [%zu] %s: %s (%d checks, %.2fs)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].title,
                ok ? detail.c_str() : l.failures.front().c_str(), l.checks, secs);
    for (std::size_t k = 1; k < l.failures.size(); ++k) std::printf("       %s\n", l.failures[k].c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
