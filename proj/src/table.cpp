#include "conslaw/hierarchy.hpp"

namespace conslaw {

Scope table_scope() {
  Scope s = Scope::standard();
  s.constants.insert("eps");
  s.add_potential("v");
  s.add_potential("w");
  return s;
}

namespace {

struct RowDef {
  const char* label;
  const char* A;
  const char* B;
  const char* relation;  // opaque relation, or "" for concrete A, B
  const char* F;
  const char* G;
  const char* parent;  // label of the local row whose potential the law uses
};

const std::vector<RowDef>& row_defs() {
  static const std::vector<RowDef> rows = {
      {"1", "any", "any", "none", "u", "-A(u)*u_x - Int[B]", ""},
      {"1.1", "any", "0", "B=0", "v", "-Int[A]", "1"},
      {"1.2", "any", "A", "B=A", "exp(x)*v", "-exp(x)*Int[A]", "1"},
      {"1.3", "any", "Int[A] + u*A", "B=IntA+uA", "exp(v)", "-exp(v)*Int[A]", "1"},
      {"1.4", "u^-2", "0", "", "sigma(t,v)", "sigma_v(t,v)*u^-1", "1"},
      {"1.5", "u^-2", "u^-2", "", "sigma(t,v)*exp(x)", "sigma_v(t,v)*u^-1*exp(x)", "1"},
      {"1.6", "1", "2*u", "", "alpha(t,x)*exp(v)", "alpha_x(t,x)*exp(v) - alpha(t,x)*u*exp(v)", "1"},
      {"2", "any", "0", "B=0", "x*u", "Int[A] - x*A(u)*u_x", ""},
      {"2.1", "any", "0", "B=0", "x^-2*v", "-x^-1*Int[A]", "2"},
      {"3", "any", "A", "B=A", "(exp(x) + eps)*u", "-(exp(x) + eps)*A(u)*u_x - eps*Int[A]", ""},
      {"3.1", "any", "A", "B=A", "exp(x)*(exp(x) + eps)^-2*v", "-exp(x)*(exp(x) + eps)^-1*Int[A]", "3"},
      {"4", "1", "0", "", "alpha(t,x)*u", "alpha_x(t,x)*u - alpha(t,x)*u_x", ""},
      {"4.1", "1", "0", "", "", "", "4"},
  };
  return rows;
}

DceEquation equation_of(const RowDef& r, const Scope& sc) {
  if (*r.relation) return DceEquation::opaque(r.relation);
  return DceEquation::concrete(parse(r.A, sc), parse(r.B, sc));
}

// The local law of row `label` written for the equation of another row.
ConservedVector local_law(const std::string& label, const DceEquation& eq, const Scope& sc) {
  if (label == "1") return eq.case1();
  for (const auto& r : row_defs())
    if (r.label == label) return ConservedVector{parse(r.F, sc), parse(r.G, sc), label};
  throw ExprError("no local row " + label);
}

std::vector<std::string> constraints_of(const ConservedVector& cv) {
  std::vector<std::string> out;
  for (const char* k : {"alpha", "beta", "sigma"}) {
    for (const Expr* e : {&cv.F, &cv.G})
      for (AtomId a : e->atoms())
        if (atom(a).kind == AtomKind::Function && atom(a).name == k) {
          const std::string y = k == std::string("sigma") ? "v" : "x";
          const std::string c = std::string(k) + "_t + " + k + "_" + y + y + " = 0";
          if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
        }
  }
  return out;
}

}  // namespace

std::vector<Table1Row> table1() {
  const Scope sc = table_scope();
  std::vector<Table1Row> out;
  for (const auto& r : row_defs()) {
    Table1Row row;
    row.label = r.label;
    row.A = r.A;
    row.B = r.B;
    row.equation = equation_of(r, sc);
    const EvolutionSystem base = row.equation.system();
    if (!*r.parent) {
      row.system = base;
      row.cv = local_law(r.label, row.equation, sc);
      row.potential_system = {"v_x = " + base.reduce(row.cv.F).str(), "v_t = " + base.reduce(-row.cv.G).str()};
    } else {
      const ConservedVector parent = local_law(r.parent, row.equation, sc);
      row.system = base.with_potential("v", parent);
      if (row.label == "4.1") {
        const Expr alpha = parse("alpha(t,x)", sc);
        const Expr beta = parse("beta(t,x)", sc);
        const Expr k = beta / alpha;
        const AtomId t = independent("t");
        const AtomId x = independent("x");
        const Expr v = var(jet("v"));
        row.cv = ConservedVector{partial(k, x) * v, -alpha * partial(k, x) * var(jet("u")) - partial(k, t) * v, "4.1"};
      } else {
        row.cv = ConservedVector{parse(r.F, sc), parse(r.G, sc), r.label};
      }
      row.potential_system = {"v_x = " + base.reduce(parent.F).str(), "w_x = " + row.cv.F.str(),
                              "w_t = " + (-row.cv.G).str()};
    }
    row.constraints = constraints_of(row.cv);
    if (row.label == "1.3") row.constraints.push_back("Int[B] = u*Int[A]");
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

Expr rename_potential(const Expr& e, const std::string& from, const std::string& to) {
  std::map<AtomId, Expr> b;
  for (AtomId v : e.variables())
    if (atom(v).kind == AtomKind::Jet && atom(v).name == from) b.emplace(v, var(jet(to, atom(v).dx, atom(v).dt)));
  return b.empty() ? e : substitute(e, b);
}

ConservedVector rename_potential(const ConservedVector& cv, const std::string& from, const std::string& to) {
  return ConservedVector{rename_potential(cv.F, from, to), rename_potential(cv.G, from, to), cv.label};
}

const Table1Row& row_of(const std::vector<Table1Row>& t, const std::string& label) {
  for (const auto& r : t)
    if (r.label == label) return r;
  throw ExprError("no row " + label);
}

CollapseWitness check(const EvolutionSystem& united, const std::string& name, const ConservedVector& cv,
                      const Expr& w) {
  CollapseWitness c;
  c.law = name;
  c.cv = cv;
  c.w = w;
  const Expr rf = united.reduce(cv.F - total_derivative(w, Axis::X, united));
  const Expr rg = united.reduce(cv.G + total_derivative(w, Axis::T, united));
  c.matches = rf.is_zero() && rg.is_zero();
  const auto tr = is_trivial(united, cv);
  c.trivial = tr.trivial;
  if (tr.witness) c.H = tr.witness->H;
  return c;
}

}  // namespace

Collapse second_level_collapse(const std::string& kase, const std::vector<std::pair<Expr, Expr>>& heat_instances) {
  const auto t = table1();
  const Scope sc = table_scope();
  const Expr x = x_var();
  const Expr v1 = var(jet("v1"));
  Collapse out;
  out.kase = kase;
  if (kase == "B=0") {
    const auto eq = DceEquation::opaque("B=0");
    out.united = eq.system().with_potential("v1", eq.case1()).with_potential("v2", row_of(t, "2").cv);
    const Expr v2 = var(jet("v2"));
    out.witnesses.push_back(check(out.united, "F11", rename_potential(row_of(t, "1.1").cv, "v", "v1"), x * v1 - v2));
    out.witnesses.push_back(check(out.united, "F21", rename_potential(row_of(t, "2.1").cv, "v", "v2"), v1 - v2 / x));
  } else if (kase == "B=A") {
    const auto eq = DceEquation::opaque("B=A");
    out.united = eq.system().with_potential("v1", eq.case1()).with_potential("v3", row_of(t, "3").cv);
    const Expr v3 = var(jet("v3"));
    const Expr m = exp(x) + parse("eps", sc);
    out.witnesses.push_back(check(out.united, "F12", rename_potential(row_of(t, "1.2").cv, "v", "v1"), m * v1 - v3));
    out.witnesses.push_back(check(out.united, "F31", rename_potential(row_of(t, "3.1").cv, "v", "v3"), v1 - v3 / m));
  } else if (kase == "heat") {
    const Expr alpha = parse("alpha(t,x)", sc);
    const Expr beta = parse("beta(t,x)", sc);
    std::vector<std::pair<Expr, Expr>> pairs{{alpha, beta}};
    for (const auto& p : heat_instances) pairs.push_back(p);
    const auto heat = DceEquation::concrete(1, 0);
    const ConservedVector law4 = row_of(t, "4").cv;
    const ConservedVector law41 = row_of(t, "4.1").cv;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [a, b] = pairs[i];
      auto inst = [&](const Expr& e) {
        return substitute_kernel(substitute_kernel(e, "alpha", a), "beta", b);
      };
      const ConservedVector la{inst(law4.F), inst(law4.G), "alpha"};
      const ConservedVector lb{inst(rename_function(law4.F, "alpha", "beta")),
                               inst(rename_function(law4.G, "alpha", "beta")), "beta"};
      const EvolutionSystem united = heat.system().with_potential("v1", la).with_potential("v2", lb);
      const ConservedVector cv = rename_potential(ConservedVector{inst(law41.F), inst(law41.G), "4.1"}, "v", "v1");
      const std::string name = i == 0 ? "Falphabeta" : "Falphabeta[" + a.str() + ", " + b.str() + "]";
      out.witnesses.push_back(check(united, name, cv, b / a * v1 - var(jet("v2"))));
      if (i == 0) out.united = united;
    }
  } else {
    throw ExprError("unknown collapse case '" + kase + "'");
  }
  out.verified = std::all_of(out.witnesses.begin(), out.witnesses.end(), [](const CollapseWitness& c) {
    return c.matches && c.trivial;
  });
  return out;
}

}  // namespace conslaw
