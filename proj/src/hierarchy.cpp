#include "conslaw/hierarchy.hpp"

#include <algorithm>
#include <functional>

#include "conslaw/parse.hpp"

namespace conslaw {

namespace {

std::vector<AtomId> potential_atoms(const EvolutionSystem& sys) {
  std::vector<AtomId> out;
  for (const auto& p : sys.potentials()) out.push_back(jet(p.name));
  return out;
}

// Rebuild sys keeping only the potentials accepted by `keep`.
EvolutionSystem restrict_potentials(const EvolutionSystem& sys, const std::function<bool(const Potential&)>& keep) {
  EvolutionSystem out = sys.without_potentials();
  for (const auto& p : sys.potentials())
    if (keep(p)) out = out.with_potential(p.name, p.source, p.level);
  return out;
}

int level_of(const EvolutionSystem& sys, const ConservedVector& cv) {
  int level = 1;
  std::set<AtomId> vs = cv.F.variables();
  for (AtomId v : cv.G.variables()) vs.insert(v);
  for (const auto& p : sys.potentials())
    for (AtomId v : vs)
      if (atom(v).kind == AtomKind::Jet && atom(v).name == p.name) level = std::max(level, p.level + 1);
  return level;
}

// Total degree in the given atoms; nullopt unless e is a polynomial in them
// with coefficients free of them.
std::optional<int> degree_in(const Expr& e, const std::vector<AtomId>& atoms) {
  const std::set<AtomId> as(atoms.begin(), atoms.end());
  for (AtomId a : e.atoms()) {
    if (as.count(a)) continue;
    for (AtomId v : atom(a).vars)
      if (as.count(v)) return std::nullopt;
  }
  for (const auto& f : e.den())
    for (const auto& [m, c] : f.poly.terms())
      for (const auto& [a, k] : m.factors())
        if (as.count(a)) return std::nullopt;
  int d = 0;
  for (const auto& [m, c] : e.num().terms()) {
    int md = 0;
    for (const auto& [a, k] : m.factors()) {
      if (!as.count(a)) continue;
      if (k < 0) return std::nullopt;
      md += k;
    }
    d = std::max(d, md);
  }
  return d;
}

// Monomials of total degree <= d in `vars`.
std::vector<Expr> monomials(const std::vector<AtomId>& vars, int d) {
  std::vector<Expr> out{Expr(1)};
  for (AtomId v : vars) {
    std::vector<Expr> next;
    for (const auto& m : out) {
      Expr p = m;
      for (int k = 0; k <= d; ++k) {
        next.push_back(p);
        p = p * var(v);
      }
    }
    out = std::move(next);
  }
  std::vector<Expr> kept;
  for (const auto& m : out)
    if (degree_in(m, vars).value_or(d + 1) <= d) kept.push_back(m);
  return kept;
}

std::optional<AtomId> function_atom(const Expr& e, const std::string& name) {
  for (AtomId a : e.atoms())
    if (atom(a).kind == AtomKind::Function && atom(a).name == name) return a;
  return std::nullopt;
}

Expr zero_free(const Expr& e, const SolveResult& r) {
  std::map<AtomId, Expr> b;
  for (AtomId c : r.constants) b.emplace(c, Expr{});
  for (AtomId a : e.atoms())
    if (atom(a).kind == AtomKind::Function &&
        std::find(r.parameters.begin(), r.parameters.end(), atom(a).name) != r.parameters.end())
      b.emplace(a, Expr{});
  return b.empty() ? e : replace_atoms(e, b);
}

}  // namespace

Expr substitute_kernel(const Expr& e, const std::string& name, const Expr& value) {
  std::map<AtomId, Expr> b;
  for (AtomId a : e.atoms()) {
    const Atom& at = atom(a);
    if (at.kind != AtomKind::Function || at.name != name) continue;
    Expr d = value;
    for (std::size_t i = 0; i < at.args.size(); ++i) {
      for (int k = 0; k < at.orders[i]; ++k) d = partial(d, at.args[i]);
      for (int k = 0; k > at.orders[i]; --k) {
        auto r = integrate(d, at.args[i]);
        if (!r) throw ExprError("cannot integrate " + d.str());
        d = *r;
      }
    }
    b.emplace(a, d);
  }
  return b.empty() ? e : replace_atoms(e, b);
}

std::vector<std::string> PotentialSystem::relations() const {
  std::vector<std::string> out;
  for (const auto& p : system.potentials()) {
    out.push_back(p.name + "_x = " + p.x_rule.str());
    out.push_back(p.name + "_t = " + p.t_rule.str());
  }
  return out;
}

PotentialSystem build_potential_system(const EvolutionSystem& sys, const std::vector<ConservedVector>& cvs,
                                       std::vector<std::string> names) {
  if (cvs.empty()) throw ExprError("no conserved vectors for the potential system");
  if (!names.empty() && names.size() != cvs.size()) throw ExprError("one potential name per conserved vector");
  for (const auto& cv : cvs) {
    auto v = verify(sys, cv);
    if (!v.holds) throw MathError("conserved vector fails verification, residual " + v.residual.str());
  }
  const auto dep = linear_dependence(sys, cvs);
  if (dep.rank < static_cast<int>(cvs.size())) {
    std::string rel;
    for (const auto& c : dep.relations.front()) rel += (rel.empty() ? "" : ", ") + c.str();
    throw MathError("conserved vectors are linearly dependent, relation (" + rel + ")");
  }
  const std::size_t n0 = sys.potentials().size();
  for (std::size_t i = 0; i < cvs.size() && names.size() < cvs.size(); ++i)
    names.push_back("v" + std::to_string(n0 + i + 1));
  PotentialSystem ps{sys, names};
  for (std::size_t i = 0; i < cvs.size(); ++i)
    ps.system = ps.system.with_potential(names[i], cvs[i], level_of(sys, cvs[i]));
  return ps;
}

PotentialDependence potentials_dependent(const PotentialSystem& ps) {
  const std::set<std::string> added(ps.added.begin(), ps.added.end());
  const EvolutionSystem base = restrict_potentials(ps.system, [&](const Potential& p) { return !added.count(p.name); });
  std::vector<ConservedVector> gens;
  for (const auto& n : ps.added) gens.push_back(ps.system.potential(n)->source);
  PotentialDependence out;
  const auto dep = linear_dependence(base, gens);
  if (dep.rank == static_cast<int>(gens.size())) return out;
  out.dependent = true;
  out.relation = dep.relations.front();
  ConservedVector combo{Expr{}, Expr{}, ""};
  Expr w;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    combo = combo + out.relation[i] * gens[i];
    w += out.relation[i] * var(jet(ps.added[i]));
  }
  const auto triv = is_trivial(base, combo);
  if (!triv.trivial || !triv.witness) throw ExprError("dependent potentials without a triviality witness");
  out.witness = w - triv.witness->H;
  return out;
}

Ansatz potential_ansatz(const EvolutionSystem& sys) {
  Ansatz a;
  a.F_args = {independent("t"), independent("x")};
  for (AtomId p : potential_atoms(sys)) a.F_args.push_back(p);
  a.G_args = a.F_args;
  a.G_args.insert(a.G_args.begin() + 2, jet("u"));
  return a;
}

Membership span_membership(const EvolutionSystem& sys, const ConservedVector& cv,
                           const std::vector<ConservedVector>& laws, const std::vector<LawPiece>& families) {
  Membership out;
  const auto pots = potential_atoms(sys);
  const Expr F = sys.reduce(cv.F);
  const Expr G = sys.reduce(cv.G);
  const auto dF = degree_in(F, pots);
  const auto dG = degree_in(G, pots);
  if (!dF || !dG) return out;
  const int d = std::max(*dF, *dG);
  const std::vector<AtomId> tx{independent("t"), independent("x")};

  std::vector<Expr> unknowns;
  std::vector<Expr> eqs;
  int counter = 0;
  auto fresh = [&](const std::vector<AtomId>& args) {
    Expr f = unknown("_m" + std::to_string(++counter), args);
    unknowns.push_back(f);
    return f;
  };

  Expr H;
  for (const auto& m : monomials(pots, d)) H += fresh(tx) * m;
  Expr dF_rest = F - sys.reduce(total_derivative(H, Axis::X, sys));
  Expr dG_rest = G + sys.reduce(total_derivative(H, Axis::T, sys));
  std::vector<Expr> coeffs;
  for (const auto& l : laws) {
    const Expr c = fresh({});
    coeffs.push_back(c);
    dF_rest -= c * sys.reduce(l.F);
    dG_rest -= c * sys.reduce(l.G);
  }
  std::vector<Expr> members;
  for (const auto& fam : families) {
    ConservedVector f = fam.cv;
    for (const auto& p : fam.parameters) {
      auto a = function_atom(f.F, p);
      if (!a) a = function_atom(f.G, p);
      if (!a) continue;
      const Atom pa = atom(*a);
      std::vector<AtomId> pot_args;
      std::vector<AtomId> other;
      for (AtomId arg : pa.args)
        (std::find(pots.begin(), pots.end(), arg) != pots.end() ? pot_args : other).push_back(arg);
      Expr value;
      if (pot_args.empty()) {
        value = fresh(pa.args);
      } else {
        for (const auto& m : monomials(pot_args, d)) value += fresh(other) * m;
      }
      if (pa.traits.heat_time >= 0) {
        const AtomId t = pa.args[static_cast<std::size_t>(pa.traits.heat_time)];
        const AtomId y = pa.args[static_cast<std::size_t>(pa.traits.heat_space)];
        eqs.push_back(partial(value, t) + partial(value, y, 2));
      }
      members.push_back(value);
      f.F = substitute_kernel(f.F, p, value);
      f.G = substitute_kernel(f.G, p, value);
    }
    dF_rest -= sys.reduce(f.F);
    dG_rest -= sys.reduce(f.G);
  }
  eqs.push_back(sys.reduce(dF_rest));
  eqs.push_back(sys.reduce(dG_rest));
  std::vector<Expr> split;
  for (const auto& e : eqs)
    for (auto& p : split_equation(e)) split.push_back(std::move(p));
  SolveOptions o;
  o.constant_prefix = "_mk";
  o.parameter_prefix = "_mq";
  const auto r = solve_linear(split, unknowns, o);
  if (!r.complete()) return out;
  auto value_of = [&](const Expr& e) {
    Expr v = e;
    for (const auto& u : unknowns) {
      const std::string n = atom(u.num().leading().first.factors()[0].first).name;
      v = apply_value(v, n, r.values.at(n));
    }
    return zero_free(v, r);
  };
  out.member = true;
  out.H = value_of(H);
  for (const auto& c : coeffs) out.coefficients.push_back(value_of(c));
  for (const auto& m : members) out.parameters.push_back(value_of(m));
  return out;
}

SystemOnK verify_system_on_K(const Expr& K, const std::vector<Expr>& alphas, const std::vector<std::string>& potentials) {
  if (alphas.size() != potentials.size()) throw ExprError("one alpha per potential");
  const AtomId t = independent("t");
  const AtomId x = independent("x");
  if (!alphas.empty()) {
    if (wronskian(alphas, x).is_zero()) throw ExprError("alphas are linearly dependent");
  }
  SystemOnK out;
  out.heat_residual = partial(K, t) + partial(K, x, 2);
  for (std::size_t s = 0; s < alphas.size(); ++s) {
    const AtomId v = jet(potentials[s]);
    out.coupling_residual += alphas[s] * partial(partial(K, x), v) - partial(alphas[s], x) * partial(K, v);
  }
  out.holds = out.heat_residual.is_zero() && out.coupling_residual.is_zero();
  if (!out.holds) return out;

  std::vector<AtomId> vs;
  for (const auto& p : potentials) vs.push_back(jet(p));
  const auto d = degree_in(K, vs);
  if (!d) return out;
  std::map<AtomId, Expr> at_zero;
  for (AtomId v : vs) at_zero.emplace(v, Expr{});
  const Expr K0 = substitute(K, at_zero);

  // K - K0 = alpha^s H1_{v^s} with H1 a polynomial with constant coefficients
  std::vector<Expr> unknowns;
  int counter = 0;
  Expr H1;
  for (const auto& m : monomials(vs, *d + 1)) {
    if (degree_in(m, vs).value_or(0) < 2) continue;
    Expr c = unknown("_kc" + std::to_string(++counter), {});
    unknowns.push_back(c);
    H1 += c * m;
  }
  Expr lhs = K0 - K;
  for (std::size_t s = 0; s < vs.size(); ++s) lhs += alphas[s] * partial(H1, vs[s]);
  SolveOptions o;
  o.constant_prefix = "_kk";
  auto r = solve_linear(split_equation(lhs), unknowns, o);
  if (!r.complete()) return out;
  Expr H;
  for (const auto& u : unknowns) {
    const std::string n = atom(u.num().leading().first.factors()[0].first).name;
    H1 = apply_value(H1, n, r.values.at(n));
  }
  H = zero_free(H1, r);

  // K0 in the constant span of the alphas goes into H as well
  std::vector<Expr> cs;
  Expr rest = K0;
  for (std::size_t s = 0; s < vs.size(); ++s) {
    cs.push_back(unknown("_kl" + std::to_string(s), {}));
    rest -= cs.back() * alphas[s];
  }
  Expr beta0 = K0;
  if (!cs.empty()) {
    auto r0 = solve_linear(split_equation(rest), cs, o);
    if (r0.complete()) {
      for (std::size_t s = 0; s < vs.size(); ++s)
        H += zero_free(r0.values.at(atom(cs[s].num().leading().first.factors()[0].first).name), r0) * var(vs[s]);
      beta0 = Expr{};
    }
  }
  out.decomposition = std::make_pair(H, beta0);
  return out;
}

namespace {

std::string join(const std::vector<Expr>& es) {
  std::string out;
  for (const auto& e : es) out += (out.empty() ? "" : ", ") + e.str();
  return out;
}

// alpha(t, x) for families over (t, x), sigma(t, v) for families over a potential.
LawPiece rename_parameters(LawPiece p, int& alphas, int& sigmas) {
  std::vector<std::string> names;
  for (const auto& n : p.parameters) {
    auto a = function_atom(p.cv.F, n);
    if (!a) a = function_atom(p.cv.G, n);
    bool over_tx = a && atom(*a).args.size() == 2 && atom(atom(*a).args[1]).kind == AtomKind::Independent;
    std::string to = over_tx ? (alphas++ ? "alpha" + std::to_string(alphas) : "alpha")
                             : (sigmas++ ? "sigma" + std::to_string(sigmas) : "sigma");
    p.cv.F = rename_function(p.cv.F, n, to);
    p.cv.G = rename_function(p.cv.G, n, to);
    names.push_back(to);
  }
  p.parameters = names;
  return p;
}

struct Judge {
  std::vector<ConservedVector> known;  // local basis and accepted laws
  std::vector<LawPiece> families;
  int alphas = 0;
  int sigmas = 0;
  std::vector<std::pair<EvolutionSystem, ConservedVector>> fresh;  // new finite laws with their systems
};

void solve_node(HierarchyNode& node, const EvolutionSystem& judge_on, Judge& j) {
  LawSearch ls;
  try {
    ls = find_conservation_laws(node.system, potential_ansatz(node.system));
  } catch (const ExprError& e) {
    node.note = std::string("determining system not solved: ") + e.what();
    return;
  }
  for (auto piece : ls.pieces) {
    HierarchyLaw law;
    if (!piece.parameters.empty()) {
      piece = rename_parameters(piece, j.alphas, j.sigmas);
      law.cv = piece.cv;
      law.parameters = piece.parameters;
      law.verdict = "new series";
      j.families.push_back(piece);
    } else {
      law.cv = piece.cv;
      const auto m = span_membership(judge_on, piece.cv, j.known, j.families);
      if (m.member) {
        law.verdict = "dependent";
        law.note = "coefficients (" + join(m.coefficients) + "), H = " + m.H.str();
        if (!m.parameters.empty()) law.note += ", family members (" + join(m.parameters) + ")";
      } else {
        law.verdict = "new";
        j.known.push_back(piece.cv);
        j.fresh.emplace_back(node.system, piece.cv);
      }
    }
    node.laws.push_back(std::move(law));
  }
}

std::string plural(std::size_t n, const std::string& word) {
  return std::to_string(n) + " " + word + (n == 1 ? "" : "s");
}

}  // namespace

HierarchyReport iterate(const DceEquation& input, const IterateOptions& opts) {
  HierarchyReport r;
  const auto canon = canonicalize(input);
  r.tag = canon.tag;
  r.g = canon.g;
  const DceEquation eq = canon.g.is_identity() ? input : act_on_equation(canon.g, input);
  const auto cl = classify_dce(eq);
  r.local = cl.basis;
  const EvolutionSystem sys = eq.system();
  const bool alpha_family =
      cl.family && std::find(cl.parameters.begin(), cl.parameters.end(), "alpha") != cl.parameters.end();

  if (alpha_family) {
    // Potential systems of the local series: v_x = alpha u, v_t = alpha u_x - alpha_x u.
    r.local_family = cl.family;
    const auto a = function_atom(cl.family->F, "alpha");
    const Atom alpha_atom = atom(*a);
    const Expr alpha = var(*a);
    const Expr beta = function("beta", alpha_atom.args, alpha_atom.traits);
    const AtomId t = independent("t");
    const AtomId x = independent("x");
    HierarchyNode node;
    node.level = 1;
    node.label = "v from the alpha-law";
    node.system = sys.with_potential("v", *cl.family);
    const Expr k = beta / alpha;
    const Expr v = var(jet("v"));
    const Expr u = var(jet("u"));
    HierarchyLaw law;
    law.cv = ConservedVector{partial(k, x) * v, -alpha * partial(k, x) * u - partial(k, t) * v, "beta-law on v"};
    law.parameters = {"alpha", "beta"};
    const ConservedVector beta_law{rename_function(cl.family->F, "alpha", "beta"),
                                   rename_function(cl.family->G, "alpha", "beta"), ""};
    const auto holds = verify(node.system, law.cv).holds;
    const auto triv = is_trivial(node.system, law.cv + beta_law);
    if (holds && triv.trivial) {
      law.verdict = "dependent";
      law.note = "equivalent to the local law with alpha -> -beta, H = " + triv.witness->H.str();
    } else {
      law.verdict = holds ? "new" : "invalid";
    }
    node.laws.push_back(law);
    r.nodes.push_back(node);
    r.depth = 1;
    r.termination = law.verdict == "dependent" ? "all new laws dependent" : "level limit";
    r.summary = hierarchy_summary(r);
    return r;
  }

  Judge j;
  j.known = cl.basis;
  const std::size_t n = cl.basis.size();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(n == 1 ? "v" : "v" + std::to_string(i + 1));
  EvolutionSystem united = sys;
  for (std::size_t i = 0; i < n; ++i) united = united.with_potential(names[i], cl.basis[i]);

  for (std::size_t i = 0; i < n; ++i) {
    HierarchyNode node;
    node.level = 1;
    node.label = names[i] + " from " + cl.basis[i].F.str();
    node.system = sys.with_potential(names[i], cl.basis[i]);
    solve_node(node, opts.max_potentials >= 2 ? united : node.system, j);
    r.nodes.push_back(std::move(node));
  }
  r.depth = 1;
  if (!j.families.empty()) {
    r.termination = "parameterized series";
    r.summary = hierarchy_summary(r);
    return r;
  }

  if (n >= 2 && opts.max_potentials >= 2 && (cl.basis[0].F - var(jet("u"))).is_zero()) {
    // {v1, v2} is equivalent to {v1, w} with w = v2 - c v1 a potential of v1's system.
    const AtomId t = independent("t");
    const AtomId x = independent("x");
    const Expr v1 = var(jet(names[0]));
    EvolutionSystem s = sys.with_potential(names[0], cl.basis[0]);
    std::string label = "united " + names[0];
    for (std::size_t i = 1; i < n; ++i) {
      const Expr c = cl.basis[i].F / cl.basis[0].F;
      const ConservedVector src{-partial(c, x) * v1, cl.basis[i].G - c * cl.basis[0].G + partial(c, t) * v1, ""};
      const std::string w = n == 2 ? "w" : "w" + std::to_string(i);
      s = s.with_potential(w, src, 2);
      label += ", " + names[i] + " (as " + w + " = " + names[i] + " - " + (c * v1).str() + ")";
    }
    HierarchyNode node;
    node.level = 1;
    node.label = label;
    node.system = s;
    solve_node(node, s, j);
    r.nodes.push_back(std::move(node));
  }

  auto fresh = std::move(j.fresh);
  j.fresh.clear();
  for (int level = 2; !fresh.empty(); ++level) {
    if (level > opts.max_level) {
      r.termination = "level limit";
      r.summary = hierarchy_summary(r);
      return r;
    }
    r.depth = level;
    int idx = 0;
    for (const auto& [s, cv] : fresh) {
      HierarchyNode node;
      node.level = level;
      const std::string w = fresh.size() == 1 ? "w" : "w" + std::to_string(++idx);
      node.label = w + " from " + cv.F.str();
      node.system = s.with_potential(w, cv, level);
      solve_node(node, node.system, j);
      r.nodes.push_back(std::move(node));
    }
    if (!j.families.empty()) {
      r.termination = "parameterized series";
      r.summary = hierarchy_summary(r);
      return r;
    }
    fresh = std::move(j.fresh);
    j.fresh.clear();
  }
  r.termination = "all new laws dependent";
  r.summary = hierarchy_summary(r);
  return r;
}

std::string hierarchy_summary(const HierarchyReport& r) {
  std::string local;
  if (r.local_family) {
    auto a = function_atom(r.local_family->F, "alpha");
    local = std::string("infinite local series (") + (a ? "alpha" : "eps") + "-parameterized)";
  } else {
    local = plural(r.local.size(), "local law");
  }
  std::size_t simplest = 0;
  std::size_t deeper = 0;
  std::vector<std::string> series;
  for (const auto& node : r.nodes)
    for (const auto& law : node.laws) {
      if (law.verdict == "new") (node.level == 1 ? simplest : deeper)++;
      if (law.verdict == "new series")
        for (const auto& p : law.parameters)
          if (std::find(series.begin(), series.end(), p) == series.end()) series.push_back(p);
    }
  std::vector<std::string> parts;
  if (simplest) parts.push_back(plural(simplest, "simplest potential law"));
  if (deeper) parts.push_back(plural(deeper, "higher potential law"));
  for (const auto& p : series) {
    std::string base = p.substr(0, p.find_first_of("0123456789"));
    parts.push_back("infinite simplest potential series (" + base + "-parameterized)");
  }
  if (parts.empty()) return local + ", no potential laws";
  std::string out = local;
  for (const auto& p : parts) out += " + " + p;
  return out;
}

}  // namespace conslaw
