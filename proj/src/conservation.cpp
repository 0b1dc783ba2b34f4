#include "conslaw/conservation.hpp"

#include <algorithm>
#include <functional>

#include "conslaw/solver.hpp"

namespace conslaw {

VerificationResult verify(const EvolutionSystem& sys, const ConservedVector& cv) {
  Expr r = sys.reduce(sys.dt(sys.reduce(cv.F)) + sys.dx(sys.reduce(cv.G)));
  return {r.is_zero(), r};
}

Expr characteristic(const EvolutionSystem& sys, const ConservedVector& cv) {
  if (!sys.potentials().empty()) throw ExprError("characteristics are defined for single equations only");
  auto v = verify(sys, cv);
  if (!v.holds) throw MathError("not a conservation law: residual " + v.residual.str());
  // For u_t = R, D_t F0 = sum dF0/du_k D_x^k (L + R); integrating by parts
  // leaves the x-Euler operator of the reduced density.
  return euler_operator(sys.reduce(cv.F), sys.dependent());
}

namespace {

int max_x_order(const Expr& e, const std::string& dep) {
  int k = -1;
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    if (a.kind == AtomKind::Jet && a.name == dep && a.dt == 0) k = std::max(k, a.dx);
  }
  return k;
}

std::vector<std::vector<std::pair<std::string, int>>> monomials_up_to(const std::vector<std::string>& names, int d) {
  std::vector<std::vector<std::pair<std::string, int>>> out{{}};
  for (const auto& n : names) {
    std::vector<std::vector<std::pair<std::string, int>>> next;
    for (const auto& m : out) {
      int deg = 0;
      for (const auto& f : m) deg += f.second;
      for (int k = 0; deg + k <= d; ++k) {
        auto mm = m;
        if (k) mm.emplace_back(n, k);
        next.push_back(std::move(mm));
      }
    }
    out = std::move(next);
  }
  return out;
}

// Degree of e as a polynomial in the potentials; -1 if not polynomial.
int potential_degree(const Expr& e, const EvolutionSystem& sys) {
  std::set<AtomId> pots;
  for (const auto& p : sys.potentials()) pots.insert(jet(p.name));
  for (const auto& f : e.den())
    for (const auto& [m, c] : f.poly.terms())
      for (const auto& [a, k] : m.factors())
        for (AtomId v : atom(a).vars)
          if (pots.count(v)) return -1;
  int d = 0;
  for (const auto& [m, c] : e.num().terms()) {
    int md = 0;
    for (const auto& [a, k] : m.factors()) {
      if (pots.count(a)) {
        if (k < 0) return -1;
        md += k;
        continue;
      }
      for (AtomId v : atom(a).vars)
        if (pots.count(v)) return -1;
    }
    d = std::max(d, md);
  }
  return d;
}

struct Decision {
  bool decided = false;
  bool consistent = false;
  SolveResult sol;
  Expr H;  // in terms of the solve unknowns
  std::map<std::string, Expr> cvals;  // combination coefficients
};

const char* kConstPrefix = "_k";
const char* kParamPrefix = "_p";

class Decider {
 public:
  Decider(const EvolutionSystem& sys, std::vector<Expr> cs) : sys_(sys), cs_(std::move(cs)) {
    for (const auto& c : cs_) cmap_[name_of(c)] = c;
  }

  static std::string name_of(const Expr& u) { return atom(u.num().leading().first.factors()[0].first).name; }

  Decision run(Expr F, Expr G) {
    Decision d;
    Expr F0 = sys_.reduce(F);
    Expr G0 = sys_.reduce(G);
    const std::string& u = sys_.dependent();
    Expr Hacc;
    for (int guard = 0; guard < 64; ++guard) {
      const int n = max_x_order(F0, u);
      if (n < 1) break;
      const AtomId un = jet(u, n);
      Expr c = partial(F0, un);
      Expr aff = partial(c, un);
      if (!aff.is_zero()) {
        if (!constrain(split_equation(aff), F0, G0, Hacc)) {
          d.decided = true;
          return d;
        }
        continue;
      }
      auto H1 = integrate(c, jet(u, n - 1));
      if (!H1) return d;
      Hacc += *H1;
      F0 = sys_.reduce(F0 - sys_.dx(*H1));
    }
    if (max_x_order(F0, u) >= 1) return d;

    std::vector<AtomId> args{independent("t"), independent("x")};
    std::vector<std::string> pots;
    for (const auto& p : sys_.potentials()) {
      args.push_back(jet(p.name));
      pots.push_back(p.name);
    }
    // general ansatz H(t, x, potentials)
    {
      Expr H2 = unknown("_H", args);
      if (attempt(F0, G0, Hacc, H2, {H2}, d)) return d;
    }
    if (!pots.empty()) {
      const int deg = potential_degree(F0, sys_);
      if (deg >= 0) {
        for (int dd = std::max(1, deg); dd <= std::max(1, deg) + 1; ++dd) {
          Expr H2;
          std::vector<Expr> hs;
          int i = 0;
          for (const auto& m : monomials_up_to(pots, dd)) {
            Expr h = unknown("_h" + std::to_string(++i), {independent("t"), independent("x")});
            Expr mono(1);
            for (const auto& [n, k] : m) mono = mono * var(jet(n)).pow(k);
            H2 += h * mono;
            hs.push_back(h);
          }
          if (attempt(F0, G0, Hacc, H2, hs, d)) return d;
        }
      }
    }
    return d;
  }

 private:
  const EvolutionSystem& sys_;
  std::vector<Expr> cs_;                 // current unknown constants
  std::map<std::string, Expr> cmap_;     // original c_i -> expression in cs_
  int fresh_ = 0;

  // Solve constraints on the constants alone and substitute.
  bool constrain(const std::vector<Expr>& eqs, Expr& F0, Expr& G0, Expr& Hacc) {
    if (cs_.empty()) return false;
    SolveOptions o;
    o.constant_prefix = kConstPrefix;
    o.parameter_prefix = kParamPrefix;
    auto r = solve_linear(eqs, cs_, o);
    if (!r.complete()) return false;
    std::map<AtomId, Expr> back;
    std::vector<Expr> next;
    for (AtomId c : r.constants) {
      Expr k = unknown("_d" + std::to_string(++fresh_), {});
      back.emplace(c, k);
      next.push_back(k);
    }
    auto sub = [&](Expr e) {
      for (const auto& [n, v] : r.values) e = apply_value(e, n, replace_atoms(v, back));
      return e;
    };
    F0 = sys_.reduce(sub(F0));
    G0 = sys_.reduce(sub(G0));
    Hacc = sub(Hacc);
    for (auto& [n, v] : cmap_) v = sub(v);
    cs_ = next;
    return true;
  }

  bool attempt(const Expr& F0, const Expr& G0, const Expr& Hacc, const Expr& H2, const std::vector<Expr>& hs,
               Decision& d) {
    std::vector<Expr> eqs{sys_.dx(H2) - F0};
    Expr R = sys_.reduce(G0 + sys_.dt(Hacc + H2));
    const AtomId t = independent("t");
    for (AtomId y : R.variables())
      if (y != t) eqs.push_back(partial(R, y));
    std::vector<Expr> unknowns = hs;
    unknowns.insert(unknowns.end(), cs_.begin(), cs_.end());
    SolveOptions o;
    o.constant_prefix = kConstPrefix;
    o.parameter_prefix = kParamPrefix;
    SolveResult r = solve_linear(eqs, unknowns, o);
    if (!r.complete()) {
      // A contradiction 1 = 0 is a definite "no".
      const bool contradiction = std::any_of(r.residual.begin(), r.residual.end(),
                                             [](const Expr& e) {
                                               for (AtomId a : e.atoms())
                                                 if (is_unknown_atom(a)) return false;
                                               return true;
                                             });
      if (contradiction && cs_.empty()) {
        d.decided = true;
        d.consistent = false;
        return true;
      }
      return false;
    }
    d.decided = true;
    d.consistent = true;
    d.sol = r;
    Expr H = Hacc;
    Expr h2 = H2;
    for (const auto& h : hs) h2 = apply_value(h2, name_of(h), r.values.at(name_of(h)));
    H += h2;
    for (const auto& c : cs_) H = apply_value(H, name_of(c), r.values.at(name_of(c)));
    d.H = H;
    for (auto [n, v] : cmap_) {
      for (const auto& c : cs_) v = apply_value(v, name_of(c), r.values.at(name_of(c)));
      d.cvals[n] = v;
    }
    return true;
  }
};

// Drop free constants and parameter functions from a particular solution.
Expr particular(const Expr& e) {
  std::map<AtomId, Expr> zero;
  for (AtomId a : e.atoms()) {
    const Atom& at = atom(a);
    if ((at.kind == AtomKind::Constant && at.name.rfind(kConstPrefix, 0) == 0) ||
        (at.kind == AtomKind::Function && at.traits.parameter && at.name.rfind(kParamPrefix, 0) == 0))
      zero.emplace(a, Expr{});
  }
  return zero.empty() ? e : replace_atoms(e, zero);
}

}  // namespace

TrivialityResult is_trivial(const EvolutionSystem& sys, const ConservedVector& cv) {
  if (cv.F.is_zero() && cv.G.is_zero()) return {true, TrivialityWitness{Expr{}, Expr{}, Expr{}}};
  Decider dec(sys, {});
  Decision d = dec.run(cv.F, cv.G);
  if (!d.decided || !d.consistent) return {false, std::nullopt};
  Expr H = particular(d.H);
  const Expr F0 = sys.reduce(cv.F);
  const Expr G0 = sys.reduce(cv.G);
  Expr R = sys.reduce(G0 + sys.dt(H));
  if (!R.is_zero()) {
    auto vs = R.variables();
    if (!(vs.size() == 1 && atom(*vs.begin()).name == "t")) return {false, std::nullopt};
    auto I = integrate(R, *vs.begin());
    if (!I) return {false, std::nullopt};
    H = H - *I;
  }
  if (!sys.reduce(F0 - sys.dx(H)).is_zero() || !sys.reduce(G0 + sys.dt(H)).is_zero()) return {false, std::nullopt};
  return {true, TrivialityWitness{H, cv.F - F0, cv.G - G0}};
}

bool are_equivalent(const EvolutionSystem& sys, const ConservedVector& a, const ConservedVector& b) {
  return is_trivial(sys, a - b).trivial;
}

std::vector<std::vector<Expr>> row_reduce(std::vector<std::vector<Expr>> rows) {
  if (rows.empty()) return rows;
  const std::size_t n = rows[0].size();
  std::size_t r = 0;
  for (std::size_t col = 0; col < n && r < rows.size(); ++col) {
    std::size_t piv = r;
    while (piv < rows.size() && rows[piv][col].is_zero()) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[r], rows[piv]);
    const Expr p = rows[r][col];
    for (auto& e : rows[r]) e = e / p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][col].is_zero()) continue;
      const Expr f = rows[i][col];
      for (std::size_t j = 0; j < n; ++j) rows[i][j] = rows[i][j] - f * rows[r][j];
    }
    ++r;
  }
  rows.resize(r);
  // integer scaling for rational rows
  for (auto& row : rows) {
    bool rational = true;
    mpz_class l = 1;
    for (const auto& e : row) {
      auto q = e.as_rational();
      if (!q) {
        rational = false;
        break;
      }
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q->get_den().get_mpz_t());
    }
    if (!rational) continue;
    for (auto& e : row) e = e * Expr(Rational(l));
  }
  return rows;
}

DependenceResult linear_dependence(const EvolutionSystem& sys, const std::vector<ConservedVector>& cvs) {
  const int n = static_cast<int>(cvs.size());
  if (n == 0) return {0, {}};
  std::vector<Expr> cs;
  Expr F;
  Expr G;
  for (int i = 0; i < n; ++i) {
    Expr c = unknown("_c" + std::to_string(i + 1), {});
    cs.push_back(c);
    F += c * cvs[i].F;
    G += c * cvs[i].G;
  }
  Decider dec(sys, cs);
  Decision d = dec.run(F, G);
  if (!d.decided) throw ExprError("linear dependence undecided for this set");
  if (!d.consistent) return {n, {}};
  // free constants parameterize the relation space
  std::vector<AtomId> free;
  for (int i = 0; i < n; ++i)
    for (AtomId a : d.cvals.at("_c" + std::to_string(i + 1)).atoms())
      if (atom(a).kind == AtomKind::Constant && atom(a).name.rfind(kConstPrefix, 0) == 0 &&
          std::find(free.begin(), free.end(), a) == free.end())
        free.push_back(a);
  std::vector<std::vector<Expr>> rows;
  for (AtomId k : free) {
    std::vector<Expr> row;
    for (int i = 0; i < n; ++i) {
      auto co = coefficients_in(d.cvals.at("_c" + std::to_string(i + 1)), k);
      row.push_back(co.count(1) ? co.at(1) : Expr{});
    }
    rows.push_back(std::move(row));
  }
  rows = row_reduce(std::move(rows));
  return {n - static_cast<int>(rows.size()), rows};
}

}  // namespace conslaw
