#include "properties.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "conslaw/hierarchy.hpp"

namespace conslaw::props {

void Outcome::record(bool pass, const std::string& what) {
  ++checks;
  if (!pass) {
    if (failures == 0) first_failure = what;
    ++failures;
  }
}

std::string Outcome::str() const {
  std::ostringstream os;
  os << (checks - failures) << "/" << checks;
  if (failures) os << ", first failure: " << first_failure;
  return os.str();
}

std::uint64_t seed_from_env() {
  const char* s = std::getenv("CONSLAW_SEED");
  if (!s || !*s) return 1;
  return std::strtoull(s, nullptr, 10);
}

namespace {

Expr P(const std::string& s) { return parse(s, table_scope()); }

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(int one_in) { return uniform(1, one_in) == 1; }

  Rational nonzero(int range = 5, int den = 3) {
    int n = 0;
    while (n == 0) n = uniform(-range, range);
    return ratio(n, uniform(1, den));
  }

  Rational sample() {
    Rational r(uniform(-40, 40), uniform(1, 9));
    r.canonicalize();
    return r;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), rng_);
  }

  // Random sum or product tree over the operands, in the given order.
  Expr tree(const std::vector<Expr>& ops, bool sum) {
    std::function<Expr(std::size_t, std::size_t)> go = [&](std::size_t lo, std::size_t hi) -> Expr {
      if (hi - lo == 1) return ops[lo];
      const std::size_t mid = lo + 1 + static_cast<std::size_t>(uniform(0, static_cast<int>(hi - lo) - 2));
      return sum ? go(lo, mid) + go(mid, hi) : go(lo, mid) * go(mid, hi);
    };
    return go(0, ops.size());
  }

  Expr term(const std::vector<Expr>& pool) {
    Expr out = Expr(nonzero());
    const int k = uniform(0, 3);
    for (int i = 0; i < k; ++i) out *= pool[uniform(0, static_cast<int>(pool.size()) - 1)].pow(uniform(1, 2));
    return out;
  }

  // A differential function: a short sum, sometimes over a denominator in
  // one of the first four pool entries.
  Expr function(const std::vector<Expr>& pool) {
    Expr out;
    const int k = uniform(1, 4);
    for (int i = 0; i < k; ++i) out += term(pool);
    if (chance(3)) out = out / (Expr(uniform(1, 3)) + pool[uniform(0, 3)].pow(2));
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

std::vector<Expr> jet_pool() {
  return {P("t"), P("x"), P("u"), P("u_x"), P("u_xx"), P("u_t"), P("u_tx"), P("A(u)"), P("exp(x)")};
}

// Reduced row echelon form in place; returns the pivot columns.
std::vector<std::size_t> echelon(std::vector<std::vector<Rational>>& m, std::size_t cols) {
  std::vector<std::size_t> pivots;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < m.size(); ++c) {
    std::size_t p = rank;
    while (p < m.size() && m[p][c] == 0) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[rank]);
    const Rational inv = 1 / m[rank][c];
    for (std::size_t k = c; k < cols; ++k) m[rank][k] *= inv;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == rank || m[r][c] == 0) continue;
      const Rational f = m[r][c];
      for (std::size_t k = c; k < cols; ++k) m[r][k] -= f * m[rank][k];
    }
    pivots.push_back(c);
    ++rank;
  }
  return pivots;
}

int rank_of(std::vector<std::vector<Rational>> m) {
  return static_cast<int>(echelon(m, m.empty() ? 0 : m.front().size()).size());
}

std::vector<std::vector<Rational>> nullspace(std::vector<std::vector<Rational>> m, std::size_t cols) {
  const auto pivots = echelon(m, cols);
  std::vector<bool> is_pivot(cols, false);
  for (std::size_t c : pivots) is_pivot[c] = true;
  std::vector<std::vector<Rational>> out;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(cols, 0);
    v[f] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) v[pivots[i]] = -m[i][f];
    out.push_back(v);
  }
  return out;
}

// Rank of the expressions as functions, from values at random points; atoms
// are drawn independently, constants once per call.
int sampled_rank(const std::vector<Expr>& es, Gen& gen, int points = 20) {
  std::set<AtomId> atoms;
  for (const Expr& e : es)
    for (AtomId a : e.atoms()) atoms.insert(a);
  std::map<AtomId, Rational> fixed;
  for (AtomId a : atoms)
    if (atom(a).kind == AtomKind::Constant) fixed[a] = gen.sample();
  std::vector<std::vector<Rational>> m(es.size());
  for (int p = 0; p < points; ++p) {
    for (int attempt = 0;; ++attempt) {
      std::map<AtomId, Rational> values = fixed;
      for (AtomId a : atoms)
        if (!values.count(a)) values[a] = gen.sample();
      try {
        std::vector<Rational> col;
        for (const Expr& e : es) col.push_back(evaluate(e, values));
        for (std::size_t i = 0; i < es.size(); ++i) m[i].push_back(col[i]);
        break;
      } catch (const ExprError&) {
        if (attempt > 50) throw;
      }
    }
  }
  return rank_of(m);
}

}  // namespace

Outcome normal_form_pairs(int n, std::uint64_t seed) {
  Gen gen(seed);
  const std::vector<Expr> pool{P("t"), P("x"), P("u"), P("u_x"), P("A(u)"), P("Int[A]"), P("exp(x)"),
                               P("alpha(t,x)"), P("eps")};
  Outcome out;
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<Expr>> terms;
    const int k = gen.uniform(1, 5);
    for (int j = 0; j < k; ++j) {
      std::vector<Expr> fs{Expr(gen.nonzero())};
      const int f = gen.uniform(0, 3);
      for (int q = 0; q < f; ++q) fs.push_back(pool[gen.uniform(0, static_cast<int>(pool.size()) - 1)]);
      terms.push_back(fs);
    }
    auto assemble = [&](std::vector<std::vector<Expr>> ts, bool shuffled) {
      std::vector<Expr> products;
      for (auto& fs : ts) {
        if (shuffled) gen.shuffle(fs);
        products.push_back(gen.tree(fs, false));
      }
      if (shuffled) gen.shuffle(products);
      return gen.tree(products, true);
    };
    const Expr a = assemble(terms, false);
    const Expr b = assemble(terms, true);
    out.record(a == b && a.str() == b.str(), a.str() + " vs " + b.str());
  }
  return out;
}

Outcome partial_commutes(int n, std::uint64_t seed) {
  Gen gen(seed);
  const auto pool = jet_pool();
  const std::vector<AtomId> vars{independent("t"), independent("x"), jet("u"), jet("u", 1), jet("u", 0, 1)};
  Outcome out;
  for (int i = 0; i < n; ++i) {
    const Expr e = gen.function(pool);
    for (std::size_t a = 0; a < vars.size(); ++a)
      for (std::size_t b = a + 1; b < vars.size(); ++b)
        out.record(partial(partial(e, vars[a]), vars[b]) == partial(partial(e, vars[b]), vars[a]), e.str());
  }
  return out;
}

Outcome euler_annihilates_divergences(int n, std::uint64_t seed) {
  Gen gen(seed);
  const auto pool = jet_pool();
  Outcome out;
  for (int i = 0; i < n; ++i) {
    const Expr p = gen.function(pool);
    const Expr q = gen.function(pool);
    const Expr div = total_derivative(p, Axis::T) + total_derivative(q, Axis::X);
    out.record(euler_operator(div, "u").is_zero(), "P = " + p.str() + ", Q = " + q.str());
  }
  return out;
}

Outcome total_derivatives_commute(int n, std::uint64_t seed) {
  Gen gen(seed);
  const auto pool = jet_pool();
  Outcome out;
  for (int i = 0; i < n; ++i) {
    const Expr e = gen.function(pool);
    const Expr tx = total_derivative(total_derivative(e, Axis::X), Axis::T);
    const Expr xt = total_derivative(total_derivative(e, Axis::T), Axis::X);
    out.record(tx == xt, e.str());
  }
  return out;
}

Outcome wronskian_matches_rank(std::uint64_t seed) {
  Gen gen(seed);
  const std::vector<Expr> family{P("1"), P("x"), P("x^2 - 2*t"), P("x^3 - 6*x*t")};
  const AtomId x = independent("x");
  Outcome out;
  auto check = [&](const std::vector<Expr>& fs) {
    const bool w = !wronskian(fs, x).is_zero();
    const bool independent_by_rank = sampled_rank(fs, gen, 12) == static_cast<int>(fs.size());
    std::string names;
    for (const Expr& f : fs) names += "[" + f.str() + "]";
    out.record(w == independent_by_rank, names);
  };
  // every multiset of up to four members, scaled
  std::function<void(std::vector<Expr>&, std::size_t)> multisets = [&](std::vector<Expr>& cur, std::size_t from) {
    if (!cur.empty()) check(cur);
    if (cur.size() == 4) return;
    for (std::size_t i = from; i < family.size(); ++i) {
      cur.push_back(Expr(gen.nonzero()) * family[i]);
      multisets(cur, i);
      cur.pop_back();
    }
  };
  std::vector<Expr> cur;
  multisets(cur, 0);
  // sets closed by a random combination of earlier members
  for (int i = 0; i < 40; ++i) {
    std::vector<Expr> fs;
    const int k = gen.uniform(1, 3);
    for (int j = 0; j < k; ++j) fs.push_back(family[gen.uniform(0, 3)]);
    Expr combo;
    for (const Expr& f : fs) combo += Expr(gen.nonzero()) * f;
    fs.push_back(gen.chance(2) ? combo : combo + family[gen.uniform(0, 3)]);
    check(fs);
  }
  return out;
}

Outcome proportional_propagation(int pairs, std::uint64_t seed) {
  Gen gen(seed);
  const std::vector<Expr> family{P("1"), P("x"), P("x^2 - 2*t"), P("x^3 - 6*x*t"), P("x^4 - 12*x^2*t + 12*t^2")};
  const AtomId x = independent("x");
  const AtomId t = independent("t");
  Outcome out;
  auto random_solution = [&] {
    Expr a;
    while (a.is_zero())
      for (const Expr& f : family)
        if (gen.chance(2)) a += Expr(gen.nonzero()) * f;
    return a;
  };
  auto propagate = [&](const Expr& a, const Expr& b) {
    for (int i = 0; i <= 5; ++i)
      for (int j = 0; i + j <= 5; ++j) {
        const Expr r = partial(a, x, i) * partial(b, x, j) - partial(a, x, j) * partial(b, x, i);
        out.record(r.is_zero(), "alpha = " + a.str() + ", beta = " + b.str() + ", i = " + std::to_string(i) +
                                    ", j = " + std::to_string(j));
      }
  };
  int taken = 0;
  while (taken < pairs) {
    const Expr a = random_solution();
    const Expr b = gen.chance(2) ? Expr(gen.nonzero()) * a : random_solution();
    for (const Expr* s : {&a, &b})
      out.record((partial(*s, t) + partial(*s, x, 2)).is_zero(), "not backward heat: " + s->str());
    if (!(partial(a, x) * b - a * partial(b, x)).is_zero()) continue;
    propagate(a, b);
    ++taken;
  }
  propagate(P("alpha(t,x)"), P("eps*alpha(t,x)"));
  return out;
}

namespace {

AtomId atom_of(const std::string& s) { return *P(s).atoms().begin(); }

// Concrete kernels standing in for the opaque A, B of a relation class.
std::map<AtomId, Expr> instantiation(const DceEquation& eq) {
  if (eq.relation == "concrete") return {};
  const Expr u = var(jet("u"));
  const Expr A = 1 + u * u;
  Expr B;
  if (eq.relation == "none") B = u;
  else if (eq.relation == "B=A") B = A;
  else if (eq.relation == "B=IntA+uA") B = u + u.pow(3) / 3 + u * A;
  const auto c = DceEquation::concrete(A, B);
  return {{atom_of("A(u)"), c.A}, {atom_of("Int[A]"), c.IntA}, {atom_of("B(u)"), c.B}, {atom_of("Int[B]"), c.IntB}};
}

Expr inst(const Expr& e, const std::map<AtomId, Expr>& m) { return m.empty() ? e : replace_atoms(e, m); }
ConservedVector inst(const ConservedVector& cv, const std::map<AtomId, Expr>& m) {
  return {inst(cv.F, m), inst(cv.G, m), cv.label};
}

EvolutionSystem inst(const EvolutionSystem& s, const std::map<AtomId, Expr>& m) {
  EvolutionSystem out(s.dependent(), inst(s.rhs(), m));
  for (const Potential& p : s.potentials()) out = out.with_potential(p.name, inst(p.source, m), p.level);
  return out;
}

// Image of a density under the Euler operator in the free coordinates of the
// system: u-jets for the bare equation, v-jets when v_x = m(t,x) u.
Expr oracle_image(const EvolutionSystem& s, const ConservedVector& cv) {
  const Expr f = s.reduce(cv.F);
  if (s.potentials().empty()) return euler_operator(f, s.dependent());
  if (s.potentials().size() != 1) throw ExprError("oracle handles one potential");
  const Potential& p = s.potentials().front();
  const Expr m = p.x_rule / var(jet("u"));
  if (!partial(m, jet("u")).is_zero()) throw ExprError("oracle needs v_x = m(t,x) u");
  std::map<AtomId, Expr> b;
  Expr uk = var(jet(p.name, 1)) / m;
  for (int k = 0; k <= std::max(0, jet_order(f, "u")); ++k) {
    b.emplace(jet("u", k), uk);
    uk = total_derivative(uk, Axis::X);
  }
  const Expr g = substitute(f, b);
  if (jet_order(g, "u") >= 0) throw ExprError("u survives in " + g.str());
  return euler_operator(g, p.name);
}

}  // namespace

Outcome dependence_matches_oracle(std::uint64_t seed) {
  Gen gen(seed);
  const auto rows = table1();
  Outcome out;
  std::set<std::string> seen;
  for (const auto& row : rows) {
    const auto m = instantiation(row.equation);
    const EvolutionSystem so = row.system;
    const EvolutionSystem sc = inst(so, m);
    std::string key = so.rhs().str();
    for (const auto& p : so.potentials()) key += "|" + p.x_rule.str() + "|" + p.t_rule.str();
    if (!seen.insert(key).second) continue;

    std::vector<ConservedVector> corpus;
    auto add = [&](const ConservedVector& cv) {
      for (const auto& c : corpus)
        if (c.F == cv.F && c.G == cv.G) return;
      if (verify(so, cv).holds && verify(sc, inst(cv, m)).holds) corpus.push_back(cv);
    };
    for (const auto& r : rows) {
      add(r.cv);
      if (r.cv.F.str().find("alpha") != std::string::npos)
        add({rename_function(r.cv.F, "alpha", "beta"), rename_function(r.cv.G, "alpha", "beta"), r.label + "b"});
    }
    const ConservedVector base = row.equation.case1();
    add(base);
    Expr h = P("x*u*u_x");
    if (!so.potentials().empty()) h += P("t*" + so.potentials().front().name + "^2");
    const ConservedVector trivial{total_derivative(h, Axis::X, so), -total_derivative(h, Axis::T, so), "trivial"};
    add(trivial);
    add(row.cv + Expr(2) * base);
    if (corpus.size() > 6) corpus.resize(6);

    std::vector<Expr> images;
    for (const auto& cv : corpus) images.push_back(oracle_image(sc, inst(cv, m)));
    const std::size_t n = corpus.size();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (__builtin_popcount(mask) > 4) continue;
      std::vector<ConservedVector> co, cc;
      std::vector<Expr> im;
      std::string labels;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) {
          co.push_back(corpus[i]);
          cc.push_back(inst(corpus[i], m));
          im.push_back(images[i]);
          labels += " " + corpus[i].label;
        }
      const int oracle = sampled_rank(im, gen);
      const int opaque = linear_dependence(so, co).rank;
      const int concrete = linear_dependence(sc, cc).rank;
      out.record(oracle == opaque && oracle == concrete,
                 "row " + row.label + ":" + labels + " oracle " + std::to_string(oracle) + ", rank " +
                     std::to_string(opaque) + "/" + std::to_string(concrete));
    }
  }
  return out;
}

Outcome heat_potential_laws_are_local(int max_p, int samples, std::uint64_t seed) {
  Gen gen(seed);
  const std::vector<Expr> family{P("1"), P("x"), P("x^2 - 2*t"), P("x^3 - 6*x*t")};
  const AtomId x = independent("x");
  const auto heat = DceEquation::concrete(1, 0);
  const auto local = classify_dce(heat);
  const LawPiece series{*local.family, local.parameters};
  const Expr u = var(jet("u"));
  Outcome out;
  for (int p = 1; p <= max_p; ++p)
    for (int s = 0; s < samples; ++s) {
      std::vector<Expr> alphas;
      while (alphas.empty() || wronskian(alphas, x).is_zero()) {
        alphas.clear();
        for (int i = 0; i < p; ++i) {
          Expr a;
          for (const Expr& f : family)
            if (gen.chance(2)) a += Expr(gen.nonzero()) * f;
          alphas.push_back(a.is_zero() ? family[gen.uniform(0, 3)] : a);
        }
      }
      std::vector<ConservedVector> laws;
      std::string names;
      for (const Expr& a : alphas) {
        laws.push_back({a * u, partial(a, x) * u - a * var(jet("u", 1)), ""});
        names += "[" + a.str() + "]";
      }
      const auto ps = build_potential_system(heat.system(), laws);

      // F, G polynomial: degree 2 in the potentials, t^(0..1) x^(0..3), G affine in u, u_x
      std::vector<Expr> vm{Expr(1)};
      for (std::size_t i = 0; i < ps.system.potentials().size(); ++i) {
        const Expr vi = var(jet(ps.system.potentials()[i].name));
        vm.push_back(vi);
        for (std::size_t j = i; j < ps.system.potentials().size(); ++j)
          vm.push_back(vi * var(jet(ps.system.potentials()[j].name)));
      }
      std::vector<Expr> unknowns;
      std::map<AtomId, std::size_t> index;
      auto fresh = [&] {
        const Expr c = var(constant("_q" + std::to_string(unknowns.size())));
        index.emplace(*c.atoms().begin(), unknowns.size());
        unknowns.push_back(c);
        return c;
      };
      Expr F, G;
      for (const Expr& m : vm)
        for (int a = 0; a <= 1; ++a)
          for (int b = 0; b <= 3; ++b) {
            const Expr mono = m * P("t").pow(a) * P("x").pow(b);
            F += fresh() * mono;
            for (const Expr& w : {Expr(1), u, var(jet("u", 1))}) G += fresh() * mono * w;
          }
      const Expr div = total_derivative(F, Axis::T, ps.system) + total_derivative(G, Axis::X, ps.system);
      std::map<std::string, std::vector<Rational>> rows;
      for (const auto& [mono, c] : div.num().terms()) {
        std::optional<AtomId> k;
        std::vector<std::pair<AtomId, int>> rest;
        for (const auto& [a, e] : mono.factors())
          if (index.count(a)) k = a;
          else rest.emplace_back(a, e);
        auto& row = rows[Monomial(rest).str()];
        if (row.empty()) row.assign(unknowns.size(), 0);
        row[index.at(*k)] += c;
      }
      std::vector<std::vector<Rational>> m;
      for (auto& [key, row] : rows) m.push_back(std::move(row));
      for (const auto& sol : nullspace(m, unknowns.size())) {
        std::map<AtomId, Expr> b;
        for (std::size_t i = 0; i < unknowns.size(); ++i) b.emplace(*unknowns[i].atoms().begin(), Expr(sol[i]));
        const ConservedVector cv{substitute(F, b), substitute(G, b), ""};
        const bool holds = verify(ps.system, cv).holds;
        const bool local_equivalent = holds && span_membership(ps.system, cv, {}, {series}).member;
        out.record(local_equivalent, "alphas " + names + ": F = " + cv.F.str() + ", G = " + cv.G.str());
      }
    }
  return out;
}

}  // namespace conslaw::props
