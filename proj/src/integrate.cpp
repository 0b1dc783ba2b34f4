#include <algorithm>

#include "conslaw/solver.hpp"

namespace conslaw {

namespace {

bool depends(AtomId a, AtomId y) {
  const auto& vs = atom(a).vars;
  return std::find(vs.begin(), vs.end(), y) != vs.end();
}

// Antiderivative of a single function atom in y.
std::optional<Expr> atom_antiderivative(AtomId g, AtomId y) {
  const Atom& a = atom(g);
  if (a.kind != AtomKind::Function) return std::nullopt;
  std::size_t idx = a.args.size();
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (a.args[i] == y) {
      if (idx != a.args.size()) return std::nullopt;
      idx = i;
    } else if (depends(a.args[i], y)) {
      return std::nullopt;
    }
  }
  if (idx == a.args.size()) return std::nullopt;
  std::vector<int> ord = a.orders;
  if (a.traits.heat_time == static_cast<int>(idx)) {
    // f_t = -f_yy, so the t-antiderivative of f_{yy..} is -f_{..}
    auto& os = ord[static_cast<std::size_t>(a.traits.heat_space)];
    if (os < 2) return std::nullopt;
    os -= 2;
    return -function(a.name, a.args, ord, a.traits, a.scale, a.shift);
  }
  const bool free_param = a.traits.parameter && a.traits.heat_time < 0;
  if (ord[idx] <= 0 && !(a.traits.antiderivative && idx == 0) && !free_param) return std::nullopt;
  --ord[idx];
  return function(a.name, a.args, ord, a.traits, a.scale, a.shift) * Expr(Rational(1 / a.scale));
}

std::optional<Expr> integrate_term(const Monomial& m, const Rational& c, AtomId y) {
  std::vector<std::pair<AtomId, int>> rest;
  Rational q = 0;
  bool has_root = false;
  Poly exp_arg;  // total exponent argument
  bool has_exp = false;
  std::optional<AtomId> g;
  for (const auto& [a, k] : m.factors()) {
    const Atom& at = atom(a);
    if (!depends(a, y)) {
      rest.emplace_back(a, k);
    } else if (a == y) {
      q += k;
    } else if (at.kind == AtomKind::Root && at.root_base == y) {
      q += ratio(k, at.root_degree);
      has_root = true;
    } else if (at.kind == AtomKind::Exp) {
      exp_arg += *at.exp_arg * Rational(k);
      has_exp = true;
    } else if (k == 1 && !g) {
      g = a;
    } else {
      return std::nullopt;
    }
  }
  const Expr coef = Expr(Poly(Monomial(rest), c));
  if (!has_exp && !g) {
    if (q == -1) return std::nullopt;
    return coef * Expr(Rational(1 / (q + 1))) * rational_power(y, q + 1);
  }
  if (has_root || q < 0 || q.get_den() != 1) return std::nullopt;
  const int n = static_cast<int>(q.get_num().get_si());
  if (has_exp && !g) {
    // exp_arg must be k*y with k free of y
    Poly kp;
    for (const auto& [em, ec] : exp_arg.terms()) {
      if (em.exponent(y) != 1) return std::nullopt;
      Monomial r = em * Monomial::of(y, -1);
      for (const auto& [ra, re] : r.factors())
        if (depends(ra, y)) return std::nullopt;
      kp.add_term(r, ec);
    }
    const Expr k(kp);
    if (k.is_zero()) return std::nullopt;
    Expr e_part(Poly(Monomial{}, 1));
    for (const auto& [a, kk] : m.factors())
      if (atom(a).kind == AtomKind::Exp) e_part = e_part * Expr::of_atom(a, kk);
    Expr sum;
    Rational fact = 1;  // n!/(n-j)!
    Expr kpow = k;
    for (int j = 0; j <= n; ++j) {
      if (j > 0) {
        fact *= (n - j + 1);
        kpow = kpow * k;
      }
      Expr term = Expr(Rational(j % 2 ? -fact : fact)) * Expr::of_atom(y, n - j) / kpow;
      sum += term;
    }
    return coef * e_part * sum;
  }
  if (has_exp) return std::nullopt;
  auto G1 = atom_antiderivative(*g, y);
  if (!G1) return std::nullopt;
  if (n == 0) return coef * *G1;
  // by parts
  auto inner = integrate(Expr::of_atom(y, n - 1) * *G1, y);
  if (!inner) return std::nullopt;
  return coef * (Expr::of_atom(y, n) * *G1 - Expr(n) * *inner);
}

}  // namespace

std::optional<Expr> integrate(const Expr& e, AtomId y) {
  if (e.is_zero()) return Expr{};
  for (const auto& f : e.den())
    for (const auto& [m, c] : f.poly.terms())
      for (const auto& [a, k] : m.factors())
        if (depends(a, y)) return std::nullopt;
  Expr out;
  for (const auto& [m, c] : e.num().terms()) {
    auto r = integrate_term(m, c, y);
    if (!r) return std::nullopt;
    out += *r;
  }
  if (!e.den().empty()) out = out / Expr(e.den_poly());
  return out;
}

}  // namespace conslaw
