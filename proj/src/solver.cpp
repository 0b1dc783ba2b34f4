#include "conslaw/solver.hpp"

#include <algorithm>
#include <set>

namespace conslaw {

Expr unknown(const std::string& name, const std::vector<AtomId>& args) {
  FunctionTraits tr;
  tr.unknown = true;
  return function(name, args, tr);
}

bool is_unknown_atom(AtomId a) {
  const Atom& at = atom(a);
  return at.kind == AtomKind::Function && at.traits.unknown;
}

bool is_parameter_atom(AtomId a) {
  const Atom& at = atom(a);
  return at.kind == AtomKind::Function && at.traits.parameter;
}

namespace {

std::vector<AtomId> unknown_atoms(const Expr& e) {
  std::vector<AtomId> out;
  for (AtomId a : e.atoms())
    if (is_unknown_atom(a)) out.push_back(a);
  return out;
}

bool has_unknowns(const Expr& e) { return !unknown_atoms(e).empty(); }

std::set<AtomId> vars_of(const std::vector<AtomId>& args) {
  std::set<AtomId> s;
  for (AtomId a : args)
    for (AtomId v : atom(a).vars) s.insert(v);
  return s;
}

bool subset(const std::set<AtomId>& a, const std::set<AtomId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

std::optional<LinearForm> linear_form(const Expr& e) {
  LinearForm lf;
  Expr rest = e;
  try {
    for (AtomId a : unknown_atoms(e)) {
      auto co = coefficients_in(rest, a);
      for (const auto& [k, c] : co)
        if (k != 0 && k != 1) return std::nullopt;
      if (co.count(1)) lf.coeff.emplace(a, co.at(1));
      rest = co.count(0) ? co.at(0) : Expr{};
    }
  } catch (const ExprError&) {
    return std::nullopt;
  }
  for (const auto& [a, c] : lf.coeff)
    if (has_unknowns(c)) return std::nullopt;
  lf.rest = rest;
  return lf;
}

std::vector<Expr> split_equation(const Expr& e) {
  if (e.is_zero()) return {};
  std::vector<AtomId> unk = unknown_atoms(e);
  std::set<AtomId> argvars;
  for (AtomId a : unk)
    for (AtomId v : atom(a).vars) argvars.insert(v);
  std::set<AtomId> split;
  for (AtomId v : e.variables())
    if (!argvars.count(v)) split.insert(v);
  if (split.empty()) return {primitive_part(e)};
  std::set<AtomId> split_atoms;
  for (AtomId a : e.atoms()) {
    const auto& vs = atom(a).vars;
    bool any = false;
    bool all = true;
    for (AtomId v : vs) {
      if (split.count(v)) {
        any = true;
      } else {
        all = false;
      }
    }
    if (any && !all) return {primitive_part(e)};  // mixed atom, cannot separate
    if (any) split_atoms.insert(a);
  }
  std::map<Monomial, Poly, MonomialLess> parts;
  for (const auto& [m, c] : e.num().terms()) {
    std::vector<std::pair<AtomId, int>> key;
    std::vector<std::pair<AtomId, int>> rest;
    for (const auto& f : m.factors()) (split_atoms.count(f.first) ? key : rest).push_back(f);
    parts[Monomial(key)].add_term(Monomial(rest), c);
  }
  std::vector<Expr> out;
  for (auto& [k, p] : parts) {
    Expr q = primitive_part(Expr(std::move(p)));
    if (!q.is_zero()) out.push_back(std::move(q));
  }
  return out;
}

Expr apply_value(const Expr& e, const std::string& name, const Expr& value) {
  std::map<AtomId, Expr> b;
  for (AtomId a : e.atoms()) {
    const Atom& at = atom(a);
    if (at.kind != AtomKind::Function || !at.traits.unknown || at.name != name) continue;
    Expr d = value;
    for (std::size_t i = 0; i < at.args.size(); ++i) d = partial(d, at.args[i], at.orders[i]);
    b.emplace(a, d);
  }
  if (b.empty()) return e;
  return replace_atoms(e, b);
}

namespace {

class Engine {
 public:
  Engine(const std::vector<Expr>& eqs, const std::vector<Expr>& unknowns, const SolveOptions& opts)
      : opts_(opts), eqs_(eqs) {
    for (const auto& u : unknowns) {
      const AtomId a = u.num().leading().first.factors()[0].first;
      fns_[atom(a).name] = atom(a).args;
      requested_.push_back(atom(a).name);
    }
  }

  SolveResult run() {
    for (int step = 0; step < opts_.max_steps; ++step) {
      normalize();
      if (eqs_.empty() || inconsistent_) break;
      if (!apply_some_rule()) break;
    }
    return finish();
  }

 private:
  SolveOptions opts_;
  std::vector<Expr> eqs_;
  std::map<std::string, std::vector<AtomId>> fns_;  // unsolved unknowns
  std::map<std::string, Expr> values_;
  std::vector<std::string> requested_;
  std::vector<std::string> order_;  // creation order of generated unknowns
  std::vector<std::string> params_;
  int counter_ = 0;
  int param_counter_ = 0;
  bool inconsistent_ = false;

  // ---- bookkeeping ----------------------------------------------------------

  Expr fresh(const std::vector<AtomId>& args) {
    std::string name = "f" + std::to_string(++counter_);
    while (fns_.count(name) || values_.count(name)) name = "f" + std::to_string(++counter_);
    fns_[name] = args;
    order_.push_back(name);
    return unknown(name, args);
  }

  Expr fresh_parameter(const std::vector<AtomId>& args, FunctionTraits tr) {
    tr.parameter = true;
    tr.unknown = false;
    std::string name = opts_.parameter_prefix + std::to_string(++param_counter_);
    params_.push_back(name);
    return function(name, args, tr);
  }

  void assign(const std::string& name, const Expr& value) {
    fns_.erase(name);
    for (auto& e : eqs_) e = apply_value(e, name, value);
    for (auto& [n, v] : values_) v = apply_value(v, name, value);
    values_[name] = value;
  }

  void normalize() {
    std::vector<Expr> out;
    std::set<std::string> seen;
    for (const auto& e : eqs_) {
      for (auto& p : split_equation(e)) {
        if (p.is_zero()) continue;
        if (!has_unknowns(p)) {
          inconsistent_ = true;
        }
        if (seen.insert(p.str()).second) out.push_back(std::move(p));
      }
    }
    std::stable_sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) {
      const auto ua = unknown_atoms(a).size();
      const auto ub = unknown_atoms(b).size();
      if (ua != ub) return ua < ub;
      return a.num().size() < b.num().size();
    });
    eqs_ = std::move(out);
  }

  bool occurs_elsewhere(const std::string& name, const Expr& e) const {
    for (const auto& q : eqs_) {
      if (&q == &e) continue;
      for (AtomId a : unknown_atoms(q))
        if (atom(a).name == name) return true;
    }
    return false;
  }

  static std::set<std::string> names_in(const LinearForm& lf) {
    std::set<std::string> s;
    for (const auto& [a, c] : lf.coeff) s.insert(atom(a).name);
    return s;
  }

  std::vector<AtomId> args_without(const std::vector<AtomId>& args, AtomId y) {
    std::vector<AtomId> out;
    for (AtomId a : args)
      if (a != y) out.push_back(a);
    return out;
  }

  // Kernel of d^J: sum over args y with J_y > 0 of y^p P(args \ y), p < J_y.
  Expr homogeneous(const std::vector<AtomId>& args, const std::vector<int>& J) {
    Expr out;
    for (std::size_t i = 0; i < args.size(); ++i)
      for (int p = 0; p < J[i]; ++p) out += Expr::of_atom(args[i], p) * fresh(args_without(args, args[i]));
    return out;
  }

  std::optional<Expr> integrate_multi(Expr g, const std::vector<AtomId>& args, const std::vector<int>& J) {
    for (std::size_t i = 0; i < args.size(); ++i)
      for (int p = 0; p < J[i]; ++p) {
        auto r = integrate(g, args[i]);
        if (!r) return std::nullopt;
        g = *r;
      }
    return g;
  }

  // ---- rules ----------------------------------------------------------------

  bool apply_some_rule() {
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (single_unknown(eqs_[i])) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (eliminate(eqs_[i])) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (integrate_rule(eqs_[i])) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (null_divergence(eqs_[i])) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (absorb(eqs_[i], false)) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (separate(eqs_[i], eqs_[i])) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (separate_scaled(eqs_[i])) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (absorb(eqs_[i], true)) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (lower(eqs_[i])) return true;
    for (std::size_t i = 0; i < eqs_.size(); ++i)
      if (differentiate_out(eqs_[i])) return true;
    return false;
  }

  bool single_unknown(const Expr& e) {
    auto lf = linear_form(e);
    if (!lf) return false;
    auto names = names_in(*lf);
    if (names.size() != 1) return false;
    const std::string name = *names.begin();
    const auto& args = fns_.at(name);
    std::map<std::vector<int>, Expr> terms;
    for (const auto& [a, c] : lf->coeff) terms[atom(a).orders] = c;
    const std::vector<int> zero(args.size(), 0);
    auto nonzero_idx = [](const std::vector<int>& J) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < J.size(); ++i)
        if (J[i]) idx.push_back(i);
      return idx;
    };
    if (terms.size() == 1) {
      const auto& [J, a] = *terms.begin();
      Expr g = -lf->rest / a;
      if (J == zero) {
        assign(name, g);
        return true;
      }
      auto part = integrate_multi(g, args, J);
      if (!part) return false;
      assign(name, *part + homogeneous(args, J));
      return true;
    }
    if (terms.size() != 2) return false;
    auto it = terms.begin();
    const auto& [J0, a0] = *it++;
    const auto& [J1, a1] = *it;
    auto i0 = nonzero_idx(J0);
    auto i1 = nonzero_idx(J1);
    // first order: a1 U_y + a0 U = 0
    if (lf->rest.is_zero() && J0 == zero && i1.size() == 1 && J1[i1[0]] == 1) {
      const AtomId y = args[i1[0]];
      Expr k = -a0 / a1;
      if (k.is_polynomial() && !k.depends_on(y)) {
        assign(name, fresh(args_without(args, y)) * exp(k * var(y)));
        return true;
      }
      // Euler: y U_y = n U
      const Expr n = k * var(y);
      if (!n.variables().empty() || !n.is_polynomial() || n.num().leading().second.get_den() != 1) return false;
      const mpz_class p = n.num().leading().second.get_num();
      if (!p.fits_sint_p()) return false;
      assign(name, fresh(args_without(args, y)) * Expr::of_atom(y, static_cast<int>(p.get_si())));
      return true;
    }
    if (i0.size() == 1 && i1.size() == 1 && i0[0] == i1[0] && lf->rest.is_zero()) {
      // a2 U_yy + a1 U_y = 0
      const std::size_t y_i = i0[0];
      const AtomId y = args[y_i];
      const auto& [Jlo, alo, Jhi, ahi] = J0[y_i] < J1[y_i] ? std::tie(J0, a0, J1, a1) : std::tie(J1, a1, J0, a0);
      if (Jlo[y_i] != 1 || Jhi[y_i] != 2) return false;
      Expr k = alo / ahi;
      if (!k.is_polynomial() || k.depends_on(y)) return false;
      auto rest_args = args_without(args, y);
      assign(name, fresh(rest_args) * exp(-k * var(y)) + fresh(rest_args));
      return true;
    }
    // heat: U_t + U_yy = g(t)
    for (int flip = 0; flip < 2 && !occurs_elsewhere(name, e); ++flip) {
      const auto& Jt = flip ? J1 : J0;
      const auto& Jy = flip ? J0 : J1;
      const Expr& at = flip ? a1 : a0;
      const Expr& ay = flip ? a0 : a1;
      auto it_ = nonzero_idx(Jt);
      auto iy_ = nonzero_idx(Jy);
      if (it_.size() != 1 || iy_.size() != 1 || Jt[it_[0]] != 1 || Jy[iy_[0]] != 2) continue;
      if (atom(args[it_[0]]).name != "t" || atom(args[it_[0]]).kind != AtomKind::Independent) continue;
      if (ay != at) continue;
      Expr g = -lf->rest / at;
      std::set<AtomId> gv = g.variables();
      if (!(gv.empty() || (gv.size() == 1 && *gv.begin() == args[it_[0]]))) continue;
      auto part = integrate(g, args[it_[0]]);
      if (!part) continue;
      FunctionTraits tr;
      tr.heat_time = static_cast<int>(it_[0]);
      tr.heat_space = static_cast<int>(iy_[0]);
      assign(name, *part + fresh_parameter(args, tr));
      return true;
    }
    return false;
  }

  // U appears undifferentiated only; solve for it.
  bool eliminate(const Expr& e) {
    auto lf = linear_form(e);
    if (!lf) return false;
    std::map<std::string, int> count;
    for (const auto& [a, c] : lf->coeff) ++count[atom(a).name];
    std::optional<AtomId> best;
    for (const auto& [a, c] : lf->coeff) {
      const Atom& at = atom(a);
      if (count[at.name] != 1) continue;
      if (std::any_of(at.orders.begin(), at.orders.end(), [](int o) { return o != 0; })) continue;
      Expr value = -(e - c * Expr::of_atom(a)) / c;
      if (!subset(value.variables(), vars_of(at.args))) continue;
      if (!best || at.args.size() > atom(*best).args.size() ||
          (at.args.size() == atom(*best).args.size() && atom_less(*best, a)))
        best = a;
    }
    if (!best) return false;
    const Expr& c = lf->coeff.at(*best);
    assign(atom(*best).name, -(e - c * Expr::of_atom(*best)) / c);
    return true;
  }

  // U appears only as U_{y^k}; other unknowns are free of y.
  bool integrate_rule(const Expr& e) {
    auto lf = linear_form(e);
    if (!lf) return false;
    std::map<std::string, int> count;
    for (const auto& [a, c] : lf->coeff) ++count[atom(a).name];
    for (const auto& [a, c] : lf->coeff) {
      const Atom& at = atom(a);
      if (count[at.name] != 1) continue;
      std::size_t yi = at.args.size();
      bool pure = true;
      for (std::size_t i = 0; i < at.args.size(); ++i) {
        if (at.orders[i] == 0) continue;
        if (yi != at.args.size()) pure = false;
        yi = i;
      }
      if (!pure || yi == at.args.size()) continue;
      const AtomId y = at.args[yi];
      bool others_free = true;
      for (const auto& [b, cb] : lf->coeff)
        if (b != a && e.contains_atom(b)) {
          const auto& vs = atom(b).vars;
          if (std::find(vs.begin(), vs.end(), y) != vs.end()) others_free = false;
        }
      if (!others_free) continue;
      Expr g = -(e - c * Expr::of_atom(a)) / c;
      if (!subset(g.variables(), vars_of(at.args))) continue;
      const std::vector<AtomId> args = at.args;
      const std::vector<int> J = at.orders;
      auto part = integrate_multi(g, args, J);
      if (!part) continue;
      const std::string name = at.name;
      assign(name, *part + homogeneous(args, J));
      return true;
    }
    return false;
  }

  // a P_t + b V_x = 0 with constant a, b: P = b Phi_x, V = -a Phi_t.
  bool null_divergence(const Expr& e) {
    auto lf = linear_form(e);
    if (!lf || !lf->rest.is_zero() || lf->coeff.size() != 2) return false;
    auto it = lf->coeff.begin();
    const auto [p, a] = *it++;
    const auto [q, b] = *it;
    if (!a.variables().empty() || !b.variables().empty()) return false;
    const Atom& P = atom(p);
    const Atom& Q = atom(q);
    if (P.name == Q.name || P.args != Q.args) return false;
    auto single = [](const Atom& A, const std::string& v) -> bool {
      int tot = 0;
      bool ok = false;
      for (std::size_t i = 0; i < A.args.size(); ++i) {
        tot += A.orders[i];
        if (A.orders[i] == 1 && atom(A.args[i]).name == v && atom(A.args[i]).kind == AtomKind::Independent) ok = true;
      }
      return ok && tot == 1;
    };
    const Atom* Pt = nullptr;
    const Atom* Vx = nullptr;
    Expr at;
    Expr bx;
    if (single(P, "t") && single(Q, "x")) {
      Pt = &P, Vx = &Q, at = a, bx = b;
    } else if (single(Q, "t") && single(P, "x")) {
      Pt = &Q, Vx = &P, at = b, bx = a;
    } else {
      return false;
    }
    const AtomId t = independent("t");
    const AtomId x = independent("x");
    const std::vector<AtomId> args = Pt->args;
    const std::string pn = Pt->name;
    const std::string vn = Vx->name;
    if (occurs_elsewhere(pn, e) || occurs_elsewhere(vn, e)) return false;
    Expr phi = fresh_parameter(args, {});
    assign(pn, bx * partial(phi, x));
    assign(vn, -at * partial(phi, t));
    return true;
  }

  static std::set<std::string> unknown_names(const Expr& e) {
    std::set<std::string> s;
    for (AtomId a : unknown_atoms(e)) s.insert(atom(a).name);
    return s;
  }

  static Expr derivative(const std::string& name, const std::vector<AtomId>& args, const std::vector<int>& J) {
    Expr d = unknown(name, args);
    for (std::size_t i = 0; i < args.size(); ++i) d = partial(d, args[i], J[i]);
    return d;
  }

  // c U_J + c' W_K + ... = 0, constant c, c' free of the J variables, args(W) within args(U):
  // U := U' - (c'/c) d^(K-J) W, times y^J_y / J_y! for args y of U that W lacks.
  // With `potentialize`, W := d^d_y g first when K_y < J_y.
  bool absorb(const Expr& e, bool potentialize) {
    auto lf = linear_form(e);
    if (!lf) return false;
    const std::set<std::string> before = unknown_names(e);
    for (const auto& [a, c] : lf->coeff) {
      if (!c.variables().empty()) continue;
      const Atom U = atom(a);
      for (const auto& [b, cb] : lf->coeff) {
        const Atom W = atom(b);
        if (W.name == U.name || !subset(cb.variables(), vars_of(U.args))) continue;
        bool cb_free = true;
        for (std::size_t i = 0; i < U.args.size(); ++i)
          if (U.orders[i] > 0 && cb.depends_on(U.args[i])) cb_free = false;
        if (!cb_free) continue;
        std::vector<int> lift(W.args.size(), 0);
        std::vector<int> K = W.orders;
        bool ok = true;
        bool lifted = false;
        for (std::size_t j = 0; j < W.args.size() && ok; ++j) {
          auto pos = std::find(U.args.begin(), U.args.end(), W.args[j]);
          if (pos == U.args.end()) {
            ok = false;
            break;
          }
          const int Jy = U.orders[pos - U.args.begin()];
          if (K[j] < Jy) {
            lift[j] = Jy - K[j];
            lifted = true;
          }
          K[j] += lift[j] - Jy;
        }
        if (!ok || (lifted && !potentialize)) continue;
        const std::string g = lifted ? "_g" : W.name;
        Expr piece = -(cb / c) * derivative(g, W.args, K);
        for (std::size_t i = 0; i < U.args.size(); ++i) {
          if (std::find(W.args.begin(), W.args.end(), U.args[i]) != W.args.end()) continue;
          for (int p = 1; p <= U.orders[i]; ++p) piece = piece * var(U.args[i]) / Expr(p);
        }
        Expr test = lifted ? apply_value(e, W.name, derivative(g, W.args, lift)) : e;
        test = apply_value(test, U.name, unknown(U.name, U.args) + piece);
        std::set<std::string> after = unknown_names(test);
        if (after.count(g) || !std::includes(before.begin(), before.end(), after.begin(), after.end()) || after.size() >= before.size()) continue;
        if (lifted) {
          const Expr gnew = fresh(W.args);
          assign(W.name, derivative(atom(gnew.num().leading().first.factors()[0].first).name, W.args, lift));
          return true;
        }
        const std::vector<AtomId> args = U.args;
        const std::string un = U.name;
        assign(un, fresh(args) + piece);
        return true;
      }
    }
    return false;
  }

  // sum c_i d_y^m L_i U = 0, c_i free of y, L_i free of d_y:
  // U := U' + sum_{j<m} y^j P_j(args \ y) with sum c_i L_i U' = 0.
  bool lower(const Expr& e) {
    auto lf = linear_form(e);
    if (!lf || !lf->rest.is_zero() || lf->coeff.size() < 2) return false;
    const auto names = names_in(*lf);
    if (names.size() != 1) return false;
    const std::string name = *names.begin();
    const std::vector<AtomId> args = fns_.at(name);
    for (std::size_t yi = 0; yi < args.size(); ++yi) {
      const AtomId y = args[yi];
      const int m = atom(lf->coeff.begin()->first).orders[yi];
      if (m == 0) continue;
      bool ok = true;
      for (const auto& [a, c] : lf->coeff)
        if (atom(a).orders[yi] != m || c.depends_on(y)) ok = false;
      if (!ok) continue;
      std::vector<std::pair<std::vector<int>, Expr>> ops;
      for (const auto& [a, c] : lf->coeff) {
        std::vector<int> J = atom(a).orders;
        J[yi] = 0;
        ops.emplace_back(J, c);
      }
      const std::string key = e.str();
      eqs_.erase(std::find_if(eqs_.begin(), eqs_.end(), [&](const Expr& x) { return x.str() == key; }));
      const Expr up = fresh(args);
      const std::string upn = atom(up.num().leading().first.factors()[0].first).name;
      Expr value = up;
      for (int j = 0; j < m; ++j) value += Expr::of_atom(y, j) * fresh(args_without(args, y));
      assign(name, value);
      Expr reduced;
      for (const auto& [J, c] : ops) reduced += c * derivative(upn, args, J);
      eqs_.push_back(reduced);
      return true;
    }
    return false;
  }

  // W enters as c W_K only and y is not an argument of W: add d_y (e / c) = 0.
  bool differentiate_out(const Expr& e) {
    auto lf = linear_form(e);
    if (!lf) return false;
    std::map<std::string, int> count;
    for (const auto& [a, c] : lf->coeff) ++count[atom(a).name];
    const std::set<std::string> before = unknown_names(e);
    for (const auto& [a, c] : lf->coeff) {
      const Atom& W = atom(a);
      if (count[W.name] != 1) continue;
      const std::set<AtomId> wv = vars_of(W.args);
      for (AtomId y : e.variables()) {
        if (wv.count(y)) continue;
        const Expr d = partial(e / c, y);
        const std::set<std::string> after = unknown_names(d);
        if (after.count(W.name) || after.empty()) continue;
        bool fresh_eq = true;
        for (const auto& p : split_equation(d)) {
          for (const auto& q : eqs_)
            if (q == p) fresh_eq = false;
        }
        if (!fresh_eq) continue;
        eqs_.push_back(d);
        return true;
      }
    }
    return false;
  }

  // E1(y, C) + E2(z, C) = 0 with E1 free of z and E2 free of y.
  bool separate_scaled(const Expr& e) {
    auto lf = linear_form(e);
    if (!lf) return false;
    std::set<std::string> tried;
    for (const auto& [a, c] : lf->coeff) {
      if (c.variables().empty() || !tried.insert(c.str()).second) continue;
      const Expr scaled = e / c;
      if (separate(scaled, e)) return true;
    }
    return false;
  }

  bool separate(const Expr& e, const Expr& original) {
    if (!e.is_polynomial()) return false;
    std::vector<std::pair<Monomial, Rational>> terms(e.num().terms().begin(), e.num().terms().end());
    std::vector<std::set<AtomId>> tv;
    for (const auto& [m, c] : terms) {
      std::set<AtomId> s;
      for (const auto& [a, k] : m.factors())
        for (AtomId v : atom(a).vars) s.insert(v);
      tv.push_back(std::move(s));
    }
    const std::set<AtomId> all = e.variables();
    for (AtomId y : all) {
      Poly e1;
      Poly e2;
      std::set<AtomId> v1;
      std::set<AtomId> v2;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        if (tv[i].count(y)) {
          e1.add_term(terms[i].first, terms[i].second);
          v1.insert(tv[i].begin(), tv[i].end());
        } else {
          e2.add_term(terms[i].first, terms[i].second);
          v2.insert(tv[i].begin(), tv[i].end());
        }
      }
      if (e1.is_zero() || e2.is_zero()) continue;
      bool z_found = false;
      for (AtomId z : v2)
        if (!v1.count(z)) z_found = true;
      if (!z_found) continue;
      std::vector<AtomId> common;
      for (AtomId v : v1)
        if (v2.count(v)) common.push_back(v);
      Expr h = common.empty() ? fresh({}) : fresh(common);
      const std::string key = original.str();
      eqs_.erase(std::find_if(eqs_.begin(), eqs_.end(), [&](const Expr& x) { return x.str() == key; }));
      eqs_.push_back(Expr(e1) - h);
      eqs_.push_back(Expr(e2) + h);
      return true;
    }
    return false;
  }

  // ---- result -----------------------------------------------------------------

  SolveResult finish() {
    SolveResult r;
    std::set<std::string> in_residual;
    for (const auto& e : eqs_)
      for (AtomId a : unknown_atoms(e)) in_residual.insert(atom(a).name);
    // free unknowns become constants / parameter functions
    std::map<std::string, Expr> rename;
    int cc = 0;
    std::vector<std::string> free_names;
    for (const auto& n : order_)
      if (fns_.count(n) && !in_residual.count(n)) free_names.push_back(n);
    for (const auto& n : requested_)
      if (fns_.count(n) && !in_residual.count(n)) free_names.push_back(n);
    for (const auto& n : free_names) {
      const auto& args = fns_.at(n);
      if (args.empty()) {
        const AtomId c = constant(opts_.constant_prefix + std::to_string(++cc));
        r.constants.push_back(c);
        rename[n] = var(c);
      } else {
        rename[n] = fresh_parameter(args, {});
      }
    }
    auto fix = [&](Expr v) {
      for (const auto& [n, val] : rename) v = apply_value(v, n, val);
      return v;
    };
    for (const auto& n : requested_) {
      if (values_.count(n)) {
        r.values[n] = fix(values_.at(n));
      } else {
        r.values[n] = fix(unknown(n, fns_.at(n)));
      }
    }
    // keep only parameters still referenced
    std::set<std::string> used;
    for (const auto& [n, v] : r.values)
      for (AtomId a : v.atoms())
        if (is_parameter_atom(a)) used.insert(atom(a).name);
    for (const auto& p : params_)
      if (used.count(p)) r.parameters.push_back(p);
    std::vector<AtomId> consts;
    for (AtomId c : r.constants) {
      bool u = false;
      for (const auto& [n, v] : r.values) u = u || v.contains_atom(c);
      if (u) consts.push_back(c);
    }
    r.constants = consts;
    r.residual = eqs_;
    if (inconsistent_ && r.residual.empty()) r.residual.push_back(Expr(1));
    return r;
  }
};

}  // namespace

SolveResult solve_linear(const std::vector<Expr>& equations, const std::vector<Expr>& unknowns,
                         const SolveOptions& opts) {
  Engine e(equations, unknowns, opts);
  return e.run();
}

}  // namespace conslaw
