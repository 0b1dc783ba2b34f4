#include "conslaw/jet.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace conslaw {

int ConservedVector::order() const {
  // Base variable is whichever jet is not a potential; callers use jet_order
  // with an explicit name when it matters.
  return std::max(jet_order(F, "u"), jet_order(G, "u"));
}

ConservedVector operator+(const ConservedVector& a, const ConservedVector& b) {
  return {a.F + b.F, a.G + b.G, ""};
}

ConservedVector operator-(const ConservedVector& a, const ConservedVector& b) {
  return {a.F - b.F, a.G - b.G, ""};
}

ConservedVector operator*(const Expr& c, const ConservedVector& a) { return {c * a.F, c * a.G, ""}; }

int jet_order(const Expr& e, const std::string& dep) {
  int k = -1;
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    if (a.kind == AtomKind::Jet && a.name == dep) k = std::max(k, a.dx + a.dt);
  }
  return k;
}

// ---- off-shell calculus -----------------------------------------------------

namespace {

AtomId shifted(AtomId v, Axis axis) {
  const Atom& a = atom(v);
  return axis == Axis::X ? jet(a.name, a.dx + 1, a.dt) : jet(a.name, a.dx, a.dt + 1);
}

AtomId axis_var(Axis axis) { return independent(axis == Axis::X ? "x" : "t"); }

}  // namespace

Expr total_derivative(const Expr& e, Axis axis) {
  Expr out;
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    if (a.kind == AtomKind::Independent) {
      if (v == axis_var(axis)) out += partial(e, v);
    } else {
      Expr p = partial(e, v);
      if (!p.is_zero()) out += p * var(shifted(v, axis));
    }
  }
  return out;
}

Expr total_derivative(const Expr& e, Axis axis, const EvolutionSystem& sys) {
  return axis == Axis::X ? sys.dx(sys.reduce(e)) : sys.dt(sys.reduce(e));
}

Expr euler_operator(const Expr& e, const std::string& dep) {
  Expr out;
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    if (a.kind != AtomKind::Jet || a.name != dep) continue;
    Expr term = partial(e, v);
    for (int i = 0; i < a.dx; ++i) term = -total_derivative(term, Axis::X);
    for (int i = 0; i < a.dt; ++i) term = -total_derivative(term, Axis::T);
    out += term;
  }
  return out;
}

// ---- EvolutionSystem --------------------------------------------------------

struct EvolutionSystem::Memo {
  std::mutex mu;
  std::map<AtomId, Expr> jets;
};

EvolutionSystem::EvolutionSystem(std::string dep, Expr rhs)
    : dep_(std::move(dep)), rhs_(std::move(rhs)), memo_(std::make_shared<Memo>()) {}

const Potential* EvolutionSystem::potential(const std::string& name) const {
  for (const auto& p : potentials_)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<std::string> EvolutionSystem::dependents() const {
  std::vector<std::string> out{dep_};
  for (const auto& p : potentials_) out.push_back(p.name);
  return out;
}

EvolutionSystem EvolutionSystem::with_potential(const std::string& name, const ConservedVector& cv,
                                                int level) const {
  if (name == dep_ || potential(name)) throw ExprError("duplicate dependent variable " + name);
  EvolutionSystem s = *this;
  s.memo_ = std::make_shared<Memo>();
  Potential p;
  p.name = name;
  p.x_rule = reduce(cv.F);
  p.t_rule = reduce(-cv.G);
  p.source = cv;
  p.level = level;
  s.potentials_.push_back(std::move(p));
  return s;
}

EvolutionSystem EvolutionSystem::without_potentials() const { return EvolutionSystem(dep_, rhs_); }

bool EvolutionSystem::is_free(AtomId v) const {
  const Atom& a = atom(v);
  if (a.kind != AtomKind::Jet) return true;
  if (a.name == dep_) return a.dt == 0;
  if (potential(a.name)) return a.dx == 0 && a.dt == 0;
  return true;
}

Expr EvolutionSystem::dx(const Expr& e) const {
  Expr out;
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    Expr p = partial(e, v);
    if (p.is_zero()) continue;
    if (a.kind == AtomKind::Independent) {
      if (a.name == "x") out += p;
    } else {
      out += p * reduce_jet(shifted(v, Axis::X));
    }
  }
  return out;
}

Expr EvolutionSystem::dt(const Expr& e) const {
  Expr out;
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    Expr p = partial(e, v);
    if (p.is_zero()) continue;
    if (a.kind == AtomKind::Independent) {
      if (a.name == "t") out += p;
    } else {
      out += p * reduce_jet(shifted(v, Axis::T));
    }
  }
  return out;
}

Expr EvolutionSystem::reduce_jet(AtomId v) const {
  if (is_free(v)) return var(v);
  {
    std::lock_guard lock(memo_->mu);
    if (auto it = memo_->jets.find(v); it != memo_->jets.end()) return it->second;
  }
  const Atom& a = atom(v);
  Expr r;
  if (a.name == dep_) {
    // u_{k,m}: innermost first, u_{0,1} = rhs
    if (a.dt == 1 && a.dx == 0) {
      r = rhs_;
    } else if (a.dx > 0) {
      r = dx(reduce_jet(jet(a.name, a.dx - 1, a.dt)));
    } else {
      r = dt(reduce_jet(jet(a.name, 0, a.dt - 1)));
    }
  } else {
    const Potential* p = potential(a.name);
    if (a.dx == 1 && a.dt == 0) {
      r = p->x_rule;
    } else if (a.dx == 0 && a.dt == 1) {
      r = p->t_rule;
    } else if (a.dx > 0) {
      r = dx(reduce_jet(jet(a.name, a.dx - 1, a.dt)));
    } else {
      r = dt(reduce_jet(jet(a.name, 0, a.dt - 1)));
    }
  }
  std::lock_guard lock(memo_->mu);
  memo_->jets.emplace(v, r);
  return r;
}

Expr EvolutionSystem::reduce(const Expr& e) const {
  std::map<AtomId, Expr> b;
  for (AtomId v : e.variables())
    if (!is_free(v)) b.emplace(v, reduce_jet(v));
  if (b.empty()) return e;
  return substitute(e, b);
}

// ---- checks and actions -------------------------------------------------------

AdjointCheck adjoint_symmetry_check(const Expr& lambda, const EvolutionSystem& sys) {
  const std::string& u = sys.dependent();
  const Expr L = var(jet(u, 0, 1)) - sys.rhs();
  Expr r = sys.reduce(euler_operator(lambda * L, u));
  return {r.is_zero(), r};
}

namespace {

Expr D(const Expr& e, Axis a) { return total_derivative(e, a); }

}  // namespace

Expr prolongation_coefficient(const VectorField& X, int dx, int dt) {
  if (dx == 0 && dt == 0) return X.eta;
  // eta^{J,i} = D_i eta^J - (D_i xi^t) u_{J,t} - (D_i xi^x) u_{J,x}
  Axis axis = dx > 0 ? Axis::X : Axis::T;
  const int pdx = dx > 0 ? dx - 1 : dx;
  const int pdt = dx > 0 ? dt : dt - 1;
  Expr prev = prolongation_coefficient(X, pdx, pdt);
  return D(prev, axis) - D(X.xi_t, axis) * var(jet(X.dep, pdx, pdt + 1)) -
         D(X.xi_x, axis) * var(jet(X.dep, pdx + 1, pdt));
}

Expr apply_prolonged(const VectorField& X, const Expr& e) {
  Expr out;
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    Expr p = partial(e, v);
    if (p.is_zero()) continue;
    if (a.kind == AtomKind::Independent) {
      out += (a.name == "t" ? X.xi_t : X.xi_x) * p;
    } else if (a.name == X.dep) {
      out += prolongation_coefficient(X, a.dx, a.dt) * p;
    } else {
      throw ExprError("vector field does not act on " + a.text);
    }
  }
  return out;
}

ConservedVector symmetry_action(const ConservedVector& cv, const VectorField& X, const EvolutionSystem& sys) {
  // components: index 0 = t (F), 1 = x (G)
  const Expr Fi[2] = {cv.F, cv.G};
  const Expr xi[2] = {X.xi_t, X.xi_x};
  const Axis ax[2] = {Axis::T, Axis::X};
  Expr div_xi = D(xi[0], ax[0]) + D(xi[1], ax[1]);
  Expr out[2];
  for (int i = 0; i < 2; ++i) {
    Expr r = -apply_prolonged(X, Fi[i]);
    for (int j = 0; j < 2; ++j) r += D(xi[i], ax[j]) * Fi[j];
    r -= div_xi * Fi[i];
    out[i] = sys.reduce(r);
  }
  return {out[0], out[1], cv.label.empty() ? "" : "X(" + cv.label + ")"};
}

namespace {

Expr determinant(const std::vector<std::vector<Expr>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Expr out;
  for (std::size_t j = 0; j < n; ++j) {
    if (m[0][j].is_zero()) continue;
    std::vector<std::vector<Expr>> minor;
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<Expr> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) row.push_back(m[i][k]);
      minor.push_back(std::move(row));
    }
    Expr t = m[0][j] * determinant(minor);
    out = j % 2 ? out - t : out + t;
  }
  return out;
}

}  // namespace

Expr wronskian(const std::vector<Expr>& fs, AtomId v) {
  if (fs.empty()) throw ExprError("wronskian of an empty list");
  std::vector<std::vector<Expr>> m(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j) {
    Expr f = fs[j];
    for (std::size_t i = 0; i < fs.size(); ++i) {
      m[i].push_back(f);
      f = partial(f, v);
    }
  }
  return determinant(m);
}

}  // namespace conslaw
