#include "conslaw/hierarchy.hpp"

namespace conslaw {

namespace {

const std::string kTilde = "~";

// Target variables carry a tilde while source and target coexist.
struct Names {
  std::vector<std::string> deps;  // base first, then potentials

  Expr to_temp(const Expr& e) const { return rename(e, ""); }
  Expr from_temp(const Expr& e) const { return rename(e, kTilde); }

  Expr rename(const Expr& e, const std::string& from_suffix) const {
    const std::string to_suffix = from_suffix.empty() ? kTilde : "";
    std::map<AtomId, Expr> b;
    for (AtomId v : e.variables()) {
      const Atom& a = atom(v);
      if (a.kind == AtomKind::Independent && a.name == "x" + from_suffix) {
        b.emplace(v, var(independent("x" + to_suffix)));
        continue;
      }
      if (a.kind != AtomKind::Jet) continue;
      for (const auto& d : deps)
        if (a.name == d + from_suffix) b.emplace(v, var(jet(d + to_suffix, a.dx, a.dt)));
    }
    return b.empty() ? e : substitute(e, b);
  }
};

bool mentions_source(const Expr& e, const Names& n) {
  for (AtomId v : e.variables()) {
    const Atom& a = atom(v);
    if (a.kind == AtomKind::Independent && a.name == "x") return true;
    if (a.kind == AtomKind::Jet && std::find(n.deps.begin(), n.deps.end(), a.name) != n.deps.end()) return true;
  }
  return false;
}

class Converter {
 public:
  Converter(const EvolutionSystem& src, const PointTransformation& tr) : src_(src) {
    names_.deps = src.dependents();
    for (const auto& [a, e] : tr.inverse) inverse_.emplace(a, names_.to_temp(e));
    lambda_ = src.reduce(total_derivative(tr.x, Axis::X, src));
    if (lambda_.is_zero()) throw ExprError("Jacobian of the transformation vanishes");
    dtX_ = src.reduce(total_derivative(tr.x, Axis::T, src));
    for (const auto& p : src.potentials()) {
      auto it = tr.potentials.find(p.name);
      if (it == tr.potentials.end()) throw ExprError("no image for potential " + p.name);
      const Expr dxV = src.reduce(total_derivative(it->second, Axis::X, src));
      px_[p.name] = convert(dxV / lambda_, 0);
    }
    auto ix = inverse_.find(independent("x"));
    const Expr x_in_target = ix == inverse_.end() ? var(independent("x" + kTilde)) : ix->second;
    lambda_t_ = 1 / dx_target(x_in_target);
  }

  const Names& names() const { return names_; }
  const Expr& lambda() const { return lambda_; }
  const Expr& dtX() const { return dtX_; }
  const std::map<std::string, Expr>& px() const { return px_; }

  // D_t~ of a source expression, on shell.
  Expr dt_target(const Expr& e) const {
    const Expr dt = src_.reduce(total_derivative(e, Axis::T, src_));
    const Expr dx = src_.reduce(total_derivative(e, Axis::X, src_));
    return dt - dtX_ / lambda_ * dx;
  }

  // Source expression in target (temporary) variables; u-jets up to max_order.
  Expr convert(const Expr& e, int max_order = 1 << 20) const {
    Expr r = src_.reduce(e);
    std::map<AtomId, Expr> composite;
    for (const auto& [a, v] : inverse_)
      if (atom(a).kind != AtomKind::Independent && atom(a).kind != AtomKind::Jet) composite.emplace(a, v);
    if (!composite.empty()) r = replace_atoms(r, composite);
    std::map<AtomId, Expr> b;
    for (AtomId v : r.variables()) {
      const Atom& a = atom(v);
      if (a.kind == AtomKind::Jet && a.name == src_.dependent() && a.dx > 0) {
        if (a.dx > max_order) throw ExprError("transformation needs derivatives the inverse cannot supply");
        b.emplace(v, u_jet(a.dx));
      } else if (auto it = inverse_.find(v); it != inverse_.end()) {
        b.emplace(v, it->second);
      }
    }
    if (!b.empty()) r = substitute(r, b);
    if (mentions_source(r, names_)) throw ExprError("inverse does not cover " + r.str());
    return r;
  }

 private:
  Expr dx_target(const Expr& e) const {
    Expr out;
    for (AtomId v : e.variables()) {
      const Atom& a = atom(v);
      const Expr p = partial(e, v);
      if (p.is_zero()) continue;
      if (a.kind == AtomKind::Independent) {
        if (a.name == "x" + kTilde) out += p;
      } else if (a.kind == AtomKind::Jet && a.name == src_.dependent() + kTilde) {
        out += p * var(jet(a.name, a.dx + 1, a.dt));
      } else if (a.kind == AtomKind::Jet) {
        const std::string base = a.name.substr(0, a.name.size() - kTilde.size());
        auto it = px_.find(base);
        if (it == px_.end() || a.dx != 0 || a.dt != 0) throw ExprError("unexpected target jet " + a.text);
        out += p * it->second;
      }
    }
    return out;
  }

  Expr u_jet(int k) const {
    while (static_cast<int>(u_jets_.size()) <= k) {
      if (u_jets_.empty()) {
        auto it = inverse_.find(jet(src_.dependent()));
        if (it == inverse_.end()) throw ExprError("inverse lacks " + src_.dependent());
        u_jets_.push_back(it->second);
      } else {
        u_jets_.push_back(lambda_t_ * dx_target(u_jets_.back()));
      }
    }
    return u_jets_[static_cast<std::size_t>(k)];
  }

  const EvolutionSystem src_;
  Names names_;
  std::map<AtomId, Expr> inverse_;
  Expr lambda_;
  Expr lambda_t_;
  Expr dtX_;
  std::map<std::string, Expr> px_;
  mutable std::vector<Expr> u_jets_;
};

}  // namespace

TransformedSystem apply_point_transformation(const PotentialSystem& ps, const PointTransformation& tr) {
  const EvolutionSystem& src = ps.system;
  auto conv = std::make_shared<Converter>(src, tr);
  const Names& n = conv->names();
  const Expr rhs = n.from_temp(conv->convert(conv->dt_target(tr.u)));
  EvolutionSystem target(src.dependent(), rhs);
  for (const auto& p : src.potentials()) {
    const Expr vt = conv->convert(conv->dt_target(tr.potentials.at(p.name)));
    const ConservedVector source{n.from_temp(conv->px().at(p.name)), -n.from_temp(vt), p.source.label};
    target = target.with_potential(p.name, source, p.level);
  }
  TransformedSystem out{PotentialSystem{target, ps.added}, nullptr};
  out.transport = [conv](const ConservedVector& cv) {
    const Names& nm = conv->names();
    const Expr F = cv.F / conv->lambda();
    const Expr G = cv.G + cv.F * conv->dtX() / conv->lambda();
    return ConservedVector{nm.from_temp(conv->convert(F)), nm.from_temp(conv->convert(G)), cv.label};
  };
  return out;
}

bool same_system(const EvolutionSystem& a, const EvolutionSystem& b) {
  if (a.dependent() != b.dependent() || !(a.rhs() - b.rhs()).is_zero()) return false;
  if (a.potentials().size() != b.potentials().size()) return false;
  for (std::size_t i = 0; i < a.potentials().size(); ++i) {
    const auto& p = a.potentials()[i];
    const auto& q = b.potentials()[i];
    if (p.name != q.name || !b.reduce(p.x_rule - q.x_rule).is_zero() || !b.reduce(p.t_rule - q.t_rule).is_zero())
      return false;
  }
  return true;
}

}  // namespace conslaw
