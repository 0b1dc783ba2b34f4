#include "conslaw/expr.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace conslaw {

namespace {

class Registry {
 public:
  static Registry& instance() {
    static Registry r;
    return r;
  }

  const Atom& get(AtomId id) const {
    const Atom* chunk = chunks_[id / kChunk].load(std::memory_order_acquire);
    return chunk[id % kChunk];
  }

  AtomId intern(Atom a, bool self_var = false) {
    std::lock_guard lock(mu_);
    if (auto it = by_key_.find(a.key); it != by_key_.end()) return it->second;
    const AtomId id = size_;
    if (id / kChunk >= kChunks) throw ExprError("atom table exhausted");
    Atom* chunk = chunks_[id / kChunk].load(std::memory_order_relaxed);
    if (chunk == nullptr) {
      storage_.push_back(std::make_unique<Atom[]>(kChunk));
      chunk = storage_.back().get();
      chunks_[id / kChunk].store(chunk, std::memory_order_release);
    }
    chunk[id % kChunk] = std::move(a);
    if (self_var) chunk[id % kChunk].vars = {id};
    by_key_.emplace(chunk[id % kChunk].key, id);
    ++size_;
    return id;
  }

 private:
  static constexpr std::size_t kChunk = 4096;
  static constexpr std::size_t kChunks = 4096;
  std::array<std::atomic<Atom*>, kChunks> chunks_{};
  std::vector<std::unique_ptr<Atom[]>> storage_;
  std::unordered_map<std::string, AtomId> by_key_;
  AtomId size_ = 0;
  std::mutex mu_;
};

std::string pad(int v) {
  // Orders may be negative (antiderivatives); offset keeps lexicographic order.
  std::string s = std::to_string(v + 500);
  return std::string(4 - std::min<std::size_t>(4, s.size()), '0') + s;
}

bool all_single_char(const std::vector<AtomId>& args) {
  return std::all_of(args.begin(), args.end(),
                     [](AtomId a) { return atom(a).text.size() == 1; });
}

}  // namespace

const Atom& atom(AtomId id) { return Registry::instance().get(id); }

bool atom_less(AtomId a, AtomId b) {
  if (a == b) return false;
  return atom(a).key < atom(b).key;
}

Rational ratio(long n, long d) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

std::string rational_str(const Rational& r) {
  return r.get_str();
}

// ---- Monomial -----------------------------------------------------------

Monomial::Monomial(std::vector<std::pair<AtomId, int>> factors) {
  std::sort(factors.begin(), factors.end(),
            [](const auto& a, const auto& b) { return atom_less(a.first, b.first); });
  // merge duplicates
  std::vector<std::pair<AtomId, int>> merged;
  for (const auto& f : factors) {
    if (!merged.empty() && merged.back().first == f.first) {
      merged.back().second += f.second;
    } else {
      merged.push_back(f);
    }
  }
  // fold root atoms into their bases
  bool changed = false;
  for (auto& [a, e] : merged) {
    const Atom& at = atom(a);
    if (at.root_degree < 2 || e == 0) continue;
    const int d = at.root_degree;
    int q = e >= 0 ? e / d : -((-e + d - 1) / d);
    if (q != 0) {
      e -= q * d;
      merged.emplace_back(at.root_base, q);
      changed = true;
    }
  }
  if (changed) {
    *this = Monomial(std::move(merged));
    return;
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const auto& f) { return f.second == 0; }),
               merged.end());
  factors_ = std::move(merged);
}

Monomial Monomial::of(AtomId a, int e) { return Monomial({{a, e}}); }

int Monomial::degree() const {
  int d = 0;
  for (const auto& f : factors_) d += f.second;
  return d;
}

int Monomial::exponent(AtomId a) const {
  for (const auto& f : factors_)
    if (f.first == a) return f.second;
  return 0;
}

bool Monomial::nonnegative() const {
  return std::all_of(factors_.begin(), factors_.end(), [](const auto& f) { return f.second > 0; });
}

Monomial Monomial::operator*(const Monomial& o) const {
  if (o.factors_.empty()) return *this;
  if (factors_.empty()) return o;
  std::vector<std::pair<AtomId, int>> all = factors_;
  all.insert(all.end(), o.factors_.begin(), o.factors_.end());
  return Monomial(std::move(all));
}

Monomial Monomial::inverse() const {
  std::vector<std::pair<AtomId, int>> inv = factors_;
  for (auto& f : inv) f.second = -f.second;
  return Monomial(std::move(inv));
}

std::optional<Monomial> Monomial::divide(const Monomial& o) const {
  Monomial q = *this * o.inverse();
  if (!q.nonnegative()) return std::nullopt;
  return q;
}

std::string Monomial::str() const {
  // u^k * pow(u,1/d)^e prints as pow(u,(k*d+e)/d)
  std::map<AtomId, std::pair<int, int>> merged;  // base -> (root degree, root exponent)
  for (const auto& [a, e] : factors_) {
    const Atom& at = atom(a);
    if (at.kind == AtomKind::Root) merged[at.root_base] = {at.root_degree, e};
  }
  std::string out;
  for (const auto& [a, e] : factors_) {
    const Atom& at = atom(a);
    std::string piece;
    if (at.kind == AtomKind::Root) {
      const Rational q = Rational(exponent(at.root_base)) + ratio(e, at.root_degree);
      piece = "pow(" + atom(at.root_base).text + "," + q.get_str() + ")";
    } else if (merged.count(a)) {
      continue;
    } else {
      piece = at.text;
      if (e != 1) piece += "^" + std::to_string(e);
    }
    if (!out.empty()) out += "*";
    out += piece;
  }
  return out;
}

bool MonomialLess::operator()(const Monomial& a, const Monomial& b) const {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  const auto& fa = a.factors();
  const auto& fb = b.factors();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < fa.size() || j < fb.size()) {
    if (j == fb.size() || (i < fa.size() && atom_less(fa[i].first, fb[j].first))) {
      // atom present in a only: exponent vs 0
      return fa[i].second < 0;
    }
    if (i == fa.size() || atom_less(fb[j].first, fa[i].first)) {
      return fb[j].second > 0;
    }
    if (fa[i].second != fb[j].second) return fa[i].second < fb[j].second;
    ++i;
    ++j;
  }
  return false;
}

// ---- Poly ---------------------------------------------------------------

// mpq values built from (num, den) pairs are not canonical until asked.
Poly::Poly(const Rational& c) : Poly(Monomial{}, c) {}

Poly::Poly(const Monomial& m, const Rational& c) {
  Rational cc = c;
  cc.canonicalize();
  if (cc != 0) terms_.emplace(m, cc);
}

bool Poly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

void Poly::add_term(const Monomial& m, const Rational& c) {
  Rational cc = c;
  cc.canonicalize();
  if (cc == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, cc);
  if (!inserted) {
    it->second += cc;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly& Poly::operator+=(const Poly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  r += o;
  return r;
}

Poly Poly::operator-() const {
  Poly r = *this;
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

Poly Poly::operator-(const Poly& o) const { return *this + (-o); }

Poly Poly::operator*(const Rational& c) const {
  if (c == 0) return {};
  Poly r = *this;
  for (auto& [m, k] : r.terms_) k *= c;
  return r;
}

Poly Poly::operator*(const Monomial& m) const {
  Poly r;
  for (const auto& [mm, c] : terms_) r.add_term(mm * m, c);
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  Poly r;
  for (const auto& [m1, c1] : terms_)
    for (const auto& [m2, c2] : o.terms_) r.add_term(m1 * m2, c1 * c2);
  return r;
}

bool operator<(const Poly& a, const Poly& b) {
  auto ia = a.terms_.rbegin();
  auto ib = b.terms_.rbegin();
  MonomialLess less;
  for (; ia != a.terms_.rend() && ib != b.terms_.rend(); ++ia, ++ib) {
    if (less(ia->first, ib->first)) return true;
    if (less(ib->first, ia->first)) return false;
    if (ia->second != ib->second) return ia->second < ib->second;
  }
  return ia == a.terms_.rend() && ib != b.terms_.rend();
}

std::optional<Poly> Poly::exact_divide(const Poly& d) const {
  if (d.is_zero()) return std::nullopt;
  if (is_zero()) return Poly{};
  // shift to nonnegative exponents
  std::map<AtomId, int> low;
  for (const auto& [m, c] : terms_)
    for (const auto& [a, e] : m.factors())
      if (e < 0) low[a] = std::min(low[a], e);
  std::vector<std::pair<AtomId, int>> shift_f;
  for (const auto& [a, e] : low) shift_f.emplace_back(a, -e);
  const Monomial shift(shift_f);
  Poly r = *this * shift;
  Poly q;
  const auto& [ld_m, ld_c] = d.leading();
  std::size_t guard = 0;
  while (!r.is_zero()) {
    if (++guard > 100000) return std::nullopt;
    const auto& [lr_m, lr_c] = r.leading();
    auto qm = lr_m.divide(ld_m);
    if (!qm) return std::nullopt;
    const Rational qc = lr_c / ld_c;
    q.add_term(*qm, qc);
    Poly sub = d * *qm * qc;
    Poly next = r - sub;
    // The leading term must cancel; otherwise root folding interfered.
    if (!next.is_zero() && !MonomialLess{}(next.leading().first, lr_m)) return std::nullopt;
    r = std::move(next);
  }
  return q * shift.inverse();
}

namespace {

std::string coeff_prefix(const Rational& c, bool has_monomial) {
  if (!has_monomial) return rational_str(c);
  if (c == 1) return "";
  return rational_str(c) + "*";
}

}  // namespace

std::string Poly::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [m, c] = *it;
    const bool neg = c < 0;
    const Rational a = neg ? Rational(-c) : c;
    std::string body = coeff_prefix(a, !m.empty()) + m.str();
    if (first) {
      out += neg ? "-" + body : body;
      first = false;
    } else {
      out += neg ? " - " + body : " + " + body;
    }
  }
  return out;
}

// ---- primitive decomposition ---------------------------------------------

namespace {

struct PrimitiveParts {
  Rational content;
  Monomial mono;
  Poly prim;
};

PrimitiveParts primitive_parts(const Poly& p) {
  assert(!p.is_zero());
  std::map<AtomId, int> lo;
  std::map<AtomId, int> count;
  for (const auto& [m, c] : p.terms())
    for (const auto& [a, e] : m.factors()) {
      auto [it, ins] = lo.try_emplace(a, e);
      if (!ins) it->second = std::min(it->second, e);
      ++count[a];
    }
  std::vector<std::pair<AtomId, int>> f;
  for (const auto& [a, e] : lo) {
    const int m = count[a] == static_cast<int>(p.size()) ? e : std::min(e, 0);
    if (m != 0) f.emplace_back(a, m);
  }
  Monomial mono(f);
  Poly q = p * mono.inverse();
  const Rational lc = q.leading().second;
  q = q * Rational(1 / lc);
  return {lc, mono, q};
}

Expr make_expr(Poly num, std::vector<DenFactor> den);

}  // namespace

// ---- Expr -----------------------------------------------------------------

Expr::Expr() = default;
Expr::Expr(long v) : num_(Rational(v)) {}
Expr::Expr(const Rational& v) : num_(v) {}
Expr::Expr(Poly p) : num_(std::move(p)) {}
Expr::Expr(Poly num, std::vector<DenFactor> den) { *this = make_expr(std::move(num), std::move(den)); }

Expr Expr::of_atom(AtomId a, int e) { return Expr(Poly(Monomial::of(a, e), 1)); }

Poly Expr::den_poly() const {
  Poly d(1);
  for (const auto& f : den_)
    for (int k = 0; k < f.mult; ++k) d = d * f.poly;
  return d;
}

std::optional<Rational> Expr::as_rational() const {
  if (!den_.empty()) return std::nullopt;
  if (num_.is_zero()) return Rational(0);
  if (!num_.is_constant()) return std::nullopt;
  return num_.terms().begin()->second;
}

namespace {

void collect_atoms(const Poly& p, std::set<AtomId>& out) {
  for (const auto& [m, c] : p.terms())
    for (const auto& [a, e] : m.factors()) out.insert(a);
}

Expr make_expr(Poly num, std::vector<DenFactor> den) {
  Expr out;
  if (num.is_zero()) return out;
  std::vector<DenFactor> factors;
  for (auto& f : den) {
    if (f.mult == 0) continue;
    if (f.poly.is_zero()) throw ExprError("division by zero");
    PrimitiveParts pp = primitive_parts(f.poly);
    // c*m*prim with multiplicity k: num gets (c*m)^-k
    for (int k = 0; k < f.mult; ++k) num = num * pp.mono.inverse() * Rational(1 / pp.content);
    for (int k = 0; k < -f.mult; ++k) num = num * pp.mono * pp.content;
    if (pp.prim.is_constant()) continue;
    if (f.mult < 0) {
      for (int k = 0; k < -f.mult; ++k) num = num * pp.prim;
      continue;
    }
    auto it = std::find_if(factors.begin(), factors.end(),
                           [&](const DenFactor& g) { return g.poly == pp.prim; });
    if (it != factors.end()) {
      it->mult += f.mult;
    } else {
      factors.push_back({pp.prim, f.mult});
    }
  }
  // cancel
  for (auto& f : factors) {
    while (f.mult > 0) {
      auto q = num.exact_divide(f.poly);
      if (!q) break;
      num = std::move(*q);
      --f.mult;
    }
  }
  factors.erase(std::remove_if(factors.begin(), factors.end(),
                               [](const DenFactor& f) { return f.mult == 0; }),
                factors.end());
  std::sort(factors.begin(), factors.end(),
            [](const DenFactor& a, const DenFactor& b) { return a.poly < b.poly; });
  return Expr::from_canonical(std::move(num), std::move(factors));
}

// Combine two denominators into their lcm; returns multipliers for each side.
struct Lcm {
  std::vector<DenFactor> den;
  Poly mul_a{Rational(1)};
  Poly mul_b{Rational(1)};
};

Lcm lcm(const std::vector<DenFactor>& a, const std::vector<DenFactor>& b) {
  Lcm r;
  r.den = a;
  for (const auto& f : b) {
    auto it = std::find_if(r.den.begin(), r.den.end(),
                           [&](const DenFactor& g) { return g.poly == f.poly; });
    if (it == r.den.end()) {
      r.den.push_back(f);
      for (int k = 0; k < f.mult; ++k) r.mul_a = r.mul_a * f.poly;
    } else if (it->mult < f.mult) {
      for (int k = it->mult; k < f.mult; ++k) r.mul_a = r.mul_a * f.poly;
      it->mult = f.mult;
    }
  }
  for (const auto& f : a) {
    auto it = std::find_if(b.begin(), b.end(), [&](const DenFactor& g) { return g.poly == f.poly; });
    const int mb = it == b.end() ? 0 : it->mult;
    for (int k = mb; k < f.mult; ++k) r.mul_b = r.mul_b * f.poly;
  }
  return r;
}

}  // namespace

std::set<AtomId> Expr::atoms() const {
  std::set<AtomId> out;
  collect_atoms(num_, out);
  for (const auto& f : den_) collect_atoms(f.poly, out);
  return out;
}

std::set<AtomId> Expr::variables() const {
  std::set<AtomId> out;
  for (AtomId a : atoms())
    for (AtomId v : atom(a).vars) out.insert(v);
  return out;
}

bool Expr::depends_on(AtomId v) const {
  for (AtomId a : atoms()) {
    const auto& vs = atom(a).vars;
    if (std::find(vs.begin(), vs.end(), v) != vs.end()) return true;
  }
  return false;
}

bool Expr::contains_atom(AtomId a) const {
  const auto s = atoms();
  return s.count(a) != 0;
}

Expr Expr::operator-() const {
  Expr r = *this;
  r.num_ = -r.num_;
  return r;
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.den_.empty() && b.den_.empty()) return Expr(a.num_ + b.num_);
  Lcm l = lcm(a.den_, b.den_);
  return Expr(a.num_ * l.mul_a + b.num_ * l.mul_b, std::move(l.den));
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr{};
  if (a.den_.empty() && b.den_.empty()) return Expr(a.num_ * b.num_);
  std::vector<DenFactor> den = a.den_;
  den.insert(den.end(), b.den_.begin(), b.den_.end());
  return Expr(a.num_ * b.num_, std::move(den));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_zero()) throw ExprError("division by zero");
  if (a.is_zero()) return Expr{};
  std::vector<DenFactor> den = a.den_;
  den.push_back({b.num_, 1});
  return Expr(a.num_ * b.den_poly(), std::move(den));
}

Expr Expr::pow(int e) const {
  if (e == 0) return Expr(1);
  if (e < 0) return Expr(1) / pow(-e);
  Expr r(1);
  Expr base = *this;
  while (e > 0) {
    if (e & 1) r = r * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return r;
}

std::string Expr::str() const {
  if (den_.empty()) return num_.str();
  std::string n = num_.str();
  if (num_.size() > 1) n = "(" + n + ")";
  std::string d;
  const bool single = den_.size() == 1 && den_[0].mult == 1;
  for (const auto& f : den_) {
    if (!d.empty()) d += "*";
    d += "(" + f.poly.str() + ")";
    if (f.mult != 1) d += "^" + std::to_string(f.mult);
  }
  return n + "/" + (single ? d : "(" + d + ")");
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.num_ == b.num_ && a.den_.size() == b.den_.size()) {
    bool same = true;
    for (std::size_t i = 0; i < a.den_.size() && same; ++i)
      same = a.den_[i].poly == b.den_[i].poly && a.den_[i].mult == b.den_[i].mult;
    if (same) return true;
  }
  return (a - b).is_zero();
}

bool operator<(const Expr& a, const Expr& b) {
  if (a.num_ < b.num_) return true;
  if (b.num_ < a.num_) return false;
  if (a.den_.size() != b.den_.size()) return a.den_.size() < b.den_.size();
  for (std::size_t i = 0; i < a.den_.size(); ++i) {
    if (a.den_[i].poly < b.den_[i].poly) return true;
    if (b.den_[i].poly < a.den_[i].poly) return false;
    if (a.den_[i].mult != b.den_[i].mult) return a.den_[i].mult < b.den_[i].mult;
  }
  return false;
}

Expr normalize(const Expr& e) { return e; }

// ---- atom construction ----------------------------------------------------

namespace {

AtomId intern_with_vars(Atom a, bool self_var) {
  return Registry::instance().intern(std::move(a), self_var);
}

std::string jet_text(const std::string& dep, int dx, int dt) {
  if (dx == 0 && dt == 0) return dep;
  if (dt == 0 && dx >= 5) return dep + "[" + std::to_string(dx) + "]";
  return dep + "_" + std::string(dt, 't') + std::string(dx, 'x');
}

}  // namespace

AtomId independent(const std::string& name) {
  Atom a;
  a.kind = AtomKind::Independent;
  a.name = name;
  a.key = "1" + name;
  a.text = name;
  return intern_with_vars(std::move(a), true);
}

AtomId jet(const std::string& dep, int dx, int dt) {
  if (dx < 0 || dt < 0) throw ExprError("negative jet order");
  Atom a;
  a.kind = AtomKind::Jet;
  a.name = dep;
  a.dx = dx;
  a.dt = dt;
  a.key = "2" + dep + ":" + pad(dx + dt) + pad(dt);
  a.text = jet_text(dep, dx, dt);
  return intern_with_vars(std::move(a), true);
}

AtomId constant(const std::string& name) {
  Atom a;
  a.kind = AtomKind::Constant;
  a.name = name;
  a.key = "0" + name;
  a.text = name;
  return Registry::instance().intern(std::move(a));
}

Expr t_var() { return Expr::of_atom(independent("t")); }
Expr x_var() { return Expr::of_atom(independent("x")); }

Expr var(AtomId a) { return Expr::of_atom(a); }

AtomId root_atom(AtomId base, int degree) {
  if (degree < 2) throw ExprError("root degree must be at least 2");
  Atom a;
  a.kind = AtomKind::Root;
  a.root_base = base;
  a.root_degree = degree;
  a.key = "3" + atom(base).key + "/" + pad(degree);
  a.text = "pow(" + atom(base).text + ",1/" + std::to_string(degree) + ")";
  a.vars = atom(base).vars;
  return Registry::instance().intern(std::move(a));
}

Expr rational_power(AtomId base, const Rational& exponent) {
  Rational q = exponent;
  q.canonicalize();
  const Atom& b = atom(base);
  if (b.kind != AtomKind::Independent && b.kind != AtomKind::Jet && b.kind != AtomKind::Constant)
    throw ExprError("rational power of a non-variable");
  if (q.get_den() == 1) return Expr::of_atom(base, static_cast<int>(q.get_num().get_si()));
  const int d = static_cast<int>(q.get_den().get_si());
  const int p = static_cast<int>(q.get_num().get_si());
  return Expr(Poly(Monomial::of(root_atom(base, d), p), 1));
}

namespace {

std::string function_text(const Atom& a) {
  const bool single = a.args.size() == 1;
  std::string argtext;
  if (single) {
    const std::string v = atom(a.args[0]).text;
    if (a.scale == 1 && a.shift == 0) {
      argtext = v;
    } else {
      Poly p(Monomial::of(a.args[0]), a.scale);
      p.add_term(Monomial{}, a.shift);
      argtext = p.str();
    }
  } else {
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) argtext += ",";
      argtext += atom(a.args[i]).text;
    }
  }
  if (single && a.traits.antiderivative) {
    const int k = a.orders[0];
    const bool plain = a.scale == 1 && a.shift == 0 && atom(a.args[0]).text == "u";
    if (k < 0) {
      std::string base = k == -1 ? "Int[" + a.name + "]" : "Int" + std::to_string(-k) + "[" + a.name + "]";
      return plain ? base : base + "(" + argtext + ")";
    }
    return a.name + std::string(k, 'p') + "(" + argtext + ")";
  }
  std::string suffix;
  const bool any = std::any_of(a.orders.begin(), a.orders.end(), [](int o) { return o != 0; });
  const bool negative = std::any_of(a.orders.begin(), a.orders.end(), [](int o) { return o < 0; });
  if (negative) {
    // antiderivatives of parameter functions: phi_{-v}
    suffix = "_{";
    bool first = true;
    for (std::size_t i = 0; i < a.args.size(); ++i)
      for (int k = 0; k < std::abs(a.orders[i]); ++k) {
        if (!first) suffix += ",";
        suffix += (a.orders[i] < 0 ? "-" : "") + atom(a.args[i]).text;
        first = false;
      }
    suffix += "}";
  } else if (any) {
    if (all_single_char(a.args)) {
      for (std::size_t i = 0; i < a.args.size(); ++i)
        suffix += std::string(a.orders[i], atom(a.args[i]).text[0]);
      suffix = "_" + suffix;
    } else {
      suffix = "_{";
      bool first = true;
      for (std::size_t i = 0; i < a.args.size(); ++i)
        for (int k = 0; k < a.orders[i]; ++k) {
          if (!first) suffix += ",";
          suffix += atom(a.args[i]).text;
          first = false;
        }
      suffix += "}";
    }
  }
  return a.name + suffix + "(" + argtext + ")";
}

}  // namespace

Expr function(const std::string& name, const std::vector<AtomId>& args, std::vector<int> orders,
              const FunctionTraits& traits, const Rational& scale, const Rational& shift) {
  if (orders.size() != args.size()) throw ExprError("function order arity mismatch");
  for (std::size_t i = 0; i < orders.size(); ++i)
    if (orders[i] < 0 && !(i == 0 && traits.antiderivative) && !(traits.parameter && traits.heat_time < 0))
      throw ExprError("negative derivative order for " + name);
  if ((scale != 1 || shift != 0) && args.size() != 1)
    throw ExprError("affine arguments only for single-argument kernels");
  if (scale == 0) throw ExprError("degenerate affine argument");
  int sign = 1;
  if (traits.heat_time >= 0) {
    auto& ot = orders[static_cast<std::size_t>(traits.heat_time)];
    auto& os = orders[static_cast<std::size_t>(traits.heat_space)];
    while (ot > 0) {
      --ot;
      os += 2;
      sign = -sign;
    }
  }
  Atom a;
  a.kind = AtomKind::Function;
  a.name = name;
  a.args = args;
  a.orders = orders;
  a.scale = scale;
  a.shift = shift;
  a.traits = traits;
  std::string key = "4" + name + "(";
  for (AtomId arg : args) key += atom(arg).key + ",";
  key += ")";
  for (int o : orders) key += pad(o);
  if (scale != 1 || shift != 0) key += "@" + scale.get_str() + ":" + shift.get_str();
  if (traits.heat_time >= 0) key += "~" + std::to_string(traits.heat_time) + std::to_string(traits.heat_space);
  if (traits.antiderivative) key += "'";
  if (traits.unknown) key += "?";
  if (traits.parameter) key += "!";
  a.key = key;
  a.text = function_text(a);
  std::set<AtomId> vs;
  for (AtomId arg : args)
    for (AtomId v : atom(arg).vars) vs.insert(v);
  a.vars.assign(vs.begin(), vs.end());
  AtomId id = Registry::instance().intern(std::move(a));
  return Expr(Poly(Monomial::of(id), sign));
}

Expr function(const std::string& name, const std::vector<AtomId>& args, const FunctionTraits& traits) {
  return function(name, args, std::vector<int>(args.size(), 0), traits);
}

Expr function_derivative(AtomId f, const std::vector<int>& orders) {
  const Atom& a = atom(f);
  return function(a.name, a.args, orders, a.traits, a.scale, a.shift);
}

Expr exp(const Expr& arg) {
  if (!arg.is_polynomial()) throw ExprError("exp of a rational expression is not supported");
  Expr out(1);
  for (const auto& [m, c] : arg.num().terms()) {
    const Rational inv(1, c.get_den());
    const int p = static_cast<int>(c.get_num().get_si());
    Poly inner(m, inv);
    Atom a;
    if (inv != 1) {
      // exp(m/q)^q folds into exp(m)
      a.root_base = exp(Expr(Poly(m, 1))).num().leading().first.factors()[0].first;
      a.root_degree = static_cast<int>(c.get_den().get_si());
    }
    a.kind = AtomKind::Exp;
    a.exp_arg = std::make_shared<const Poly>(inner);
    a.key = "5" + inner.str();
    a.text = "exp(" + inner.str() + ")";
    std::set<AtomId> vs;
    for (const auto& [b, e] : m.factors())
      for (AtomId v : atom(b).vars) vs.insert(v);
    a.vars.assign(vs.begin(), vs.end());
    AtomId id = Registry::instance().intern(std::move(a));
    out = out * Expr(Poly(Monomial::of(id, p), 1));
  }
  return out;
}

// ---- calculus -------------------------------------------------------------

namespace {

Poly poly_partial(const Poly& p, AtomId v);

Poly atom_partial(AtomId id, AtomId v) {
  const Atom& a = atom(id);
  if (std::find(a.vars.begin(), a.vars.end(), v) == a.vars.end()) return {};
  switch (a.kind) {
    case AtomKind::Independent:
    case AtomKind::Jet:
      return id == v ? Poly(1) : Poly{};
    case AtomKind::Constant:
      return {};
    case AtomKind::Function: {
      Poly out;
      for (std::size_t i = 0; i < a.args.size(); ++i) {
        Poly inner = atom_partial(a.args[i], v);
        if (inner.is_zero()) continue;
        std::vector<int> ord = a.orders;
        ++ord[i];
        Expr d = function(a.name, a.args, ord, a.traits, a.scale, a.shift);
        out += d.num() * inner * a.scale;
      }
      return out;
    }
    case AtomKind::Exp:
      return poly_partial(*a.exp_arg, v) * Monomial::of(id);
    case AtomKind::Root: {
      Poly inner = atom_partial(a.root_base, v);
      if (inner.is_zero()) return {};
      Poly r(Monomial({{id, 1}, {a.root_base, -1}}), ratio(1, a.root_degree));
      return r * inner;
    }
  }
  return {};
}

Poly poly_partial(const Poly& p, AtomId v) {
  Poly out;
  for (const auto& [m, c] : p.terms()) {
    for (const auto& [a, e] : m.factors()) {
      Poly da = atom_partial(a, v);
      if (da.is_zero()) continue;
      Monomial rest = m * Monomial::of(a, -1);
      out += da * rest * (c * e);
    }
  }
  return out;
}

}  // namespace

Expr partial(const Expr& e, AtomId v) {
  if (e.den().empty()) return Expr(poly_partial(e.num(), v));
  Expr out(poly_partial(e.num(), v), e.den());
  for (const auto& f : e.den()) {
    Poly df = poly_partial(f.poly, v);
    if (df.is_zero()) continue;
    out = out - e * Expr(df * Rational(f.mult)) / Expr(f.poly);
  }
  return out;
}

Expr partial(const Expr& e, AtomId v, int times) {
  Expr out = e;
  for (int i = 0; i < times && !out.is_zero(); ++i) out = partial(out, v);
  return out;
}

// ---- substitution ---------------------------------------------------------

namespace {

using ImageFn = std::function<Expr(AtomId)>;

Expr apply_images(const Expr& e, const ImageFn& image) {
  std::map<AtomId, std::optional<Expr>> cache;  // nullopt: unchanged
  auto img = [&](AtomId a) -> const std::optional<Expr>& {
    auto it = cache.find(a);
    if (it != cache.end()) return it->second;
    Expr r = image(a);
    std::optional<Expr> v;
    if (!(r.is_polynomial() && r.num().size() == 1 && r.num().leading().second == 1 &&
          r.num().leading().first == Monomial::of(a)))
      v = std::move(r);
    return cache.emplace(a, std::move(v)).first->second;
  };
  auto eval_poly = [&](const Poly& p) {
    Poly poly_part;
    Expr rest;
    for (const auto& [m, c] : p.terms()) {
      std::vector<std::pair<AtomId, int>> kept;
      Expr changed(1);
      bool any = false;
      for (const auto& [a, k] : m.factors()) {
        const auto& im = img(a);
        if (!im) {
          kept.emplace_back(a, k);
        } else {
          changed = changed * im->pow(k);
          any = true;
        }
      }
      Monomial km(kept);
      if (!any) {
        poly_part.add_term(km, c);
      } else if (changed.is_polynomial()) {
        poly_part += changed.num() * km * c;
      } else {
        rest = rest + changed * Expr(Poly(km, c));
      }
    }
    return Expr(std::move(poly_part)) + rest;
  };
  Expr out = eval_poly(e.num());
  for (const auto& f : e.den()) out = out / eval_poly(f.poly).pow(f.mult);
  return out;
}

bool is_variable(AtomId a) {
  const auto k = atom(a).kind;
  return k == AtomKind::Independent || k == AtomKind::Jet;
}

// Exact d-th root of a rational, if it exists.
std::optional<Rational> rational_root(const Rational& c, int d) {
  if (c < 0 && d % 2 == 0) return std::nullopt;
  mpz_class n = abs(c.get_num());
  mpz_class m = c.get_den();
  mpz_class rn;
  mpz_class rm;
  if (mpz_root(rn.get_mpz_t(), n.get_mpz_t(), static_cast<unsigned long>(d)) == 0) return std::nullopt;
  if (mpz_root(rm.get_mpz_t(), m.get_mpz_t(), static_cast<unsigned long>(d)) == 0) return std::nullopt;
  Rational r(rn, rm);
  r.canonicalize();
  return c < 0 ? Rational(-r) : r;
}

Expr substitute_atom(AtomId id, const std::map<AtomId, Expr>& b,
                     const std::function<Expr(const Expr&)>& recurse) {
  if (auto it = b.find(id); it != b.end()) return it->second;
  const Atom& a = atom(id);
  switch (a.kind) {
    case AtomKind::Independent:
    case AtomKind::Jet:
    case AtomKind::Constant:
      return Expr::of_atom(id);
    case AtomKind::Function: {
      bool touched = false;
      for (AtomId arg : a.args) touched = touched || b.count(arg) != 0;
      if (!touched) return Expr::of_atom(id);
      if (a.args.size() == 1) {
        const Expr im = b.at(a.args[0]);
        if (im.is_polynomial()) {
          AtomId w = 0;
          Rational c = 0;
          Rational s = 0;
          bool ok = true;
          for (const auto& [m, k] : im.num().terms()) {
            if (m.empty()) {
              s = k;
            } else if (m.factors().size() == 1 && m.factors()[0].second == 1 &&
                       is_variable(m.factors()[0].first) && c == 0) {
              w = m.factors()[0].first;
              c = k;
            } else {
              ok = false;
            }
          }
          if (ok && c != 0)
            return function(a.name, {w}, a.orders, a.traits, a.scale * c, a.scale * s + a.shift);
        }
        throw ExprError("cannot substitute " + im.str() + " into " + a.text);
      }
      std::vector<AtomId> args;
      for (AtomId arg : a.args) {
        auto it = b.find(arg);
        if (it == b.end()) {
          args.push_back(arg);
          continue;
        }
        const Expr& im = it->second;
        if (!(im.is_polynomial() && im.num().size() == 1 && im.num().leading().second == 1 &&
              im.num().leading().first.factors().size() == 1 &&
              im.num().leading().first.factors()[0].second == 1 &&
              is_variable(im.num().leading().first.factors()[0].first)))
          throw ExprError("cannot substitute " + im.str() + " into " + a.text);
        args.push_back(im.num().leading().first.factors()[0].first);
      }
      return function(a.name, args, a.orders, a.traits);
    }
    case AtomKind::Exp: {
      Expr arg = recurse(Expr(*a.exp_arg));
      return exp(arg);
    }
    case AtomKind::Root: {
      if (b.count(a.root_base) == 0) return Expr::of_atom(id);
      const Expr im = b.at(a.root_base);
      if (im.is_polynomial() && im.num().size() == 1) {
        const auto& [m, c] = im.num().leading();
        auto rc = rational_root(c, a.root_degree);
        if (rc) {
          Expr out(*rc);
          for (const auto& [f, k] : m.factors()) out = out * rational_power(f, ratio(k, a.root_degree));
          return out;
        }
      }
      throw ExprError("cannot take root of " + im.str());
    }
  }
  return Expr::of_atom(id);
}

}  // namespace

Expr substitute(const Expr& e, const std::map<AtomId, Expr>& bindings) {
  if (bindings.empty()) return e;
  std::function<Expr(const Expr&)> rec = [&](const Expr& x) { return substitute(x, bindings); };
  return apply_images(e, [&](AtomId a) {
    const auto& vs = atom(a).vars;
    bool hit = bindings.count(a) != 0;
    for (AtomId v : vs) hit = hit || bindings.count(v) != 0;
    if (!hit) return Expr::of_atom(a);
    return substitute_atom(a, bindings, rec);
  });
}

Expr replace_atoms(const Expr& e, const std::map<AtomId, Expr>& bindings) {
  if (bindings.empty()) return e;
  return apply_images(e, [&](AtomId a) {
    auto it = bindings.find(a);
    return it == bindings.end() ? Expr::of_atom(a) : it->second;
  });
}

std::map<int, Expr> coefficients_in(const Expr& e, AtomId a) {
  for (const auto& f : e.den())
    for (const auto& [m, c] : f.poly.terms())
      if (m.exponent(a) != 0) throw ExprError("denominator depends on " + atom(a).text);
  std::map<int, Poly> parts;
  for (const auto& [m, c] : e.num().terms()) {
    const int k = m.exponent(a);
    parts[k].add_term(m * Monomial::of(a, -k), c);
  }
  std::map<int, Expr> out;
  for (auto& [k, p] : parts) out.emplace(k, Expr(std::move(p), e.den()));
  return out;
}

Expr primitive_part(const Expr& e) {
  if (e.is_zero()) return e;
  const Poly& p = e.num();
  std::map<AtomId, int> lo;
  std::map<AtomId, std::size_t> count;
  for (const auto& [m, c] : p.terms())
    for (const auto& [a, k] : m.factors()) {
      if (atom(a).traits.unknown) continue;
      auto [it, ins] = lo.try_emplace(a, k);
      if (!ins) it->second = std::min(it->second, k);
      ++count[a];
    }
  std::vector<std::pair<AtomId, int>> f;
  for (const auto& [a, k] : lo) {
    const int m = count[a] == p.size() ? k : std::min(k, 0);
    if (m != 0) f.emplace_back(a, -m);
  }
  Poly q = p * Monomial(f);
  return Expr(q * Rational(1 / q.leading().second));
}

Rational evaluate(const Expr& e, const std::map<AtomId, Rational>& values) {
  auto eval_poly = [&](const Poly& p) {
    Rational out = 0;
    for (const auto& [m, c] : p.terms()) {
      Rational term = c;
      for (const auto& [a, k] : m.factors()) {
        auto it = values.find(a);
        if (it == values.end()) throw ExprError("no value for " + atom(a).text);
        if (it->second == 0 && k < 0) throw ExprError("evaluation hits a pole");
        for (int i = 0; i < std::abs(k); ++i) term = k > 0 ? Rational(term * it->second) : Rational(term / it->second);
      }
      out += term;
    }
    return out;
  };
  Rational num = eval_poly(e.num());
  for (const auto& f : e.den()) {
    Rational d = eval_poly(f.poly);
    if (d == 0) throw ExprError("evaluation hits a pole");
    for (int i = 0; i < f.mult; ++i) num /= d;
  }
  return num;
}

}  // namespace conslaw
