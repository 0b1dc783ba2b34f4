#include "conslaw/parse.hpp"

#include <cctype>

namespace conslaw {

Scope Scope::standard() {
  Scope s;
  FunctionTraits kt;
  kt.antiderivative = true;
  s.kernels["A"] = {{"u"}, kt};
  s.kernels["B"] = {{"u"}, kt};
  s.add_heat_kernel("alpha", "t", "x");
  s.add_heat_kernel("beta", "t", "x");
  s.add_heat_kernel("sigma", "t", "v");
  return s;
}

void Scope::add_potential(const std::string& name) { dependents.insert(name); }

void Scope::add_heat_kernel(const std::string& name, const std::string& time, const std::string& space) {
  FunctionTraits ht;
  ht.heat_time = 0;
  ht.heat_space = 1;
  ht.parameter = true;
  kernels[name] = {{time, space}, ht};
}

std::optional<Expr> integrate_powers(const Expr& e, AtomId var) {
  if (!e.is_polynomial()) return std::nullopt;
  Expr out;
  for (const auto& [m, c] : e.num().terms()) {
    Rational q = 0;
    std::vector<std::pair<AtomId, int>> rest;
    for (const auto& [a, k] : m.factors()) {
      const Atom& at = atom(a);
      if (a == var) {
        q += k;
      } else if (at.kind == AtomKind::Root && at.root_base == var) {
        q += ratio(k, at.root_degree);
      } else if (std::find(at.vars.begin(), at.vars.end(), var) != at.vars.end()) {
        return std::nullopt;
      } else {
        rest.emplace_back(a, k);
      }
    }
    if (q == -1) return std::nullopt;
    const Rational q1 = q + 1;
    out += Expr(Poly(Monomial(rest), c / q1)) * rational_power(var, q1);
  }
  return out;
}

namespace {

class Parser {
 public:
  Parser(const std::string& text, const Scope& scope) : s_(text), scope_(scope) {}

  Expr run() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  const std::string& s_;
  const Scope& scope_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t p) const { throw ParseError(msg, p); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (eat('+')) {
        e = e + term();
      } else if (eat('-')) {
        e = e - term();
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (eat('*')) {
        e = e * unary();
      } else if (eat('/')) {
        const std::size_t at = pos_;
        Expr d = unary();
        if (d.is_zero()) fail_at("division by zero", at);
        e = e / d;
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }

  Expr power() {
    const std::size_t at = pos_;
    Expr base = primary();
    if (!eat('^')) return base;
    const std::size_t ep = pos_;
    Expr ex = exponent_expr();
    auto q = ex.as_rational();
    if (!q) fail_at("exponent must be a rational constant", ep);
    return raise(base, *q, at);
  }

  Expr exponent_expr() {
    if (eat('-')) return -exponent_expr();
    return power();
  }

  Expr raise(const Expr& base, const Rational& q, std::size_t at) {
    if (q.get_den() == 1) {
      if (base.is_zero() && q < 0) fail_at("division by zero", at);
      return base.pow(static_cast<int>(q.get_num().get_si()));
    }
    if (base.is_polynomial() && base.num().size() == 1) {
      const auto& [m, c] = base.num().leading();
      if (c == 1 && m.factors().size() == 1 && m.factors()[0].second == 1) {
        const AtomKind k = atom(m.factors()[0].first).kind;
        if (k == AtomKind::Independent || k == AtomKind::Jet || k == AtomKind::Constant)
          return rational_power(m.factors()[0].first, q);
      }
    }
    fail_at("rational powers are only supported for variables", at);
  }

  Rational rational_literal() {
    skip();
    bool neg = false;
    if (eat('-')) neg = true;
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a rational literal");
    mpz_class n(s_.substr(start, pos_ - start));
    mpz_class d = 1;
    if (eat('/')) {
      skip();
      const std::size_t ds = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (ds == pos_) fail("expected a denominator");
      d = mpz_class(s_.substr(ds, pos_ - ds));
      if (d == 0) fail("zero denominator");
    }
    Rational r(n, d);
    r.canonicalize();
    return neg ? Rational(-r) : r;
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  std::string suffix() {
    if (pos_ < s_.size() && s_[pos_] == '_') {
      ++pos_;
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("empty derivative suffix");
      return s_.substr(start, pos_ - start);
    }
    return {};
  }

  std::vector<Expr> call_args() {
    std::vector<Expr> args;
    expect('(');
    if (eat(')')) return args;
    do {
      args.push_back(expr());
    } while (eat(','));
    expect(')');
    return args;
  }

  static std::optional<AtomId> as_variable(const Expr& e) {
    if (!e.is_polynomial() || e.num().size() != 1) return std::nullopt;
    const auto& [m, c] = e.num().leading();
    if (c != 1 || m.factors().size() != 1 || m.factors()[0].second != 1) return std::nullopt;
    const AtomId a = m.factors()[0].first;
    const AtomKind k = atom(a).kind;
    if (k != AtomKind::Independent && k != AtomKind::Jet) return std::nullopt;
    return a;
  }

  AtomId name_variable(const std::string& n, std::size_t at) {
    if (n == "t" || n == "x") return independent(n);
    if (scope_.dependents.count(n)) return jet(n);
    fail_at("unknown variable '" + n + "'", at);
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const std::size_t at = pos_;
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return Expr(Rational(mpz_class(s_.substr(start, pos_ - start))));
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("unexpected '") + c + "'");
    std::string name = identifier();
    if (name == "Int" || (name.size() > 3 && name.rfind("Int", 0) == 0 &&
                          std::all_of(name.begin() + 3, name.end(), ::isdigit))) {
      return integral(name, at);
    }
    std::string suf = suffix();
    skip();
    if (name == "exp" && suf.empty()) {
      auto args = call_args();
      if (args.size() != 1) fail_at("exp takes one argument", at);
      if (!args[0].is_polynomial()) fail_at("exp of a rational expression", at);
      return exp(args[0]);
    }
    if (name == "pow" && suf.empty()) {
      expect('(');
      Expr base = expr();
      expect(',');
      const Rational q = rational_literal();
      expect(')');
      return raise(base, q, at);
    }
    if (name == "t" || name == "x") {
      if (!suf.empty()) fail_at("malformed jet index", at);
      return var(independent(name));
    }
    if (scope_.constants.count(name)) {
      if (!suf.empty()) fail_at("derivative of a constant", at);
      return var(constant(name));
    }
    if (scope_.dependents.count(name)) return jet_variable(name, suf, at);
    // kernel with primes: Ap, App, ...
    std::string base = name;
    int primes = 0;
    while (!scope_.kernels.count(base) && !scope_.definitions.count(base) && base.size() > 1 &&
           base.back() == 'p') {
      base.pop_back();
      ++primes;
    }
    if (scope_.definitions.count(base)) {
      if (!suf.empty()) fail_at("malformed kernel derivative", at);
      return defined_kernel(base, primes, at);
    }
    if (auto it = scope_.kernels.find(base); it != scope_.kernels.end()) {
      if (primes > 0 && it->second.args.size() != 1) fail_at("primes on a multi-argument kernel", at);
      return kernel(base, it->second, primes, suf, at);
    }
    fail_at("unknown identifier '" + name + "'", at);
  }

  Expr jet_variable(const std::string& dep, const std::string& suf, std::size_t at) {
    int dx = 0;
    int dt = 0;
    for (char ch : suf) {
      if (ch == 'x') {
        ++dx;
      } else if (ch == 't') {
        ++dt;
      } else {
        fail_at("malformed jet index '" + suf + "'", at);
      }
    }
    if (suf.empty() && pos_ < s_.size() && s_[pos_] == '[') {
      ++pos_;
      skip();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail_at("malformed jet index", at);
      dx = std::stoi(s_.substr(start, pos_ - start));
      expect(']');
    }
    return var(jet(dep, dx, dt));
  }

  Expr integral(const std::string& name, std::size_t at) {
    const int times = name == "Int" ? 1 : std::stoi(name.substr(3));
    expect('[');
    skip();
    const std::string k = identifier();
    expect(']');
    Expr arg = var(jet("u"));
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      auto args = call_args();
      if (args.size() != 1) fail_at("Int[...] takes one argument", at);
      arg = args[0];
    }
    if (auto d = scope_.definitions.find(k); d != scope_.definitions.end()) {
      Expr e = d->second;
      for (int i = 0; i < times; ++i) {
        auto r = integrate_powers(e, jet("u"));
        if (!r) fail_at("cannot integrate the definition of " + k, at);
        e = *r;
      }
      return substitute(e, {{jet("u"), arg}});
    }
    auto it = scope_.kernels.find(k);
    if (it == scope_.kernels.end() || !it->second.traits.antiderivative)
      fail_at("unknown kernel '" + k + "'", at);
    Expr f = function(k, {jet(it->second.args[0])}, {-times}, it->second.traits);
    return apply_args(f, it->second, {arg}, at);
  }

  Expr defined_kernel(const std::string& base, int primes, std::size_t at) {
    auto args = call_args();
    if (args.size() != 1) fail_at("kernel " + base + " takes one argument", at);
    Expr e = scope_.definitions.at(base);
    for (int i = 0; i < primes; ++i) e = partial(e, jet("u"));
    return substitute(e, {{jet("u"), args[0]}});
  }

  Expr apply_args(const Expr& f, const KernelDecl& decl, const std::vector<Expr>& args, std::size_t at) {
    std::map<AtomId, Expr> b;
    for (std::size_t i = 0; i < args.size(); ++i) {
      const AtomId formal = name_variable(decl.args[i], at);
      if (args[i] != var(formal)) b.emplace(formal, args[i]);
    }
    try {
      return substitute(f, b);
    } catch (const ExprError& e) {
      fail_at(e.what(), at);
    }
  }

  Expr kernel(const std::string& name, const KernelDecl& decl, int primes, const std::string& suf,
              std::size_t at) {
    std::vector<Expr> args;
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      args = call_args();
    } else {
      for (const auto& a : decl.args) args.push_back(var(name_variable(a, at)));
    }
    if (args.size() != decl.args.size()) fail_at("wrong number of arguments for " + name, at);
    std::vector<AtomId> formals;
    for (const auto& a : decl.args) formals.push_back(name_variable(a, at));
    std::vector<int> orders(formals.size(), 0);
    if (primes) orders[0] = primes;
    for (char ch : suf) {
      bool found = false;
      for (std::size_t i = 0; i < decl.args.size(); ++i) {
        if (decl.args[i].size() == 1 && decl.args[i][0] == ch) {
          ++orders[i];
          found = true;
        }
      }
      if (!found) fail_at("malformed derivative suffix '" + suf + "'", at);
    }
    Expr f = function(name, formals, orders, decl.traits);
    return apply_args(f, decl, args, at);
  }
};

}  // namespace

Expr parse(const std::string& text, const Scope& scope) {
  Parser p(text, scope);
  return p.run();
}

}  // namespace conslaw
