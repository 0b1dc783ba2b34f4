#pragma once

// Exact symbolic expressions over the rationals.
//
// An expression is a quotient N / (P1^k1 * ... * Pm^km) where N is a Laurent
// polynomial in interned atoms and every Pi is a primitive polynomial (no
// monomial content, leading coefficient 1). Atoms are treated as
// algebraically independent generators, so the zero test is exact: an
// expression is zero iff its numerator has no terms.

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conslaw {

using Rational = mpq_class;
using AtomId = std::uint32_t;

class Poly;

enum class AtomKind : std::uint8_t {
  Independent,  // t, x
  Jet,          // u, u_x, u_t, v, w ...  (dependent name + orders)
  Constant,     // declared symbolic constants: eps, c, a ...
  Function,     // kernels A(u), Int[A], alpha(t,x), unknown functions F(t,x,u)
  Exp,          // exp(r * m) for a monomial m
  Root,         // base^(1/d)
};

struct FunctionTraits {
  bool antiderivative = false;  // first argument order may go negative (Int[A])
  int heat_time = -1;           // index of time argument for f_t = -f_yy
  int heat_space = -1;
  bool unknown = false;         // unknown of a determining system
  bool parameter = false;       // free parameter function of a solution family
};

struct Atom {
  AtomKind kind{};
  std::string name;
  int dx = 0;  // Jet: x-order
  int dt = 0;  // Jet: t-order
  std::vector<AtomId> args;
  std::vector<int> orders;
  Rational scale{1};
  Rational shift{0};
  FunctionTraits traits;
  std::shared_ptr<const Poly> exp_arg;
  AtomId root_base = 0;
  int root_degree = 0;

  std::string key;              // total order key
  std::string text;             // printed form
  std::vector<AtomId> vars;     // variables (Independent/Jet atoms) it depends on
};

const Atom& atom(AtomId id);
bool atom_less(AtomId a, AtomId b);

// Monomial: sorted (atom, nonzero exponent) pairs.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<std::pair<AtomId, int>> factors);
  static Monomial of(AtomId a, int e = 1);

  const std::vector<std::pair<AtomId, int>>& factors() const { return factors_; }
  bool empty() const { return factors_.empty(); }
  int degree() const;
  int exponent(AtomId a) const;
  bool nonnegative() const;

  // Product; coefficient adjustments never arise (roots fold into bases).
  Monomial operator*(const Monomial& o) const;
  Monomial inverse() const;
  std::optional<Monomial> divide(const Monomial& o) const;  // nonnegative quotient

  std::string str() const;
  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<std::pair<AtomId, int>> factors_;
};

struct MonomialLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

class Poly {
 public:
  using Terms = std::map<Monomial, Rational, MonomialLess>;

  Poly() = default;
  explicit Poly(const Rational& c);
  Poly(const Monomial& m, const Rational& c);

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  bool is_monomial() const { return terms_.size() == 1; }
  std::size_t size() const { return terms_.size(); }

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator-() const;
  Poly operator*(const Poly& o) const;
  Poly operator*(const Rational& c) const;
  Poly operator*(const Monomial& m) const;
  Poly& operator+=(const Poly& o);

  void add_term(const Monomial& m, const Rational& c);

  // Leading (largest) term.
  const std::pair<const Monomial, Rational>& leading() const { return *terms_.rbegin(); }

  // Exact quotient when `d` divides this polynomial (d primitive, nonnegative).
  std::optional<Poly> exact_divide(const Poly& d) const;

  std::string str() const;
  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }
  friend bool operator<(const Poly& a, const Poly& b);

 private:
  Terms terms_;
};

struct DenFactor {
  Poly poly;
  int mult = 1;
};

class Expr {
 public:
  Expr();
  Expr(long v);  // NOLINT(google-explicit-constructor)
  Expr(int v) : Expr(static_cast<long>(v)) {}  // NOLINT
  Expr(const Rational& v);  // NOLINT
  explicit Expr(Poly p);
  Expr(Poly num, std::vector<DenFactor> den);

  static Expr of_atom(AtomId a, int e = 1);
  // Trusted construction from parts that are already canonical.
  static Expr from_canonical(Poly num, std::vector<DenFactor> den) {
    Expr e;
    e.num_ = std::move(num);
    e.den_ = std::move(den);
    return e;
  }

  const Poly& num() const { return num_; }
  const std::vector<DenFactor>& den() const { return den_; }
  Poly den_poly() const;

  bool is_zero() const { return num_.is_zero(); }
  bool is_polynomial() const { return den_.empty(); }
  std::optional<Rational> as_rational() const;
  bool is_rational_constant() const { return as_rational().has_value(); }

  std::set<AtomId> atoms() const;
  std::set<AtomId> variables() const;  // Independent / Jet atoms it depends on
  bool depends_on(AtomId var) const;
  bool contains_atom(AtomId a) const;

  Expr operator-() const;
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }
  Expr pow(int e) const;

  std::string str() const;
  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }
  friend bool operator<(const Expr& a, const Expr& b);

 private:
  Poly num_;
  std::vector<DenFactor> den_;
};

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A well-posed request whose mathematical precondition fails.
class MathError : public ExprError {
 public:
  using ExprError::ExprError;
};

// ---- atom construction --------------------------------------------------

AtomId independent(const std::string& name);
AtomId jet(const std::string& dep, int dx = 0, int dt = 0);
AtomId constant(const std::string& name);
AtomId root_atom(AtomId base, int degree);

Expr t_var();
Expr x_var();
Expr var(AtomId a);

// Function application with derivative orders. Heat-constrained functions are
// canonicalized (time derivatives traded for space derivatives), so the result
// may carry a sign.
Expr function(const std::string& name, const std::vector<AtomId>& args,
               std::vector<int> orders, const FunctionTraits& traits,
               const Rational& scale = 1, const Rational& shift = 0);
Expr function(const std::string& name, const std::vector<AtomId>& args,
              const FunctionTraits& traits = {});

// exp of a polynomial argument (no denominators).
Expr exp(const Expr& arg);
// base^q for a variable base and rational q.
Expr rational_power(AtomId base, const Rational& q);

// Atom with the same function identity but different derivative orders.
Expr function_derivative(AtomId f, const std::vector<int>& orders);

// ---- calculus -----------------------------------------------------------

// Formal partial derivative with respect to a variable atom.
Expr partial(const Expr& e, AtomId var);
Expr partial(const Expr& e, AtomId var, int times);

// Simultaneous substitution of variable atoms (Independent/Jet/Constant)
// by expressions, followed by renormalization.
Expr substitute(const Expr& e, const std::map<AtomId, Expr>& bindings);

// Substitution of arbitrary atoms by expressions, without recursion into atom
// structure.
Expr replace_atoms(const Expr& e, const std::map<AtomId, Expr>& bindings);

// Expressions are always stored canonically; normalize returns its argument.
Expr normalize(const Expr& e);

// Coefficient of u^k in e when e is viewed as a polynomial in atom `a`
// (numerator only; denominators must be free of `a`).
std::map<int, Expr> coefficients_in(const Expr& e, AtomId a);

// Greatest common monomial and rational content of the numerator; removing
// it yields a primitive equation with the same zero set.
Expr primitive_part(const Expr& e);

// Evaluate every atom at a rational value (used by sampling oracles).
Rational evaluate(const Expr& e, const std::map<AtomId, Rational>& values);

std::string rational_str(const Rational& r);
// n/d in canonical form (gmp requires canonical operands).
Rational ratio(long n, long d);

}  // namespace conslaw
