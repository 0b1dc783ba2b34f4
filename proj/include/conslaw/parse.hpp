#pragma once

// Parser for the expression DSL.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "conslaw/expr.hpp"

namespace conslaw {

struct KernelDecl {
  std::vector<std::string> args;  // default argument names, e.g. {"u"} or {"t","x"}
  FunctionTraits traits;
};

// Names the parser resolves. Everything else is an unknown identifier.
struct Scope {
  std::set<std::string> constants;
  std::set<std::string> dependents{"u"};
  std::map<std::string, KernelDecl> kernels;
  // Concrete kernels: A(u) -> expression in u.
  std::map<std::string, Expr> definitions;

  // A, B (with Int[...] and primes), alpha, beta (backward heat in t,x),
  // sigma (backward heat in t,v).
  static Scope standard();
  void add_potential(const std::string& name);
  void add_heat_kernel(const std::string& name, const std::string& time, const std::string& space);
};

class ParseError : public ExprError {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : ExprError(msg + " at position " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

Expr parse(const std::string& text, const Scope& scope);

// Antiderivative of a sum of (rational-)power terms in `var`; nullopt if a
// logarithm or a non-power factor would be needed.
std::optional<Expr> integrate_powers(const Expr& e, AtomId var);

}  // namespace conslaw
