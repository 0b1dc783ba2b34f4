#pragma once

// Symbolic integration and a rule-based solver for linear determining systems.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conslaw/expr.hpp"

namespace conslaw {

// Antiderivative with respect to `y`, treating every atom free of y as a
// constant. Covers polynomials and roots, exp * polynomial, kernels with an
// antiderivative rule (by parts against powers of y), and derivatives of
// unknown or parameter functions. nullopt when none of these apply.
std::optional<Expr> integrate(const Expr& e, AtomId y);

// An unknown function of a determining system.
Expr unknown(const std::string& name, const std::vector<AtomId>& args);
bool is_unknown_atom(AtomId a);
bool is_parameter_atom(AtomId a);

// Linear decomposition e = sum coeff[atom] * atom + rest over unknown atoms.
struct LinearForm {
  std::map<AtomId, Expr> coeff;
  Expr rest;
};
std::optional<LinearForm> linear_form(const Expr& e);

// Split e = 0 over the variables that are not arguments of any unknown in e.
std::vector<Expr> split_equation(const Expr& e);

struct SolveResult {
  // Values of the requested unknowns, in terms of free constants, parameter
  // functions, and (if incomplete) remaining unknowns.
  std::map<std::string, Expr> values;
  std::vector<AtomId> constants;               // free constants
  std::vector<std::string> parameters;         // free parameter functions
  std::vector<Expr> residual;                  // equations left unsolved
  bool complete() const { return residual.empty(); }
};

struct SolveOptions {
  std::string constant_prefix = "C";
  std::string parameter_prefix = "phi";
  int max_steps = 2000;
};

// `unknowns` are base unknown atoms (created by `unknown`).
SolveResult solve_linear(const std::vector<Expr>& equations, const std::vector<Expr>& unknowns,
                         const SolveOptions& opts = {});

// Replace every derivative atom of the unknown `name` by the corresponding
// derivative of `value`.
Expr apply_value(const Expr& e, const std::string& name, const Expr& value);

}  // namespace conslaw
