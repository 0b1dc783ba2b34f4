#pragma once

// Total derivatives, on-shell reduction, Euler operator, symmetry action.

#include <memory>
#include <string>
#include <vector>

#include "conslaw/expr.hpp"

namespace conslaw {

enum class Axis { T, X };

struct ConservedVector {
  Expr F;  // density
  Expr G;  // flux
  std::string label;
  int order() const;  // highest x-order of the base jets in (F, G)
};

ConservedVector operator+(const ConservedVector& a, const ConservedVector& b);
ConservedVector operator-(const ConservedVector& a, const ConservedVector& b);
ConservedVector operator*(const Expr& c, const ConservedVector& a);

struct Potential {
  std::string name;
  Expr x_rule;  // v_x
  Expr t_rule;  // v_t
  ConservedVector source;
  int level = 1;
};

// u_t = rhs, plus potentials v_x = F, v_t = -G. Immutable; reductions are
// memoized internally.
class EvolutionSystem {
 public:
  EvolutionSystem(std::string dep, Expr rhs);

  const std::string& dependent() const { return dep_; }
  const Expr& rhs() const { return rhs_; }
  const std::vector<Potential>& potentials() const { return potentials_; }
  const Potential* potential(const std::string& name) const;
  std::vector<std::string> dependents() const;  // base first, then potentials

  // Attach v_x = cv.F, v_t = -cv.G.
  EvolutionSystem with_potential(const std::string& name, const ConservedVector& cv, int level = 1) const;
  EvolutionSystem without_potentials() const;

  Expr reduce(const Expr& e) const;
  Expr reduce_jet(AtomId jet) const;
  // On-shell total derivative of an already reduced expression.
  Expr dx(const Expr& reduced) const;
  Expr dt(const Expr& reduced) const;

  // Whether a jet atom is a coordinate on the solution manifold.
  bool is_free(AtomId jet) const;

 private:
  struct Memo;
  std::string dep_;
  Expr rhs_;
  std::vector<Potential> potentials_;
  std::shared_ptr<Memo> memo_;
};

// Off-shell total derivative.
Expr total_derivative(const Expr& e, Axis axis);
Expr total_derivative(const Expr& e, Axis axis, const EvolutionSystem& sys);

// Variational derivative with respect to `dep` (off-shell).
Expr euler_operator(const Expr& e, const std::string& dep);

struct AdjointCheck {
  bool holds;
  Expr residual;
};
AdjointCheck adjoint_symmetry_check(const Expr& lambda, const EvolutionSystem& sys);

// Point field xi_t d_t + xi_x d_x + eta d_u over (t, x, u).
struct VectorField {
  Expr xi_t;
  Expr xi_x;
  Expr eta;
  std::string dep = "u";
};

Expr prolongation_coefficient(const VectorField& X, int dx, int dt);
Expr apply_prolonged(const VectorField& X, const Expr& e);

ConservedVector symmetry_action(const ConservedVector& cv, const VectorField& X, const EvolutionSystem& sys);

Expr wronskian(const std::vector<Expr>& fs, AtomId v);

// Maximal x-order of jets of `dep` in e (-1 if none).
int jet_order(const Expr& e, const std::string& dep);

}  // namespace conslaw
