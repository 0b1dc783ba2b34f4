#pragma once

// Equivalence group of the diffusion-convection class and its actions.
//
//   t~ = e4 t + e1,  x~ = e5 x + e4 e7 t + e2,  u~ = e6 u + e3,
//   A~ = A e5^2 / e4,  B~ = B e5 / e4 - e7.

#include <string>

#include "conslaw/direct.hpp"

namespace conslaw {

struct EquivTransformation {
  Expr e1 = 0, e2 = 0, e3 = 0, e4 = 1, e5 = 1, e6 = 1, e7 = 0;

  static EquivTransformation identity() { return {}; }
  bool is_identity() const;
  void validate() const;  // throws when e4 e5 e6 = 0

  // (b * a): apply a first, then b.
  friend EquivTransformation operator*(const EquivTransformation& b, const EquivTransformation& a);
  EquivTransformation inverse() const;
  friend bool operator==(const EquivTransformation& a, const EquivTransformation& b);

  std::string str() const;
};

DceEquation act_on_equation(const EquivTransformation& g, const DceEquation& eq);
ConservedVector act_on_conserved_vector(const EquivTransformation& g, const ConservedVector& cv);

struct CanonicalForm {
  std::string tag;  // general | B=0 | B=A | B=IntA+uA | A=u^-2,B=0 | A=B=u^-2 | A=1,B=2u | A=1,B=0
  EquivTransformation g;
};

CanonicalForm canonicalize(const DceEquation& eq);

// Whether eq has exactly the canonical form of `tag`.
bool has_canonical_form(const DceEquation& eq, const std::string& tag);

// Translations t~ = t + a, x~ = x + b (the kernel of the class).
DceEquation kernel_group_action(const Expr& a, const Expr& b, const DceEquation& eq);
ConservedVector kernel_group_action(const Expr& a, const Expr& b, const ConservedVector& cv);

// t~ = t, x~ = 1 - 1/x, u~ = x^3 u, a symmetry of u_t = (u^(-4/3) u_x)_x.
EvolutionSystem u43_equation();
ConservedVector lie_symmetry_map_u43(const ConservedVector& cv);

}  // namespace conslaw
