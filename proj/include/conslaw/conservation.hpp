#pragma once

// Verification, characteristics, triviality and linear dependence of
// conserved vectors.

#include <optional>
#include <vector>

#include "conslaw/jet.hpp"

namespace conslaw {

struct VerificationResult {
  bool holds;
  Expr residual;
};

VerificationResult verify(const EvolutionSystem& sys, const ConservedVector& cv);

// lambda with D_t F + D_x G = lambda * (u_t - R) + (null divergence).
// Throws ExprError if cv is not a conservation law or sys has potentials.
Expr characteristic(const EvolutionSystem& sys, const ConservedVector& cv);

struct TrivialityWitness {
  Expr H;      // F = D_x H + F_hat, G = -D_t H + G_hat
  Expr F_hat;  // parts vanishing on solutions
  Expr G_hat;
};

struct TrivialityResult {
  bool trivial;
  std::optional<TrivialityWitness> witness;
};

TrivialityResult is_trivial(const EvolutionSystem& sys, const ConservedVector& cv);
bool are_equivalent(const EvolutionSystem& sys, const ConservedVector& a, const ConservedVector& b);

struct DependenceResult {
  int rank;
  // Each relation c satisfies: sum c_i cv_i is trivial. Rows are in reduced
  // echelon form, scaled to integers when rational.
  std::vector<std::vector<Expr>> relations;
};

DependenceResult linear_dependence(const EvolutionSystem& sys, const std::vector<ConservedVector>& cvs);

// Reduced row echelon form over the field of expressions; returns the
// nonzero rows.
std::vector<std::vector<Expr>> row_reduce(std::vector<std::vector<Expr>> rows);

}  // namespace conslaw
