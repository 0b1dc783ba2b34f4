#pragma once

// Direct method for conservation laws of u_t = (A(u)u_x)_x + B(u)u_x.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conslaw/conservation.hpp"
#include "conslaw/solver.hpp"

namespace conslaw {

// An equation of the class, with A, B either opaque kernels (possibly under
// a declared relation) or concrete expressions in u.
struct DceEquation {
  Expr A;
  Expr B;
  Expr IntA;
  Expr IntB;
  std::string relation = "none";  // none | B=0 | B=A | B=IntA+uA | concrete

  static DceEquation opaque(const std::string& relation = "none");
  static DceEquation concrete(const Expr& A, const Expr& B);

  Expr rhs() const;
  EvolutionSystem system() const;
  ConservedVector case1() const;  // (u, -A u_x - Int B)
};

// Coefficients of the monomials in jets of order >= threshold.
std::vector<std::pair<Expr, Expr>> split_by_jets(const Expr& e, int threshold);

struct Ansatz {
  std::vector<AtomId> F_args;
  std::vector<AtomId> G_args;
  static Ansatz minimal_order();  // F(t,x,u), G(t,x,u,u_x)
};

struct DeterminingSystem {
  std::vector<Expr> equations;
  std::vector<Expr> unknowns;  // F and G1 (or G when it is not eliminated)
  Expr F;                      // ansatz expressions in the unknowns
  Expr G;
};

DeterminingSystem determining_system(const EvolutionSystem& sys, const Ansatz& ansatz);

// A piece of the general solution: one law per free constant, one family per
// free parameter function.
struct LawPiece {
  ConservedVector cv;
  std::vector<std::string> parameters;  // parameter functions it depends on
};

struct LawSearch {
  DeterminingSystem ds;
  SolveResult solution;
  std::vector<LawPiece> pieces;  // nontrivial, linearly independent
};

LawSearch find_conservation_laws(const EvolutionSystem& sys, const Ansatz& ansatz);

struct ClassificationCase {
  int case_id = 1;
  std::string relation;
  std::vector<ConservedVector> basis;     // independent additional laws
  std::optional<ConservedVector> family;  // eps- or alpha-parameterized form
  std::vector<std::string> parameters;    // "eps" / "alpha"
  DeterminingSystem ds;
};

// Span test: coefficients (c, d) with B = c A + d, if any.
std::optional<std::pair<Expr, Expr>> span_coefficients(const Expr& B, const Expr& A);

ClassificationCase classify_dce(const DceEquation& eq);

ConservedVector reduce_order(const EvolutionSystem& sys, const ConservedVector& cv);

// Rename a function (all its derivative atoms) to `to`.
Expr rename_function(const Expr& e, const std::string& from, const std::string& to);

}  // namespace conslaw
