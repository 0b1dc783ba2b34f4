#pragma once

// Potential systems of diffusion-convection equations, their conservation
// laws, and the level-by-level iteration over them.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conslaw/direct.hpp"
#include "conslaw/equivalence.hpp"
#include "conslaw/parse.hpp"

namespace conslaw {

struct PotentialSystem {
  EvolutionSystem system;          // base equation with every potential attached
  std::vector<std::string> added;  // potentials introduced by this step
  // v_x = ..., v_t = ... for each potential; the equation for u is implied.
  std::vector<std::string> relations() const;
};

// One potential per conserved vector, named v1, v2, ... after the existing
// ones unless names are given. Throws when a vector fails verification or
// the vectors are linearly dependent (the relation is in the message).
PotentialSystem build_potential_system(const EvolutionSystem& sys, const std::vector<ConservedVector>& cvs,
                                       std::vector<std::string> names = {});

struct PotentialDependence {
  bool dependent = false;
  std::vector<Expr> relation;  // coefficients of the generating vectors
  Expr witness;                // sum c_i v_i - H, constant on solutions
};

PotentialDependence potentials_dependent(const PotentialSystem& ps);

// Every derivative atom of the function `name` replaced by the matching
// derivative of `value`; negative orders integrate.
Expr substitute_kernel(const Expr& e, const std::string& name, const Expr& value);

// F(t, x, potentials), G(t, x, u, potentials).
Ansatz potential_ansatz(const EvolutionSystem& sys);

// cv ~ sum c_i laws_i + sum families_j(p_j) + (D_x H, -D_t H), with H and the
// family parameters polynomial in the potentials up to the degree of cv.
struct Membership {
  bool member = false;
  std::vector<Expr> coefficients;
  std::vector<Expr> parameters;  // chosen family members
  Expr H;
};

Membership span_membership(const EvolutionSystem& sys, const ConservedVector& cv,
                           const std::vector<ConservedVector>& laws, const std::vector<LawPiece>& families = {});

// K_t + K_xx = 0 and alpha^s K_{x v^s} - alpha^s_x K_{v^s} = 0 for K(t, x, v^1..v^p).
struct SystemOnK {
  bool holds = false;
  Expr heat_residual;
  Expr coupling_residual;
  std::optional<std::pair<Expr, Expr>> decomposition;  // (H, beta0) with K = alpha^s H_{v^s} + beta0
};

SystemOnK verify_system_on_K(const Expr& K, const std::vector<Expr>& alphas, const std::vector<std::string>& potentials);

struct HierarchyLaw {
  ConservedVector cv;
  std::vector<std::string> parameters;
  std::string verdict;  // new | new series | dependent
  std::string note;
};

struct HierarchyNode {
  int level = 1;
  std::string label;       // e.g. "v1 from u", "united v1, v2"
  EvolutionSystem system{"u", Expr{}};  // potential system the laws live on
  std::vector<HierarchyLaw> laws;
  std::string note;
};

struct HierarchyReport {
  std::string tag;  // canonical case tag of the equation
  EquivTransformation g;  // laws below are for act_on_equation(g, eq)
  std::vector<ConservedVector> local;
  std::optional<ConservedVector> local_family;
  std::vector<HierarchyNode> nodes;
  int depth = 0;  // deepest level explored
  std::string termination;  // all new laws dependent | parameterized series | level limit
  std::string summary;
};

struct IterateOptions {
  int max_level = 3;
  int max_potentials = 2;  // largest subset of laws turned into potentials at once
};

HierarchyReport iterate(const DceEquation& eq, const IterateOptions& opts = {});

// t~ = t, x~ = X, u~ = U, v~ = V for each potential, all in source variables.
// The inverse gives source atoms (x, u, potentials, or composite atoms such
// as exp(v)) in target variables, which reuse the source names.
struct PointTransformation {
  Expr x;
  Expr u;
  std::map<std::string, Expr> potentials;
  std::map<AtomId, Expr> inverse;
};

struct TransformedSystem {
  PotentialSystem system;
  // F~ = F / D_x X, G~ = G + F D_t X / D_x X, in target variables.
  std::function<ConservedVector(const ConservedVector&)> transport;
};

TransformedSystem apply_point_transformation(const PotentialSystem& ps, const PointTransformation& tr);

// Source and target systems agree: same right-hand side and potential rules.
bool same_system(const EvolutionSystem& a, const EvolutionSystem& b);

struct CollapseWitness {
  std::string law;  // e.g. "F11"
  ConservedVector cv;
  Expr w;            // expected potential of the united system
  bool matches = false;  // F = D_x w, G = -D_t w on the united system
  bool trivial = false;
  Expr H;            // witness found by is_trivial
};

struct Collapse {
  std::string kase;  // B=0 | B=A | heat
  EvolutionSystem united{"u", Expr{}};
  std::vector<CollapseWitness> witnesses;
  bool verified = false;
};

// For heat, instances (alpha, beta) are appended to the symbolic witness.
Collapse second_level_collapse(const std::string& kase,
                               const std::vector<std::pair<Expr, Expr>>& heat_instances = {});

struct Table1Row {
  std::string label;  // 1, 1.1, ..., 4.1
  std::string A;
  std::string B;
  DceEquation equation;
  EvolutionSystem system{"u", Expr{}};  // where (F, G) is conserved
  ConservedVector cv;
  std::vector<std::string> constraints;       // kernel constraints installed
  std::vector<std::string> potential_system;  // relations of the row's potential system
};

std::vector<Table1Row> table1();

// Scope with eps, v, w and the standard kernels.
Scope table_scope();

// Text of the hierarchy line for one case, from the report's counts.
std::string hierarchy_summary(const HierarchyReport& r);

}  // namespace conslaw
