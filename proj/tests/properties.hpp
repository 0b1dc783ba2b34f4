#pragma once

// Randomized and oracle-backed property suites shared by the unit tests and
// the acceptance binary.

#include <cstdint>
#include <string>

namespace conslaw::props {

struct Outcome {
  int checks = 0;
  int failures = 0;
  std::string first_failure;

  bool ok() const { return checks > 0 && failures == 0; }
  void record(bool pass, const std::string& what);
  std::string str() const;
};

// CONSLAW_SEED, default 1.
std::uint64_t seed_from_env();

Outcome normal_form_pairs(int n, std::uint64_t seed);
Outcome partial_commutes(int n, std::uint64_t seed);
Outcome euler_annihilates_divergences(int n, std::uint64_t seed);
Outcome total_derivatives_commute(int n, std::uint64_t seed);
Outcome wronskian_matches_rank(std::uint64_t seed);
Outcome proportional_propagation(int pairs, std::uint64_t seed);
Outcome dependence_matches_oracle(std::uint64_t seed);
// Laws of heat potential systems for p <= max_p sampled polynomial alphas,
// found in a finite polynomial ansatz, are equivalent to local laws.
Outcome heat_potential_laws_are_local(int max_p, int samples, std::uint64_t seed);

}  // namespace conslaw::props
