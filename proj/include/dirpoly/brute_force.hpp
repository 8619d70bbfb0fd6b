#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dirpoly/environment.hpp"
#include "dirpoly/lattice.hpp"
#include "dirpoly/percolation.hpp"

namespace dirpoly::brute_force {

// Exhaustive path-sum oracles.  Everything here walks all (2d)^n paths
// directly and never touches the slice engine, so it can stand as an
// independent reference for it.

struct PartitionSums {
  double z = 0.0;  // Z_n
  std::vector<std::uint64_t> keys;  // endpoint sites (sorted)
  std::vector<double> z_point;      // Z_n(x)
};

PartitionSums partition(const EnvironmentField& field, double beta, int n);

double normalized_mass(const EnvironmentField& field, double beta, int n);

// mu_n(path) for every path, in enumeration order.
std::vector<double> path_probabilities(const EnvironmentField& field,
                                       double beta, int n);

// I_n = mu_{n-1}^{x2}(omega_n = omega~_n) via the endpoint law of mu_{n-1}
// extended by one uniform step.
double overlap(const EnvironmentField& field, double beta, int n);

// (ln W_n)'(beta) = sum_w w H / sum_w w - n lambda'(beta).
double lnw_derivative(const EnvironmentField& field, double beta, int n);

// Max of H_n over all paths.
std::int32_t last_passage(const PercolationField& field, int n);

std::complex<double> complex_normalized_mass(const EnvironmentField& field,
                                             std::complex<double> beta, int n);

// ---- equivalence suite ---------------------------------------------------

struct SelftestReport {
  int seeds = 0;
  int checks = 0;
  int failures = 0;
  double max_rel_error = 0.0;
  std::vector<std::string> failed_checks;
};

// Brute-force equivalence across d in {1,2}, n <= 8: Z_n, Z_n(x), mu_n
// path probabilities, I_n, H_n*, (ln W_n)' all against enumeration at
// 1e-10 relative.
SelftestReport run_selftest(int seeds, std::uint64_t seed_base = 31415);

}  // namespace dirpoly::brute_force
