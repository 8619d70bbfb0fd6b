#pragma once

#include <vector>

#include "dirpoly/partition.hpp"

namespace dirpoly {

// Energy/entropy fluctuation trace at one disorder sample.  Per horizon n:
//   u_n = mu_n[H_n] - n lambda'(beta)    (path-averaged energy recentered)
//   s_n = beta u_n - ln W_n              (recentered relative entropy)
// The identity s_n = beta u_n - ln W_n is definitional here; the stored
// h(mu_n|P) recomputation in tests guards the lambda vs lambda'
// bookkeeping.
struct ThermoTrace {
  double beta = 0.0;
  std::vector<int> horizons;
  std::vector<double> u;
  std::vector<double> s;
  std::vector<double> lnw;
  std::vector<double> mu_energy;  // mu_n[H_n]
};

struct ThermoOptions {
  double pi_d = 0.0;  // U_1 precondition input
  AdvanceOptions advance;
};

// Requires the L2 condition at beta (throws OutsideU1 otherwise).
ThermoTrace energy_fluctuation_trace(const EnvironmentField& field,
                                     double beta,
                                     const std::vector<int>& horizons,
                                     const ThermoOptions& opt);

struct EnergyCltSample {
  std::vector<double> standardized;  // (H_n - n lambda') / sqrt(n)
  double ks = 0.0;                   // against N(0, lambda''(beta))
  double sample_mean = 0.0;
  double sample_variance = 0.0;
};

// K paths from mu_n with the path energy H_n accumulated along each.
EnergyCltSample energy_clt_sample(const EnvironmentField& field, double beta,
                                  int n, int k, std::uint64_t path_seed,
                                  const AdvanceOptions& opt = {});

}  // namespace dirpoly
