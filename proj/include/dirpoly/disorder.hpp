#pragma once

#include <complex>
#include <string>
#include <vector>

namespace dirpoly {

enum class DisorderKind { Gaussian, Bernoulli, DiscreteTable };

// Law of a single environment variable eta(t,x).  Gaussian is standard
// normal; Bernoulli takes the value 0 with probability p and -1 otherwise;
// DiscreteTable is an arbitrary finite law.  Every supported law has a
// finite log moment generating function on the whole real line.
struct DisorderModel {
  DisorderKind kind = DisorderKind::Gaussian;
  double p = 0.5;                // Bernoulli only
  std::vector<double> values;    // DiscreteTable only
  std::vector<double> probs;     // DiscreteTable only

  static DisorderModel gaussian();
  static DisorderModel bernoulli(double p);
  static DisorderModel table(std::vector<double> values,
                             std::vector<double> probs);

  // Throws ConfigInvalid unless probabilities are strictly positive and
  // sum to 1 within 1e-12.
  void validate() const;

  std::string kind_name() const;
};

// lambda(beta) = ln E[exp(beta * eta)].
double log_mgf(const DisorderModel& model, double beta);

// lambda'(beta) or lambda''(beta) (order 1 or 2); closed forms for
// Gaussian/Bernoulli, tilted mean/variance for tables.
double log_mgf_deriv(const DisorderModel& model, double beta, int order);

// E[exp(z * eta)] for complex z (no logarithm taken).
std::complex<double> mgf_complex(const DisorderModel& model,
                                 std::complex<double> z);

// Principal-branch lambda(z).  Callers must have certified the branch via
// u0_path_check; Gaussian is exact (z^2/2).
std::complex<double> log_mgf_complex(const DisorderModel& model,
                                     std::complex<double> z);

// Practical stand-in for membership in the connected component of 0 where
// the MGF avoids the negative reals: requires Re E[exp(z*eta)] > 0 on a
// straight-line grid from 0 to z.  Conservative, documented as a proxy.
bool u0_path_check(const DisorderModel& model, std::complex<double> z,
                   int grid = 33);

struct L2Condition {
  bool satisfied = false;
  double margin = 0.0;  // -ln(pi_d) - [lambda(2b) - 2 lambda(b)]
};

// Second-moment condition lambda(2b) - 2 lambda(b) < -ln pi_d.
L2Condition l2_condition(const DisorderModel& model, double beta, double pi_d);

// Smallest beta* > 0 where the L2 condition stops holding, by bisection to
// |beta| tolerance 1e-10.  Returns +infinity when the condition holds over
// the whole scan range (e.g. Bernoulli with p > pi_d).
double u1_boundary(const DisorderModel& model, double pi_d,
                   double beta_max = 64.0);

// Inverse CDF; u must lie in the open interval (0,1).
double quantile(const DisorderModel& model, double u);

}  // namespace dirpoly
