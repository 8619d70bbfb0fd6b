#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dirpoly/environment.hpp"
#include "dirpoly/lattice.hpp"

namespace dirpoly {

// PartitionSlice is the sparse log-domain table of point-to-point weights:
// true log Z_n(x) = ln(w[x]) + logscale.  Values are kept linearly at the
// per-slice renormalized scale (max weight 1), which is the same range
// protection as subtracting the slice max in log form, with one exp per
// site instead of one per neighbor edge.
using PartitionSlice = RealSlice;

struct ComplexPartitionSlice : Slice<std::complex<double>> {
  std::complex<double> beta{0.0, 0.0};
};

struct AdvanceOptions {
  bool renormalize = true;
  // Sites below prune_floor * (slice max) are dropped.  0 disables
  // pruning; exactness suites run with 0, large disorder campaigns use
  // ~1e-12 (documented bias far below the statistical tolerances).
  double prune_floor = 0.0;
  bool allow_parallel = true;
};

PartitionSlice make_initial_slice(int d);

// One transfer-matrix step: Z_n(y) = e^{beta eta(n,y)} sum_{x~y} Z_{n-1}(x)/2d.
// Straightforward single-pass merge over the 2d shifted key streams.
PartitionSlice advance_reference(const PartitionSlice& prev,
                                 const EnvironmentField& field, double beta,
                                 const AdvanceOptions& opt = {});

// Same arithmetic, OpenMP-chunked by key range; bit-identical to the
// reference for every thread count (chunk boundaries depend only on the
// slice, and per-site arithmetic is shared).
PartitionSlice advance(const PartitionSlice& prev,
                       const EnvironmentField& field, double beta,
                       const AdvanceOptions& opt = {});

// W_n = Z_n e^{-n lambda(beta)}.
double log_normalized_mass(const PartitionSlice& slice,
                           const DisorderModel& model, double beta);
double normalized_mass(const PartitionSlice& slice, const DisorderModel& model,
                       double beta);

// mu_n(omega_n = x) = Z_n(x) / Z_n, returned as a probability slice.
PartitionSlice endpoint_marginal(const PartitionSlice& slice);

// Endpoint second moment mu_n[|omega_n|^2].
double endpoint_second_moment(const PartitionSlice& slice);

// I_n = mu_{n-1}^{x2}(omega_n = omega~_n): the time-(n-1) marginal is
// extended by one free SRW step and the meeting probability is sum q^2.
double overlap_next(const PartitionSlice& slice_nm1);

// ---- complex-temperature martingale ----------------------------------

ComplexPartitionSlice make_initial_complex_slice(int d,
                                                 std::complex<double> beta);

// Throws OutsideU0 if the straight-path branch test for log E[e^{beta eta}]
// fails (practical proxy for the U_0 component, documented as such).
ComplexPartitionSlice advance_complex(const ComplexPartitionSlice& prev,
                                      const EnvironmentField& field,
                                      std::complex<double> beta,
                                      const AdvanceOptions& opt = {});

std::complex<double> log_normalized_mass_complex(
    const ComplexPartitionSlice& slice, const DisorderModel& model);

// ---- beta-derivative companion ----------------------------------------

// Carries E_n(x) = P[H_n e^{beta H_n}; omega_n = x] alongside Z_n(x) at the
// shared renormalization scale (signed values).
struct DerivativeSlice {
  PartitionSlice z;
  std::vector<double> e;  // parallel to z.keys
};

DerivativeSlice make_initial_derivative_slice(int d);
DerivativeSlice advance_with_derivative(const DerivativeSlice& prev,
                                        const EnvironmentField& field,
                                        double beta,
                                        const AdvanceOptions& opt = {});

// mu_n[H_n] = E_n / Z_n.
double path_mean_energy(const DerivativeSlice& slice);

enum class DerivativeMethod { DerivativeDp, FiniteDifference, CauchyCircle };

struct DerivativeOptions {
  double pi_d = 0.0;        // required for CauchyCircle (U_2 predicate)
  double radius = 0.25;     // Cauchy circle radius
  int nodes = 64;           // trapezoid nodes
  double fd_step_scale = 1e-5;
  AdvanceOptions advance;
};

// (ln W_n)'(beta) by the requested route.
double log_partition_derivative(const EnvironmentField& field, double beta,
                                int n, DerivativeMethod method,
                                const DerivativeOptions& opt = {});

// ---- backward value fields ---------------------------------------------

// Remainder field V_j(y) = W_{n-j} o theta_{j,y} for j in [m, horizon],
// evaluated by a backward sweep; returns the slice of V_m on the L1 ball
// of radius m (parity of m).
PartitionSlice remainder_field(const EnvironmentField& field, double beta,
                               int m, int horizon,
                               const AdvanceOptions& opt = {});

// Time-reversed field W_N o theta<-_{n,x} for all |x|_1 <= radius with the
// parity of n: depth-N product over rows n-1, ..., n-N.
PartitionSlice reversed_field(const EnvironmentField& field, double beta,
                              int n, int depth, int radius,
                              const AdvanceOptions& opt = {});

// ---- Sinai factorization diagnostic ------------------------------------

struct SinaiOptions {
  double pi_d = 0.0;          // for the U_1 precondition
  double margin_threshold = 0.05;
  double endpoint_window = 1.0;  // include |x|_1 <= window * sqrt(n)
  AdvanceOptions advance;
};

struct SinaiRow {
  std::vector<std::int32_t> x;
  double lhs = 0.0;       // e^{-n lambda} P[e^{beta H_n} | omega_n = x]
  double factor = 0.0;    // W_N * (W_N o theta<-)
  double residual = 0.0;
};

struct SinaiReport {
  int n = 0;
  int depth = 0;
  std::vector<SinaiRow> rows;
  double mean_abs_residual = 0.0;
};

SinaiReport sinai_factorization_check(const EnvironmentField& field,
                                      double beta, int n, int depth,
                                      const SinaiOptions& opt);

// ---- binary slice dump ---------------------------------------------------

// One JSON header line {n, d, logscale, beta, seed} followed by binary rows
// (d little-endian int32 coordinates + one float64 log-weight).
void dump_slice(const PartitionSlice& slice, double beta, std::uint64_t seed,
                const std::string& path);
PartitionSlice load_slice(const std::string& path);

}  // namespace dirpoly
