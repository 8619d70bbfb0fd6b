#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dirpoly/partition.hpp"

namespace dirpoly {

// Bernoulli environment read as oriented site percolation: a site (t,x) is
// open iff eta(t,x) = 0 (probability p).  The origin's own state never
// counts: energies sum over t >= 1 and reachability starts from the t=1
// row.
class PercolationField {
 public:
  PercolationField(std::uint64_t seed, double p, int d)
      : field_(seed, DisorderModel::bernoulli(p), d), p_(p) {}
  explicit PercolationField(EnvironmentField field);

  const EnvironmentField& env() const { return field_; }
  double p() const { return p_; }
  int dimension() const { return field_.dimension(); }

  bool open(std::int64_t t, std::span<const std::int32_t> x) const {
    return field_.eta(t, x) == 0.0;
  }

 private:
  EnvironmentField field_;
  double p_;
};

using LastPassageSlice = Slice<std::int32_t>;

struct LastPassageResult {
  LastPassageSlice slice;          // H_n*(x) per endpoint
  std::int32_t best = 0;           // H_n* = max_x H_n*(x)
  std::vector<std::int32_t> best_by_t;  // running H_t*, t = 1..n
};

// Max-plus DP H_t*(y) = eta(t,y) + max_{x~y} H_{t-1}*(x); values are
// integers in [-n, 0].
LastPassageResult last_passage(const PercolationField& field, int n);

struct TimeConstantRow {
  int n = 0;
  double tau = 0.0;  // mean of -H_n*/n
  double stderr_ = 0.0;
};

struct TimeConstantReport {
  std::vector<TimeConstantRow> rows;
  double tau = 0.0;  // largest-horizon estimate
  double tau_stderr = 0.0;
};

TimeConstantReport time_constant(double p, int d,
                                 const std::vector<int>& horizons,
                                 int replicas, std::uint64_t seed_base);

// Fraction of replicas whose oriented open cluster from the origin reaches
// depth T (origin state not required).
struct SurvivalEstimate {
  double fraction = 0.0;
  double stderr_ = 0.0;
  int depth = 0;
};

SurvivalEstimate survival_probability(double p, int d, int depth, int replicas,
                                      std::uint64_t seed_base);

// One run records survival at several depths for a grid of p under common
// random numbers (same uniforms, thresholded), which keeps S(p, T)
// monotone in p replica by replica.
struct SurvivalScan {
  std::vector<double> p_grid;
  std::vector<int> depths;
  // fraction[ip][it]
  std::vector<std::vector<double>> fraction;
  int replicas = 0;
};

SurvivalScan survival_scan(const std::vector<double>& p_grid, int d,
                           const std::vector<int>& depths, int replicas,
                           std::uint64_t seed_base);

// Finite-size-scaling crossing estimate: root in p of
// ln[S_{T1} S_{T3} / S_{T2}^2] for geometric depths T1:T2:T3, which
// vanishes at the critical point where S_T is a pure power law.
std::optional<double> estimate_pc_crossing(const SurvivalScan& scan);

struct ChemicalDistance {
  int dist = 0;                      // closed sites crossed
  std::vector<std::int32_t> site;    // attained endpoint at depth T
};

// Min closed-site count over oriented paths to depth T whose endpoint
// keeps an open path alive through depth 2T (finite surrogate for the
// infinite cluster).  Throws NoSurvivor if no endpoint qualifies.
ChemicalDistance chemical_distance(const PercolationField& field, int depth);

struct ZeroTemperatureRow {
  double beta = 0.0;
  double lhs = 0.0;    // -(1/(n beta)) ln W_n(beta)
  double rhs = 0.0;    // -H_n*/n
  double delta = 0.0;  // |lhs - rhs|
};

struct ZeroTemperatureReport {
  std::vector<ZeroTemperatureRow> rows;
  std::int32_t hstar = 0;
};

// Ground-state limit table on one field; the grid must reach beta >= 50.
ZeroTemperatureReport zero_temperature_check(const PercolationField& field,
                                             int n,
                                             const std::vector<double>& betas,
                                             const AdvanceOptions& opt = {});

struct PsiTauMargin {
  double margin = 0.0;   // psi/beta - lambda/beta - tau, matched replicas
  double stderr_ = 0.0;
  double psi = 0.0;
  double tau = 0.0;
  bool violation = false;  // margin < -3 stderr: implementation red flag
};

// Matched-replica check of psi(beta)/beta >= lambda(beta)/beta + tau; the
// per-replica margin is nonnegative pointwise, so a violation indicates a
// bug rather than noise.
PsiTauMargin psi_tau_inequality(double p, int d, double beta, int n,
                                int replicas, std::uint64_t seed_base,
                                const AdvanceOptions& opt = {});

}  // namespace dirpoly
