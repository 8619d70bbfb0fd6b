#pragma once

#include <cstdint>
#include <vector>

#include "dirpoly/partition.hpp"

namespace dirpoly {

// A sampled polymer configuration omega_0..omega_n (omega_0 = 0), with the
// replica metadata needed for exact replay.
struct PolymerPath {
  int n = 0;
  int d = 1;
  double beta = 0.0;
  std::uint64_t env_seed = 0;
  std::uint64_t path_seed = 0;
  std::vector<std::int32_t> sites;  // (n+1) * d coordinates

  std::span<const std::int32_t> at(int t) const {
    return {sites.data() + static_cast<std::size_t>(t) * d,
            static_cast<std::size_t>(d)};
  }
};

struct SampleOptions {
  std::uint64_t path_seed = 1;
  // Backward sampling either retains every slice or keeps sqrt(n)-spaced
  // checkpoints and recomputes blocks; both give bit-identical paths.
  bool checkpoint = false;
  int checkpoint_stride = 0;  // 0 = ceil(sqrt(n))
  AdvanceOptions advance;
};

// K exact samples from mu_n by backward decomposition: draw omega_n from
// the endpoint marginal, then omega_{t-1} proportional to Z_{t-1}(x) over
// the neighbors of omega_t.
std::vector<PolymerPath> sample_paths(const EnvironmentField& field,
                                      double beta, int n, int k,
                                      const SampleOptions& opt = {});

// ln mu_n(path) evaluated through the same backward decomposition;
// requires the retained slice set.
double path_log_probability(const std::vector<PartitionSlice>& slices,
                            const PolymerPath& path);

// Slices 0..n for one field (retained mode building block; also useful in
// tests).
std::vector<PartitionSlice> all_slices(const EnvironmentField& field,
                                       double beta, int n,
                                       const AdvanceOptions& opt = {});

// Diffusively rescaled path: piecewise-linear omega_{nt}/sqrt(n), t in [0,1].
struct RescaledPath {
  const PolymerPath* path = nullptr;
  void eval(double t, std::span<double> out) const;
};
RescaledPath rescale(const PolymerPath& path);

struct CltReport {
  int n = 0;
  int d = 1;
  std::size_t paths = 0;
  std::vector<double> mean;       // of omega_n / sqrt(n), per coordinate
  std::vector<double> variance;   // per coordinate (target 1/d)
  std::vector<double> cross_cov;  // upper triangle, row-major (target 0)
  double ks_coord1 = 0.0;         // coord 1 / sqrt(n/d) vs standard normal
  double kurtosis_coord1 = 0.0;   // target 3
};

// Endpoint statistics of an ensemble of paths sharing (d, n, beta).
// Optional weights are per-path (e.g. per-environment reweighting);
// the KS statistic is always unweighted.
CltReport clt_statistics(const std::vector<PolymerPath>& ensemble,
                         const std::vector<double>& weights = {});

struct MsdRow {
  double beta = 0.0;
  int n = 0;
  double mean_msd = 0.0;  // E_Q mu_n[|omega_n|^2]
  double stderr_ = 0.0;
};

struct MsdReport {
  std::vector<MsdRow> rows;
  double xi = 0.0;        // fitted |omega_n| ~ n^xi exponent (per beta: last fit)
  double xi_stderr = 0.0;
  std::vector<std::pair<double, std::pair<double, double>>> xi_by_beta;
};

// mu_n[|omega_n|^2] across geometric horizons, Q-averaged over M replicas,
// with the log-log fitted wandering exponent.
MsdReport msd_exponent(const DisorderModel& model, int d,
                       const std::vector<double>& betas,
                       const std::vector<int>& horizons, int replicas,
                       std::uint64_t seed_base,
                       const AdvanceOptions& opt = {});

// Total variation distance between mu_{m+k1} and mu_{m+k2} restricted to
// the first m steps (factor-2 convention), by exact summation over all
// (2d)^m prefixes.  Guard: (2d)^m <= 1e6.
double prefix_variation_distance(const EnvironmentField& field, double beta,
                                 int m, int k1, int k2,
                                 const AdvanceOptions& opt = {});

}  // namespace dirpoly
