#pragma once

#include <cstdint>
#include <vector>

#include "dirpoly/partition.hpp"

namespace dirpoly {

enum class Coupling { Independent, CommonRandomNumbers };

// One disorder replica of a trajectory campaign.  Per requested horizon:
// ln W_n, the endpoint second moment, and (optionally) the overlap partial
// sum and tail value.  Rows are reproducible from (model, beta, seed).
struct ReplicaRow {
  std::uint64_t seed = 0;
  std::vector<double> lnw;
  std::vector<double> mu2;
  std::vector<double> overlap_sum;
  std::vector<double> overlap_tail;
};

struct TrajectoryRequest {
  DisorderModel model;
  int d = 3;
  double beta = 0.0;
  std::vector<int> horizons;  // ascending, last = campaign horizon
  int replicas = 100;
  std::uint64_t seed_base = 1;
  bool record_overlap = false;
  AdvanceOptions advance;
};

// Replica-parallel executor behind every ensemble campaign; rows come back
// in replica order regardless of the worker count.
std::vector<ReplicaRow> run_trajectories(const TrajectoryRequest& req);

// ---- fractional moments -------------------------------------------------

struct FractionalMomentRow {
  double beta = 0.0;
  double mean = 0.0;    // estimate of Q[W_n^delta]
  double stderr_ = 0.0;
};

// Q[W_n^delta] over a beta grid.  With CommonRandomNumbers the same
// replica seeds (hence the same underlying uniform field) drive every
// beta, which is what makes the monotonicity comparison tight.
std::vector<FractionalMomentRow> fractional_moment_scan(
    const DisorderModel& model, int d, double delta,
    const std::vector<double>& beta_grid, int n, int replicas,
    Coupling coupling, std::uint64_t seed_base,
    const AdvanceOptions& opt = {});

// ---- Lyapunov exponent ---------------------------------------------------

struct LyapunovRow {
  int n = 0;
  double psi = 0.0;  // -(1/n) mean ln W_n
  double stderr_ = 0.0;
};

struct LyapunovReport {
  std::vector<LyapunovRow> rows;
  double psi = 0.0;         // largest-horizon estimate
  double psi_stderr = 0.0;
  double mean_lnw_final = 0.0;
  bool jensen_ok = true;    // mean ln W <= ln mean W on samples
};

LyapunovReport lyapunov(const DisorderModel& model, int d, double beta,
                        const std::vector<int>& horizons, int replicas,
                        std::uint64_t seed_base,
                        const AdvanceOptions& opt = {});

// ---- overlap series -------------------------------------------------------

struct OverlapReport {
  std::vector<int> horizons;
  std::vector<double> median_partial;  // median over replicas of sum I_k
  std::vector<double> median_tail;     // median of I_N at each horizon
  std::vector<ReplicaRow> rows;
};

OverlapReport overlap_series(const DisorderModel& model, int d, double beta,
                             const std::vector<int>& horizons, int replicas,
                             std::uint64_t seed_base,
                             const AdvanceOptions& opt = {});

// ---- beta_c bracketing -----------------------------------------------------

enum class BetaCProxy { TailOverlap, LyapunovPositive };

struct BetaCBracket {
  double lo = 0.0;
  double hi = 0.0;
  bool finite_size = true;     // always: these are finite-n proxies
  bool proxy_monotone = true;  // false = proxy direction flipped (reported)
  std::vector<std::pair<double, bool>> evals;  // (beta, strong?)
};

struct BetaCOptions {
  double tail_threshold = 0.01;  // TailOverlap proxy: median I_N above this
  double beta_hi_limit = 64.0;
  AdvanceOptions advance;
};

BetaCBracket bracket_beta_c(const DisorderModel& model, int d,
                            BetaCProxy proxy, int n, int replicas,
                            double tolerance, std::uint64_t seed_base,
                            const BetaCOptions& opt = {});

// ---- free-energy fluctuation scaling ---------------------------------------

struct ChiRow {
  int n = 0;
  double var_lnw = 0.0;
  double stderr_ = 0.0;  // ~ var * sqrt(2/(M-1))
};

struct ChiReport {
  std::vector<ChiRow> rows;
  double two_chi = 0.0;  // log-log slope of Var(ln W_n)
  double two_chi_stderr = 0.0;
};

ChiReport chi_scan(const DisorderModel& model, int d, double beta,
                   const std::vector<int>& horizons, int replicas,
                   std::uint64_t seed_base, const AdvanceOptions& opt = {});

}  // namespace dirpoly
