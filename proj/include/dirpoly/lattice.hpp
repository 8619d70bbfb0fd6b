#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dirpoly {

// Largest slice the engine will materialize (site count).
inline constexpr std::size_t kMaxSliceSites = std::size_t{1} << 27;

// Fixed-width packing of a lattice site into one 64-bit key.  Each of the
// d coordinates is biased by 2^(bits-1) and packed big-endian, so numeric
// key order is lexicographic coordinate order and adding a coordinate
// step shifts the key by a constant stride.
struct SitePacking {
  int d = 1;
  int bits = 63;

  explicit SitePacking(int dim);

  std::int64_t coord_limit() const { return (std::int64_t{1} << (bits - 1)) - 2; }
  std::uint64_t stride(int axis) const {
    return std::uint64_t{1} << (bits * (d - 1 - axis));
  }

  std::uint64_t pack(std::span<const std::int32_t> x) const;
  void unpack(std::uint64_t key, std::span<std::int32_t> out) const;
  std::uint64_t origin() const;

  // Neighbor deltas in the fixed order (-e1, +e1, -e2, +e2, ...), as
  // signed key offsets.  This order is shared by every kernel so that
  // independently written sweeps produce bit-identical sums.
  std::vector<std::int64_t> neighbor_deltas() const;
};

// Sparse lattice function at one time step: sorted packed keys with
// parallel values.  True stored quantity is w[i] * exp(logscale) for real
// slices (logscale stays 0 for plain probability tables).
template <typename V>
struct Slice {
  int n = 0;
  int d = 1;
  double logscale = 0.0;
  std::vector<std::uint64_t> keys;
  std::vector<V> w;

  std::size_t size() const { return keys.size(); }

  // Index of key, or npos.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find(std::uint64_t key) const {
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) return npos;
    return static_cast<std::size_t>(it - keys.begin());
  }
};

using RealSlice = Slice<double>;

// Walk over all (2d)^n nearest-neighbor paths from the origin.  The
// visitor receives the flattened site list (n steps, d coords per step:
// omega_1..omega_n).  Guard: (2d)^n <= 1e8.
void enumerate_paths(
    int d, int n,
    const std::function<void(std::span<const std::int32_t>)>& visit);

// Number of paths, validated against the enumeration guard.
double path_count(int d, int n);

// Exact simple-random-walk occupation law P(omega_n = x) by convolution.
RealSlice srw_occupation(int d, int n);

// One convolution step p -> p * kernel (uniform nearest-neighbor).
RealSlice srw_step(const RealSlice& prev);

// P(two independent walks of length n meet), i.e. sum_x p_n(x)^2.
double srw_collision_probability(int d, int n);

enum class ReturnMethod { GreenSeries, MonteCarlo };

struct ReturnBudget {
  int horizon = 256;            // series terms / walk horizon
  std::int64_t walks = 1000000; // Monte Carlo only
  std::uint64_t seed = 0x9d2c5680u;
  double target_error = 0.0;    // 0 = no requirement
};

struct ReturnEstimate {
  double estimate = 1.0;
  double error_bound = 0.0;
  bool recurrent_dimension = false;  // d <= 2: walk returns a.s.
  std::string method;
  int horizon = 0;
};

// Probability that the d-dimensional SRW ever revisits the origin.
// d <= 2 short-circuits to 1 with the recurrent flag.  Throws
// BudgetExceeded if target_error > 0 cannot be met.
ReturnEstimate return_probability(int d, ReturnMethod method,
                                  const ReturnBudget& budget = {});

// Versioned JSON cache {d -> (pi_d, error_bound, method, horizon)}.
struct PiCacheEntry {
  int d = 0;
  double pi_d = 0.0;
  double error_bound = 0.0;
  std::string method;
  int horizon = 0;
};

std::vector<PiCacheEntry> load_pi_cache(const std::string& path);
void save_pi_cache(const std::string& path,
                   const std::vector<PiCacheEntry>& entries);

// Cache lookup with fallback to a fresh green-series run (the fresh value
// is not persisted; campaigns that want persistence call save_pi_cache).
double pi_d_cached(int d, const std::string& cache_path);

}  // namespace dirpoly
