#include "dirpoly/lattice.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "dirpoly/errors.hpp"
#include "dirpoly/rng.hpp"
#include "dirpoly/stats.hpp"

namespace dirpoly {

SitePacking::SitePacking(int dim) : d(dim) {
  if (d < 1 || d > 6)
    throw Error(ErrorCode::ConfigInvalid, "dimension must lie in [1,6]");
  bits = 63 / d;
}

std::uint64_t SitePacking::pack(std::span<const std::int32_t> x) const {
  const std::int64_t off = std::int64_t{1} << (bits - 1);
  std::uint64_t key = 0;
  for (int i = 0; i < d; ++i) {
    const std::int64_t c = x[i];
    if (c <= -off || c >= off)
      throw Error(ErrorCode::IndexOverflow, "site coordinate out of packing range");
    key = (key << bits) | static_cast<std::uint64_t>(c + off);
  }
  return key;
}

void SitePacking::unpack(std::uint64_t key, std::span<std::int32_t> out) const {
  const std::int64_t off = std::int64_t{1} << (bits - 1);
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  for (int i = d - 1; i >= 0; --i) {
    out[i] = static_cast<std::int32_t>(
        static_cast<std::int64_t>(key & mask) - off);
    key >>= bits;
  }
}

std::uint64_t SitePacking::origin() const {
  std::uint64_t key = 0;
  const std::uint64_t off = std::uint64_t{1} << (bits - 1);
  for (int i = 0; i < d; ++i) key = (key << bits) | off;
  return key;
}

std::vector<std::int64_t> SitePacking::neighbor_deltas() const {
  std::vector<std::int64_t> deltas;
  deltas.reserve(2 * d);
  for (int axis = 0; axis < d; ++axis) {
    const std::int64_t s = static_cast<std::int64_t>(stride(axis));
    deltas.push_back(-s);
    deltas.push_back(+s);
  }
  return deltas;
}

double path_count(int d, int n) {
  const double count = std::pow(2.0 * d, n);
  if (!(count <= 1e8))
    throw Error(ErrorCode::TooLarge, "enumerate_paths: (2d)^n exceeds 1e8");
  return count;
}

void enumerate_paths(
    int d, int n,
    const std::function<void(std::span<const std::int32_t>)>& visit) {
  path_count(d, n);
  if (n == 0) {
    visit({});
    return;
  }
  const int twod = 2 * d;
  std::vector<int> choice(n, 0);
  std::vector<std::int32_t> sites(static_cast<std::size_t>(n) * d, 0);
  // Rebuild positions from step t onward given the current choices.
  const auto rebuild = [&](int from) {
    for (int t = from; t < n; ++t) {
      const std::int32_t* prev =
          (t == 0) ? nullptr : &sites[static_cast<std::size_t>(t - 1) * d];
      std::int32_t* cur = &sites[static_cast<std::size_t>(t) * d];
      for (int i = 0; i < d; ++i) cur[i] = prev ? prev[i] : 0;
      const int axis = choice[t] / 2;
      cur[axis] += (choice[t] % 2 == 0) ? -1 : +1;
    }
  };
  rebuild(0);
  while (true) {
    visit(std::span<const std::int32_t>(sites));
    int t = n - 1;
    while (t >= 0 && choice[t] == twod - 1) {
      choice[t] = 0;
      --t;
    }
    if (t < 0) break;
    ++choice[t];
    rebuild(t);
  }
}

RealSlice srw_step(const RealSlice& prev) {
  const SitePacking pk(prev.d);
  const auto deltas = pk.neighbor_deltas();
  const int twod = 2 * prev.d;
  const double inv = 1.0 / twod;
  const std::size_t n = prev.size();

  RealSlice out;
  out.n = prev.n + 1;
  out.d = prev.d;
  out.keys.reserve(n + 2 * prev.d * (n > 0 ? 1 : 0) + n);
  out.w.reserve(out.keys.capacity());

  std::vector<std::size_t> cursor(twod, 0);
  while (true) {
    std::uint64_t y = UINT64_MAX;
    bool any = false;
    for (int j = 0; j < twod; ++j) {
      if (cursor[j] >= n) continue;
      const std::uint64_t k = prev.keys[cursor[j]] + deltas[j];
      if (!any || k < y) y = k;
      any = true;
    }
    if (!any) break;
    double s = 0.0;
    for (int j = 0; j < twod; ++j) {
      if (cursor[j] >= n) continue;
      if (prev.keys[cursor[j]] + deltas[j] == y) {
        s += prev.w[cursor[j]];
        ++cursor[j];
      }
    }
    out.keys.push_back(y);
    out.w.push_back(s * inv);
  }
  if (out.size() > kMaxSliceSites)
    throw Error(ErrorCode::TooLarge, "srw_step: slice exceeds site guard");
  return out;
}

RealSlice srw_occupation(int d, int n) {
  const SitePacking pk(d);
  RealSlice slice;
  slice.d = d;
  slice.keys = {pk.origin()};
  slice.w = {1.0};
  for (int t = 0; t < n; ++t) slice = srw_step(slice);
  return slice;
}

double srw_collision_probability(int d, int n) {
  const RealSlice occ = srw_occupation(d, n);
  std::vector<double> sq(occ.size());
  for (std::size_t i = 0; i < occ.size(); ++i) sq[i] = occ.w[i] * occ.w[i];
  return pairwise_sum(sq);
}

namespace {

// Local-CLT prefactor of the even-time return probability,
// P(omega_{2m} = 0) ~ 2 (d / (4 pi m))^{d/2}.
double return_clt_prefactor(int d) {
  return 2.0 * std::pow(d / (4.0 * std::numbers::pi), 0.5 * d);
}

// Euler-Maclaurin tail sum_{m>N} c m^{-d/2}.
double return_series_tail(int d, int N) {
  const double c = return_clt_prefactor(d);
  const double a = 0.5 * d - 1.0;
  return c * std::pow(N + 0.5, -a) / a;
}

ReturnEstimate green_series(int d, const ReturnBudget& budget) {
  const int N = budget.horizon;
  if (N < 8)
    throw Error(ErrorCode::ConfigInvalid, "green_series: horizon too small");

  // G(0) = 1 + sum_{m>=1} P(omega_{2m}=0); the even-time return
  // probability comes from the occupation law via sum_x p_m(x)^2.
  const SitePacking pk(d);
  RealSlice occ;
  occ.d = d;
  occ.keys = {pk.origin()};
  occ.w = {1.0};
  std::vector<double> terms;
  terms.reserve(N);
  double half_term = 0.0;  // value at N/2 for the convergence estimate
  for (int m = 1; m <= N; ++m) {
    occ = srw_step(occ);
    std::vector<double> sq(occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) sq[i] = occ.w[i] * occ.w[i];
    terms.push_back(pairwise_sum(sq));
    if (m == N / 2) {
      const double gh = 1.0 + pairwise_sum(terms) + return_series_tail(d, m);
      half_term = 1.0 - 1.0 / gh;
    }
  }
  const double tail = return_series_tail(d, N);
  const double green = 1.0 + pairwise_sum(terms) + tail;

  ReturnEstimate est;
  est.estimate = 1.0 - 1.0 / green;
  // Convergence distance between the N/2 and N truncations, plus the
  // next-order local-CLT correction of the tail estimate.
  est.error_bound =
      2.0 * std::fabs(est.estimate - half_term) + 3.0 * tail / N;
  est.method = "green_series";
  est.horizon = N;
  return est;
}

ReturnEstimate monte_carlo(int d, const ReturnBudget& budget) {
  // Round the horizon down to a power of two so the dyadic first-return
  // windows tile it exactly.
  int T = 64;
  while (2 * T <= budget.horizon) T *= 2;
  const std::int64_t M = budget.walks;
  if (M < 1000)
    throw Error(ErrorCode::ConfigInvalid, "monte_carlo: budget too small");

  int windows = 0;  // top window index; window j covers t in [2^j, 2^{j+1})
  while ((1 << (windows + 1)) < T) ++windows;

  std::int64_t window_hits[64] = {};
  std::int64_t returned = 0;

#pragma omp parallel for schedule(static) reduction(+ : returned) \
    reduction(+ : window_hits)
  for (std::int64_t walk = 0; walk < M; ++walk) {
    CounterRng rng(hash2(budget.seed, static_cast<std::uint64_t>(walk)));
    std::array<std::int64_t, 6> x{};
    for (int t = 1; t <= T; ++t) {
      const std::uint32_t step = rng.next_below(static_cast<std::uint32_t>(2 * d));
      const int axis = static_cast<int>(step >> 1);
      x[axis] += (step & 1) ? 1 : -1;
      bool zero = true;
      for (int i = 0; i < d; ++i) zero = zero && (x[i] == 0);
      if (zero) {
        ++returned;
        int j = 0;
        while ((1 << (j + 1)) <= t) ++j;
        ++window_hits[std::min(j, windows)];
        break;
      }
    }
  }

  const double frac = static_cast<double>(returned) / static_cast<double>(M);
  // Dyadic windows of the first-return law decay geometrically for the
  // n^{-d/2} tail; extrapolate the remaining mass from the last ratio.
  const double last = static_cast<double>(window_hits[windows]) / M;
  const double prevw = static_cast<double>(window_hits[windows - 1]) / M;
  double tail = 0.0;
  double tail_unc = 0.0;
  if (last > 0.0 && prevw > 0.0) {
    const double ratio = std::min(0.95, last / prevw);
    tail = last * ratio / (1.0 - ratio);
    tail_unc = 0.5 * tail + 4.0 * std::sqrt(last / M) / (1.0 - ratio);
  } else {
    tail_unc = return_series_tail(d, T / 2);  // no-hit fallback bound
  }

  ReturnEstimate est;
  est.estimate = frac + tail;
  const double se = std::sqrt(frac * (1.0 - frac) / static_cast<double>(M));
  est.error_bound = 4.0 * se + tail_unc;
  est.method = "monte_carlo";
  est.horizon = T;
  return est;
}

}  // namespace

ReturnEstimate return_probability(int d, ReturnMethod method,
                                  const ReturnBudget& budget) {
  if (d < 1)
    throw Error(ErrorCode::ConfigInvalid, "return_probability: d must be >= 1");
  if (d <= 2) {
    ReturnEstimate est;
    est.estimate = 1.0;
    est.error_bound = 0.0;
    est.recurrent_dimension = true;
    est.method = "recurrent";
    return est;
  }
  ReturnEstimate est = method == ReturnMethod::GreenSeries
                           ? green_series(d, budget)
                           : monte_carlo(d, budget);
  if (budget.target_error > 0.0 && est.error_bound > budget.target_error)
    throw Error(ErrorCode::BudgetExceeded,
                "return_probability: error bound " +
                    std::to_string(est.error_bound) +
                    " exceeds target within budget");
  return est;
}

std::vector<PiCacheEntry> load_pi_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::ConfigInvalid, "pi cache not readable: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("version", 0) != 1)
    throw Error(ErrorCode::ConfigInvalid, "pi cache: unsupported version");
  std::vector<PiCacheEntry> entries;
  for (const auto& e : j.at("entries")) {
    PiCacheEntry entry;
    entry.d = e.at("d").get<int>();
    entry.pi_d = e.at("pi_d").get<double>();
    entry.error_bound = e.at("error_bound").get<double>();
    entry.method = e.at("method").get<std::string>();
    entry.horizon = e.at("horizon").get<int>();
    entries.push_back(entry);
  }
  return entries;
}

void save_pi_cache(const std::string& path,
                   const std::vector<PiCacheEntry>& entries) {
  nlohmann::json j;
  j["version"] = 1;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    j["entries"].push_back({{"d", e.d},
                            {"pi_d", e.pi_d},
                            {"error_bound", e.error_bound},
                            {"method", e.method},
                            {"horizon", e.horizon}});
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

double pi_d_cached(int d, const std::string& cache_path) {
  if (!cache_path.empty()) {
    std::ifstream probe(cache_path);
    if (probe) {
      for (const auto& e : load_pi_cache(cache_path))
        if (e.d == d) return e.pi_d;
    }
  }
  return return_probability(d, ReturnMethod::GreenSeries).estimate;
}

}  // namespace dirpoly
