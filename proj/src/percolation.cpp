#include "dirpoly/percolation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dirpoly/detail/merge.hpp"
#include "dirpoly/errors.hpp"
#include "dirpoly/rng.hpp"
#include "dirpoly/stats.hpp"

namespace dirpoly {

using detail::merge_range;

PercolationField::PercolationField(EnvironmentField field)
    : field_(std::move(field)), p_(field_.model().p) {
  if (field_.model().kind != DisorderKind::Bernoulli)
    throw Error(ErrorCode::ConfigInvalid,
                "percolation requires a Bernoulli environment");
}

namespace {

struct MaxPlusGather {
  const std::int32_t* prev_w = nullptr;
  const PercolationField* field = nullptr;
  const SitePacking* pk = nullptr;
  std::int64_t t = 0;
  std::vector<std::uint64_t>* out_keys = nullptr;
  std::vector<std::int32_t>* out_w = nullptr;
  std::int32_t acc = 0;
  std::array<std::int32_t, 6> coords{};

  void begin_site() { acc = std::numeric_limits<std::int32_t>::min(); }
  void absorb(std::size_t i) { acc = std::max(acc, prev_w[i]); }
  void emit(std::uint64_t y) {
    pk->unpack(y, {coords.data(), static_cast<std::size_t>(pk->d)});
    const bool open =
        field->open(t, {coords.data(), static_cast<std::size_t>(pk->d)});
    out_keys->push_back(y);
    out_w->push_back(acc + (open ? 0 : -1));
  }
};

// Frontier step of oriented reachability: neighbors of the current
// frontier that are open in row t.
struct FrontierGather {
  const PercolationField* field = nullptr;
  const SitePacking* pk = nullptr;
  std::int64_t t = 0;
  std::vector<std::uint64_t>* out_keys = nullptr;
  std::array<std::int32_t, 6> coords{};

  void begin_site() {}
  void absorb(std::size_t) {}
  void emit(std::uint64_t y) {
    pk->unpack(y, {coords.data(), static_cast<std::size_t>(pk->d)});
    if (field->open(t, {coords.data(), static_cast<std::size_t>(pk->d)}))
      out_keys->push_back(y);
  }
};

std::vector<std::uint64_t> frontier_step(
    const std::vector<std::uint64_t>& frontier, const PercolationField& field,
    const SitePacking& pk, const std::vector<std::int64_t>& deltas,
    std::int64_t t) {
  std::vector<std::uint64_t> next;
  next.reserve(frontier.size() + frontier.size() / 2 + 8);
  FrontierGather pol;
  pol.field = &field;
  pol.pk = &pk;
  pol.t = t;
  pol.out_keys = &next;
  merge_range(frontier, deltas, false, 0, false, 0, pol);
  return next;
}

}  // namespace

LastPassageResult last_passage(const PercolationField& field, int n) {
  const int d = field.dimension();
  const SitePacking pk(d);
  const auto deltas = pk.neighbor_deltas();

  LastPassageResult res;
  LastPassageSlice cur;
  cur.d = d;
  cur.keys = {pk.origin()};
  cur.w = {0};
  for (int t = 1; t <= n; ++t) {
    LastPassageSlice next;
    next.n = t;
    next.d = d;
    next.keys.reserve(cur.size() + cur.size() / 2 + 8);
    next.w.reserve(next.keys.capacity());
    MaxPlusGather pol;
    pol.prev_w = cur.w.data();
    pol.field = &field;
    pol.pk = &pk;
    pol.t = t;
    pol.out_keys = &next.keys;
    pol.out_w = &next.w;
    merge_range(cur.keys, deltas, false, 0, false, 0, pol);
    if (next.size() > kMaxSliceSites)
      throw Error(ErrorCode::TooLarge, "last_passage: slice exceeds guard");
    cur = std::move(next);
    res.best_by_t.push_back(
        *std::max_element(cur.w.begin(), cur.w.end()));
  }
  res.best = res.best_by_t.empty() ? 0 : res.best_by_t.back();
  res.slice = std::move(cur);
  return res;
}

TimeConstantReport time_constant(double p, int d,
                                 const std::vector<int>& horizons,
                                 int replicas, std::uint64_t seed_base) {
  if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end()))
    throw Error(ErrorCode::ConfigInvalid, "time_constant: horizons ascending");
  const int hmax = horizons.back();
  std::vector<std::vector<double>> rate(horizons.size(),
                                        std::vector<double>(replicas));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < replicas; ++r) {
    PercolationField field(hash2(seed_base, static_cast<std::uint64_t>(r)), p,
                           d);
    const LastPassageResult lp = last_passage(field, hmax);
    for (std::size_t h = 0; h < horizons.size(); ++h)
      rate[h][r] = -static_cast<double>(lp.best_by_t[horizons[h] - 1]) /
                   horizons[h];
  }
  TimeConstantReport rep;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const MeanStderr ms = mean_stderr(rate[h]);
    rep.rows.push_back({horizons[h], ms.mean, ms.stderr_});
  }
  rep.tau = rep.rows.back().tau;
  rep.tau_stderr = rep.rows.back().stderr_;
  return rep;
}

SurvivalEstimate survival_probability(double p, int d, int depth,
                                      int replicas, std::uint64_t seed_base) {
  const SurvivalScan scan = survival_scan({p}, d, {depth}, replicas, seed_base);
  SurvivalEstimate est;
  est.depth = depth;
  est.fraction = scan.fraction[0][0];
  est.stderr_ = std::sqrt(est.fraction * (1.0 - est.fraction) /
                          static_cast<double>(replicas));
  return est;
}

SurvivalScan survival_scan(const std::vector<double>& p_grid, int d,
                           const std::vector<int>& depths, int replicas,
                           std::uint64_t seed_base) {
  if (p_grid.empty() || depths.empty() ||
      !std::is_sorted(depths.begin(), depths.end()))
    throw Error(ErrorCode::ConfigInvalid, "survival_scan: bad grids");
  const int tmax = depths.back();
  const SitePacking pk(d);
  const auto deltas = pk.neighbor_deltas();

  SurvivalScan scan;
  scan.p_grid = p_grid;
  scan.depths = depths;
  scan.replicas = replicas;
  std::vector<std::vector<std::int64_t>> hits(
      p_grid.size(), std::vector<std::int64_t>(depths.size(), 0));

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < replicas; ++r) {
    const std::uint64_t seed = hash2(seed_base, static_cast<std::uint64_t>(r));
    std::vector<std::vector<std::int64_t>> local(
        p_grid.size(), std::vector<std::int64_t>(depths.size(), 0));
    for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
      // Same seed across p: common random numbers by construction.
      PercolationField field(seed, p_grid[ip], d);
      std::vector<std::uint64_t> frontier = {pk.origin()};
      for (int t = 1; t <= tmax && !frontier.empty(); ++t) {
        frontier = frontier_step(frontier, field, pk, deltas, t);
        for (std::size_t it = 0; it < depths.size(); ++it)
          if (depths[it] == t && !frontier.empty()) local[ip][it] = 1;
      }
    }
#pragma omp critical
    for (std::size_t ip = 0; ip < p_grid.size(); ++ip)
      for (std::size_t it = 0; it < depths.size(); ++it)
        hits[ip][it] += local[ip][it];
  }

  scan.fraction.assign(p_grid.size(),
                       std::vector<double>(depths.size(), 0.0));
  for (std::size_t ip = 0; ip < p_grid.size(); ++ip)
    for (std::size_t it = 0; it < depths.size(); ++it)
      scan.fraction[ip][it] =
          static_cast<double>(hits[ip][it]) / static_cast<double>(replicas);
  return scan;
}

std::optional<double> estimate_pc_crossing(const SurvivalScan& scan) {
  if (scan.depths.size() < 3 || scan.p_grid.size() < 2) return std::nullopt;
  const std::size_t it = scan.depths.size() - 3;
  std::vector<double> g(scan.p_grid.size(),
                        std::numeric_limits<double>::quiet_NaN());
  for (std::size_t ip = 0; ip < scan.p_grid.size(); ++ip) {
    const double s1 = scan.fraction[ip][it];
    const double s2 = scan.fraction[ip][it + 1];
    const double s3 = scan.fraction[ip][it + 2];
    if (s1 <= 0.0 || s2 <= 0.0 || s3 <= 0.0) continue;
    g[ip] = std::log(s1 * s3 / (s2 * s2));
  }
  // First sign change of g along the grid, linearly interpolated.
  for (std::size_t ip = 0; ip + 1 < scan.p_grid.size(); ++ip) {
    if (std::isnan(g[ip]) || std::isnan(g[ip + 1])) continue;
    if (g[ip] < 0.0 && g[ip + 1] >= 0.0) {
      const double t = -g[ip] / (g[ip + 1] - g[ip]);
      return scan.p_grid[ip] + t * (scan.p_grid[ip + 1] - scan.p_grid[ip]);
    }
  }
  return std::nullopt;
}

ChemicalDistance chemical_distance(const PercolationField& field, int depth) {
  const int d = field.dimension();
  const SitePacking pk(d);
  const auto deltas = pk.neighbor_deltas();
  std::array<std::int32_t, 6> c{};

  // Forward min-plus: D_t(x) = closed(t,x) + min over neighbors D_{t-1}.
  Slice<std::int32_t> dist;
  dist.d = d;
  dist.keys = {pk.origin()};
  dist.w = {0};
  for (int t = 1; t <= depth; ++t) {
    Slice<std::int32_t> next;
    next.d = d;
    struct MinPlusGather {
      const std::int32_t* prev_w;
      const PercolationField* field;
      const SitePacking* pk;
      std::int64_t t;
      std::vector<std::uint64_t>* out_keys;
      std::vector<std::int32_t>* out_w;
      std::int32_t acc;
      std::array<std::int32_t, 6> coords;
      void begin_site() { acc = std::numeric_limits<std::int32_t>::max(); }
      void absorb(std::size_t i) { acc = std::min(acc, prev_w[i]); }
      void emit(std::uint64_t y) {
        pk->unpack(y, {coords.data(), static_cast<std::size_t>(pk->d)});
        const bool open =
            field->open(t, {coords.data(), static_cast<std::size_t>(pk->d)});
        out_keys->push_back(y);
        out_w->push_back(acc + (open ? 0 : 1));
      }
    } pol{dist.w.data(), &field, &pk, t, &next.keys, &next.w,
          0,             {}};
    merge_range(dist.keys, deltas, false, 0, false, 0, pol);
    dist = std::move(next);
  }

  // Backward liveness over rows [depth+1, 2*depth]: alive(t,y) means an
  // all-open oriented continuation from (t,y) through row 2T exists, so
  // alive_t = open(t) intersected with the one-step dilation of
  // alive_{t+1}.  The bottom row starts from all open sites in the
  // reachable cone.
  std::vector<std::uint64_t> alive;  // at current level, sorted
  {
    const int bottom = 2 * depth;
    // Open sites of the bottom row inside the cone |y|_1 <= 2T.
    std::vector<std::int32_t> site(d, 0);
    const std::function<void(int, int, int)> rec = [&](int axis, int budget,
                                                       int l1) {
      if (axis == d - 1) {
        for (int v = -budget; v <= budget; ++v) {
          if (((l1 + std::abs(v)) & 1) != (bottom & 1)) continue;
          site[axis] = v;
          if (field.open(bottom, site))
            alive.push_back(pk.pack(site));
        }
        return;
      }
      for (int v = -budget; v <= budget; ++v) {
        site[axis] = v;
        rec(axis + 1, budget - std::abs(v), l1 + std::abs(v));
      }
    };
    rec(0, bottom, 0);
    for (int t = bottom - 1; t > depth; --t) {
      struct AliveGather {
        const PercolationField* field;
        const SitePacking* pk;
        std::int64_t t;
        std::vector<std::uint64_t>* out_keys;
        std::array<std::int32_t, 6> coords;
        void begin_site() {}
        void absorb(std::size_t) {}
        void emit(std::uint64_t y) {
          pk->unpack(y, {coords.data(), static_cast<std::size_t>(pk->d)});
          if (field->open(t, {coords.data(), static_cast<std::size_t>(pk->d)}))
            out_keys->push_back(y);
        }
      };
      std::vector<std::uint64_t> up;
      up.reserve(alive.size() + alive.size() / 2 + 8);
      AliveGather pol{&field, &pk, t, &up, {}};
      merge_range(alive, deltas, false, 0, false, 0, pol);
      alive = std::move(up);
    }
  }

  // Qualifying endpoints at level T: open, with an alive neighbor below.
  ChemicalDistance best;
  best.dist = std::numeric_limits<std::int32_t>::max();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const std::uint64_t key = dist.keys[i];
    pk.unpack(key, {c.data(), static_cast<std::size_t>(d)});
    if (!field.open(depth, {c.data(), static_cast<std::size_t>(d)})) continue;
    bool linked = false;
    for (std::size_t j = 0; j < deltas.size() && !linked; ++j) {
      const std::uint64_t nb = key + static_cast<std::uint64_t>(deltas[j]);
      linked = std::binary_search(alive.begin(), alive.end(), nb);
    }
    if (!linked) continue;
    if (dist.w[i] < best.dist) {
      best.dist = dist.w[i];
      best.site.assign(c.begin(), c.begin() + d);
    }
  }
  if (best.site.empty())
    throw Error(ErrorCode::NoSurvivor,
                "chemical_distance: no depth-surviving endpoint");
  return best;
}

ZeroTemperatureReport zero_temperature_check(const PercolationField& field,
                                             int n,
                                             const std::vector<double>& betas,
                                             const AdvanceOptions& opt) {
  if (betas.empty() || !std::is_sorted(betas.begin(), betas.end()) ||
      betas.back() < 50.0)
    throw Error(ErrorCode::ConfigInvalid,
                "zero_temperature_check: ascending beta grid reaching >= 50");
  const DisorderModel& model = field.env().model();
  ZeroTemperatureReport rep;
  const LastPassageResult lp = last_passage(field, n);
  rep.hstar = lp.best;
  const double rhs = -static_cast<double>(lp.best) / n;
  for (double beta : betas) {
    PartitionSlice s = make_initial_slice(field.dimension());
    for (int t = 1; t <= n; ++t) s = advance(s, field.env(), beta, opt);
    const double lnw = log_normalized_mass(s, model, beta);
    ZeroTemperatureRow row;
    row.beta = beta;
    row.lhs = -lnw / (n * beta);
    row.rhs = rhs;
    row.delta = std::fabs(row.lhs - row.rhs);
    rep.rows.push_back(row);
  }
  return rep;
}

PsiTauMargin psi_tau_inequality(double p, int d, double beta, int n,
                                int replicas, std::uint64_t seed_base,
                                const AdvanceOptions& opt) {
  const DisorderModel model = DisorderModel::bernoulli(p);
  const double lam = log_mgf(model, beta);
  std::vector<double> margins(replicas), psis(replicas), taus(replicas);
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < replicas; ++r) {
    const std::uint64_t seed = hash2(seed_base, static_cast<std::uint64_t>(r));
    PercolationField field(seed, p, d);
    AdvanceOptions aopt = opt;
    aopt.allow_parallel = false;
    PartitionSlice s = make_initial_slice(d);
    for (int t = 1; t <= n; ++t) s = advance(s, field.env(), beta, aopt);
    const double lnw = log_normalized_mass(s, model, beta);
    const LastPassageResult lp = last_passage(field, n);
    const double tau_r = -static_cast<double>(lp.best) / n;
    // Pointwise: -(1/n beta) ln Z_n >= -H_n*/n on the same field.
    margins[r] = -lnw / (n * beta) - lam / beta - tau_r;
    psis[r] = -lnw / n;
    taus[r] = tau_r;
  }
  PsiTauMargin out;
  const MeanStderr ms = mean_stderr(margins);
  out.margin = ms.mean;
  out.stderr_ = ms.stderr_;
  out.psi = mean_stderr(psis).mean;
  out.tau = mean_stderr(taus).mean;
  out.violation = out.margin < -3.0 * out.stderr_;
  return out;
}

}  // namespace dirpoly
