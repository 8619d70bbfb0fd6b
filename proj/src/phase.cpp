#include "dirpoly/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dirpoly/errors.hpp"
#include "dirpoly/rng.hpp"
#include "dirpoly/stats.hpp"

namespace dirpoly {

std::vector<ReplicaRow> run_trajectories(const TrajectoryRequest& req) {
  if (req.horizons.empty() ||
      !std::is_sorted(req.horizons.begin(), req.horizons.end()) ||
      std::adjacent_find(req.horizons.begin(), req.horizons.end()) !=
          req.horizons.end() ||
      req.horizons.front() < 1)
    throw Error(ErrorCode::ConfigInvalid,
                "run_trajectories: horizons must be strictly ascending, >= 1");
  const int hmax = req.horizons.back();
  std::vector<ReplicaRow> rows(req.replicas);

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < req.replicas; ++r) {
    const std::uint64_t seed = hash2(req.seed_base, static_cast<std::uint64_t>(r));
    EnvironmentField field(seed, req.model, req.d);
    AdvanceOptions aopt = req.advance;
    aopt.allow_parallel = false;

    ReplicaRow row;
    row.seed = seed;
    PartitionSlice s = make_initial_slice(req.d);
    double opartial = 0.0;
    std::size_t next = 0;
    for (int t = 1; t <= hmax; ++t) {
      if (req.record_overlap) {
        const double it = overlap_next(s);  // I_t from the time t-1 slice
        opartial += it;
        if (req.horizons[next] == t) {
          row.overlap_sum.push_back(opartial);
          row.overlap_tail.push_back(it);
        }
      }
      s = advance(s, field, req.beta, aopt);
      if (req.horizons[next] == t) {
        row.lnw.push_back(log_normalized_mass(s, req.model, req.beta));
        row.mu2.push_back(endpoint_second_moment(s));
        ++next;
      }
    }
    rows[r] = std::move(row);
  }
  return rows;
}

std::vector<FractionalMomentRow> fractional_moment_scan(
    const DisorderModel& model, int d, double delta,
    const std::vector<double>& beta_grid, int n, int replicas,
    Coupling coupling, std::uint64_t seed_base, const AdvanceOptions& opt) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::ConfigInvalid, "fractional moments need delta in (0,1)");
  if (!std::is_sorted(beta_grid.begin(), beta_grid.end()))
    throw Error(ErrorCode::ConfigInvalid, "beta grid must be ascending");
  std::vector<FractionalMomentRow> out;
  for (std::size_t bi = 0; bi < beta_grid.size(); ++bi) {
    TrajectoryRequest req;
    req.model = model;
    req.d = d;
    req.beta = beta_grid[bi];
    req.horizons = {n};
    req.replicas = replicas;
    req.seed_base = coupling == Coupling::CommonRandomNumbers
                        ? seed_base
                        : hash2(seed_base, bi + 1);
    req.advance = opt;
    const auto rows = run_trajectories(req);
    std::vector<double> wdelta(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      wdelta[r] = std::exp(delta * rows[r].lnw[0]);
    const MeanStderr ms = mean_stderr(wdelta);
    out.push_back({beta_grid[bi], ms.mean, ms.stderr_});
  }
  return out;
}

LyapunovReport lyapunov(const DisorderModel& model, int d, double beta,
                        const std::vector<int>& horizons, int replicas,
                        std::uint64_t seed_base, const AdvanceOptions& opt) {
  TrajectoryRequest req;
  req.model = model;
  req.d = d;
  req.beta = beta;
  req.horizons = horizons;
  req.replicas = replicas;
  req.seed_base = seed_base;
  req.advance = opt;
  const auto rows = run_trajectories(req);

  LyapunovReport rep;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    std::vector<double> scaled(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      scaled[r] = -rows[r].lnw[h] / horizons[h];
    const MeanStderr ms = mean_stderr(scaled);
    rep.rows.push_back({horizons[h], ms.mean, ms.stderr_});
  }
  rep.psi = rep.rows.back().psi;
  rep.psi_stderr = rep.rows.back().stderr_;
  std::vector<double> lnw(rows.size()), w(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    lnw[r] = rows[r].lnw.back();
    w[r] = std::exp(lnw[r]);
  }
  rep.mean_lnw_final = mean_stderr(lnw).mean;
  rep.jensen_ok = rep.mean_lnw_final <=
                  std::log(mean_stderr(w).mean) + 1e-12;
  return rep;
}

OverlapReport overlap_series(const DisorderModel& model, int d, double beta,
                             const std::vector<int>& horizons, int replicas,
                             std::uint64_t seed_base,
                             const AdvanceOptions& opt) {
  TrajectoryRequest req;
  req.model = model;
  req.d = d;
  req.beta = beta;
  req.horizons = horizons;
  req.replicas = replicas;
  req.seed_base = seed_base;
  req.record_overlap = true;
  req.advance = opt;
  auto rows = run_trajectories(req);

  OverlapReport rep;
  rep.horizons = horizons;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    std::vector<double> partial(rows.size()), tail(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      partial[r] = rows[r].overlap_sum[h];
      tail[r] = rows[r].overlap_tail[h];
    }
    rep.median_partial.push_back(median(partial));
    rep.median_tail.push_back(median(tail));
  }
  rep.rows = std::move(rows);
  return rep;
}

namespace {

bool proxy_strong(const DisorderModel& model, int d, BetaCProxy proxy,
                  double beta, int n, int replicas, std::uint64_t seed_base,
                  const BetaCOptions& opt) {
  if (proxy == BetaCProxy::TailOverlap) {
    const auto rep =
        overlap_series(model, d, beta, {n}, replicas, seed_base, opt.advance);
    return rep.median_tail.back() > opt.tail_threshold;
  }
  const auto rep =
      lyapunov(model, d, beta, {n}, replicas, seed_base, opt.advance);
  return rep.psi > 2.0 * rep.psi_stderr;
}

}  // namespace

BetaCBracket bracket_beta_c(const DisorderModel& model, int d,
                            BetaCProxy proxy, int n, int replicas,
                            double tolerance, std::uint64_t seed_base,
                            const BetaCOptions& opt) {
  BetaCBracket bracket;
  if (d <= 2) {
    // beta_c = 0 in low transverse dimension; nothing to bisect.
    bracket.lo = bracket.hi = 0.0;
    return bracket;
  }
  const auto strong = [&](double beta) {
    const bool s =
        proxy_strong(model, d, proxy, beta, n, replicas, seed_base, opt);
    bracket.evals.push_back({beta, s});
    return s;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (hi < opt.beta_hi_limit && !strong(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  if (hi >= opt.beta_hi_limit) {
    bracket.lo = lo;
    bracket.hi = std::numeric_limits<double>::infinity();
    return bracket;
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (strong(mid) ? hi : lo) = mid;
  }
  bracket.lo = lo;
  bracket.hi = hi;
  // Proxy direction check: sorted by beta the strong flags must be
  // monotone false -> true.
  auto evals = bracket.evals;
  std::sort(evals.begin(), evals.end());
  for (std::size_t i = 1; i < evals.size(); ++i)
    if (evals[i - 1].second && !evals[i].second) bracket.proxy_monotone = false;
  return bracket;
}

ChiReport chi_scan(const DisorderModel& model, int d, double beta,
                   const std::vector<int>& horizons, int replicas,
                   std::uint64_t seed_base, const AdvanceOptions& opt) {
  TrajectoryRequest req;
  req.model = model;
  req.d = d;
  req.beta = beta;
  req.horizons = horizons;
  req.replicas = replicas;
  req.seed_base = seed_base;
  req.advance = opt;
  const auto rows = run_trajectories(req);

  ChiReport rep;
  std::vector<double> lx, ly;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    std::vector<double> lnw(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) lnw[r] = rows[r].lnw[h];
    const double var = sample_variance(lnw);
    rep.rows.push_back(
        {horizons[h], var,
         var * std::sqrt(2.0 / std::max(1, replicas - 1))});
    lx.push_back(std::log(static_cast<double>(horizons[h])));
    ly.push_back(std::log(var));
  }
  const LinearFit fit = linear_fit(lx, ly);
  rep.two_chi = fit.slope;
  rep.two_chi_stderr = fit.slope_stderr;
  return rep;
}

}  // namespace dirpoly
