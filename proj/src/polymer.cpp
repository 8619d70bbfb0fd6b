#include "dirpoly/polymer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dirpoly/errors.hpp"
#include "dirpoly/rng.hpp"
#include "dirpoly/stats.hpp"

namespace dirpoly {

namespace {

// Backward transition at time t: given omega_t, the previous site is a
// neighbor x with probability proportional to Z_{t-1}(x) (the shared
// environment factor at (t, omega_t) cancels).
std::uint64_t backward_draw(const PartitionSlice& prev, std::uint64_t key_t,
                            const SitePacking& pk,
                            const std::vector<std::int64_t>& deltas,
                            double u) {
  std::array<double, 12> w{};
  std::array<std::uint64_t, 12> cand{};
  double total = 0.0;
  const int m = static_cast<int>(deltas.size());
  for (int j = 0; j < m; ++j) {
    cand[j] = key_t + static_cast<std::uint64_t>(deltas[j]);
    const std::size_t idx = prev.find(cand[j]);
    w[j] = idx == PartitionSlice::npos ? 0.0 : prev.w[idx];
    total += w[j];
  }
  if (!(total > 0.0))
    throw Error(ErrorCode::MissingSlices,
                "backward sampling hit an empty neighbor set");
  const double r = u * total;
  double cum = 0.0;
  for (int j = 0; j < m; ++j) {
    cum += w[j];
    if (r < cum) return cand[j];
  }
  // u ~ 1 rounding: fall back to the last positive weight.
  for (int j = m - 1; j >= 0; --j)
    if (w[j] > 0.0) return cand[j];
  return cand[0];
}

// Endpoint draw from the (unnormalized) final slice via its prefix sums.
std::uint64_t endpoint_draw(const PartitionSlice& last,
                            const std::vector<double>& cum, double u) {
  const double r = u * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), r);
  std::size_t idx = static_cast<std::size_t>(it - cum.begin());
  if (idx >= last.size()) idx = last.size() - 1;
  return last.keys[idx];
}

std::vector<double> prefix_mass(const PartitionSlice& s) {
  std::vector<double> cum(s.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc += s.w[i];
    cum[i] = acc;
  }
  return cum;
}

}  // namespace

std::vector<PartitionSlice> all_slices(const EnvironmentField& field,
                                       double beta, int n,
                                       const AdvanceOptions& opt) {
  std::vector<PartitionSlice> slices;
  slices.reserve(n + 1);
  slices.push_back(make_initial_slice(field.dimension()));
  for (int t = 1; t <= n; ++t)
    slices.push_back(advance(slices.back(), field, beta, opt));
  return slices;
}

std::vector<PolymerPath> sample_paths(const EnvironmentField& field,
                                      double beta, int n, int k,
                                      const SampleOptions& opt) {
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "sample_paths: n >= 1");
  const int d = field.dimension();
  const SitePacking pk(d);
  const auto deltas = pk.neighbor_deltas();

  std::vector<PolymerPath> paths(k);
  std::vector<std::uint64_t> cur(k);

  const auto record = [&](int t, std::size_t path, std::uint64_t key) {
    std::array<std::int32_t, 6> c{};
    pk.unpack(key, {c.data(), static_cast<std::size_t>(d)});
    std::int32_t* dst =
        paths[path].sites.data() + static_cast<std::size_t>(t) * d;
    for (int i = 0; i < d; ++i) dst[i] = c[i];
  };
  for (int p = 0; p < k; ++p) {
    paths[p].n = n;
    paths[p].d = d;
    paths[p].beta = beta;
    paths[p].env_seed = field.seed();
    paths[p].path_seed = opt.path_seed;
    paths[p].sites.assign(static_cast<std::size_t>(n + 1) * d, 0);
  }

  // Per-(path, time) uniforms keyed on absolute indices: the draw sequence
  // is identical in retained and checkpointed modes.
  const auto draw_u = [&](std::size_t path, int t) {
    return uniform_open(
        hash3(opt.path_seed, static_cast<std::uint64_t>(path),
              static_cast<std::uint64_t>(t)));
  };

  if (!opt.checkpoint) {
    const std::vector<PartitionSlice> slices = all_slices(field, beta, n, opt.advance);
    const std::vector<double> cum = prefix_mass(slices[n]);
    for (int p = 0; p < k; ++p) {
      cur[p] = endpoint_draw(slices[n], cum, draw_u(p, n + 1));
      record(n, p, cur[p]);
    }
    for (int t = n; t >= 1; --t) {
      const PartitionSlice& prev = slices[t - 1];
      for (int p = 0; p < k; ++p) {
        cur[p] = backward_draw(prev, cur[p], pk, deltas, draw_u(p, t));
        if (t > 1) record(t - 1, p, cur[p]);
      }
    }
    return paths;
  }

  // Checkpoint mode: keep slices at stride s, recompute each block once
  // while the whole batch walks backward through it.
  const int stride = opt.checkpoint_stride > 0
                         ? opt.checkpoint_stride
                         : std::max(1, static_cast<int>(std::ceil(
                                           std::sqrt(static_cast<double>(n)))));
  std::vector<PartitionSlice> checkpoints;  // at times 0, s, 2s, ...
  checkpoints.push_back(make_initial_slice(d));
  {
    PartitionSlice s = checkpoints.back();
    for (int t = 1; t <= n; ++t) {
      s = advance(s, field, beta, opt.advance);
      if (t % stride == 0 && t < n) checkpoints.push_back(s);
    }
    // Final slice handled via the last block below; draw endpoints now.
    const std::vector<double> cum = prefix_mass(s);
    for (int p = 0; p < k; ++p) {
      cur[p] = endpoint_draw(s, cum, draw_u(p, n + 1));
      record(n, p, cur[p]);
    }
  }

  int block_hi = n;
  while (block_hi >= 1) {
    const int cp_index = (block_hi - 1) / stride;
    const int block_lo = cp_index * stride;  // checkpoint time
    std::vector<PartitionSlice> block;
    block.push_back(checkpoints[cp_index]);
    for (int t = block_lo + 1; t <= block_hi - 1; ++t)
      block.push_back(advance(block.back(), field, beta, opt.advance));
    for (int t = block_hi; t > block_lo; --t) {
      const PartitionSlice& prev = block[t - 1 - block_lo];
      for (int p = 0; p < k; ++p) {
        cur[p] = backward_draw(prev, cur[p], pk, deltas, draw_u(p, t));
        if (t > 1) record(t - 1, p, cur[p]);
      }
    }
    block_hi = block_lo;
  }
  return paths;
}

double path_log_probability(const std::vector<PartitionSlice>& slices,
                            const PolymerPath& path) {
  if (static_cast<int>(slices.size()) < path.n + 1)
    throw Error(ErrorCode::MissingSlices, "path_log_probability needs slices 0..n");
  const SitePacking pk(path.d);
  const auto deltas = pk.neighbor_deltas();
  const int n = path.n;

  double logp = 0.0;
  // Endpoint factor mu_n(omega_n = x) = Z_n(x)/Z_n.
  const PartitionSlice& last = slices[n];
  const std::uint64_t end_key = pk.pack(path.at(n));
  const std::size_t ei = last.find(end_key);
  if (ei == PartitionSlice::npos) return -std::numeric_limits<double>::infinity();
  logp += std::log(last.w[ei]) - std::log(pairwise_sum(last.w));

  for (int t = n; t >= 1; --t) {
    const PartitionSlice& prev = slices[t - 1];
    const std::uint64_t key_t = pk.pack(path.at(t));
    double total = 0.0;
    for (std::size_t j = 0; j < deltas.size(); ++j) {
      const std::size_t idx =
          prev.find(key_t + static_cast<std::uint64_t>(deltas[j]));
      if (idx != PartitionSlice::npos) total += prev.w[idx];
    }
    const std::size_t pi = prev.find(pk.pack(path.at(t - 1)));
    if (pi == PartitionSlice::npos || !(total > 0.0))
      return -std::numeric_limits<double>::infinity();
    logp += std::log(prev.w[pi]) - std::log(total);
  }
  return logp;
}

RescaledPath rescale(const PolymerPath& path) {
  if (path.n < 1) throw Error(ErrorCode::ConfigInvalid, "rescale: n >= 1");
  return RescaledPath{&path};
}

void RescaledPath::eval(double t, std::span<double> out) const {
  const int n = path->n;
  const int d = path->d;
  const double s = std::clamp(t, 0.0, 1.0) * n;
  const int i = std::min(static_cast<int>(s), n - 1);
  const double frac = s - i;
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  const auto a = path->at(i);
  const auto b = path->at(i + 1);
  for (int kk = 0; kk < d; ++kk)
    out[kk] = (a[kk] + frac * (b[kk] - a[kk])) * inv;
}

CltReport clt_statistics(const std::vector<PolymerPath>& ensemble,
                         const std::vector<double>& weights) {
  if (ensemble.size() < 100)
    throw Error(ErrorCode::InsufficientSamples,
                "clt_statistics needs at least 100 paths");
  const int d = ensemble.front().d;
  const int n = ensemble.front().n;
  for (const auto& p : ensemble)
    if (p.d != d || p.n != n)
      throw Error(ErrorCode::ConfigInvalid,
                  "clt_statistics: ensemble must share (d, n)");
  const bool weighted = !weights.empty();
  if (weighted && weights.size() != ensemble.size())
    throw Error(ErrorCode::ConfigInvalid, "clt_statistics: weights size");

  const std::size_t m = ensemble.size();
  const double sqn = std::sqrt(static_cast<double>(n));
  CltReport rep;
  rep.n = n;
  rep.d = d;
  rep.paths = m;
  rep.mean.assign(d, 0.0);
  rep.variance.assign(d, 0.0);

  std::vector<std::vector<double>> coords(d, std::vector<double>(m));
  std::vector<double> wts(m, 1.0);
  if (weighted) wts = weights;
  for (std::size_t i = 0; i < m; ++i) {
    const auto last = ensemble[i].at(n);
    for (int kk = 0; kk < d; ++kk) coords[kk][i] = last[kk] / sqn;
  }
  const double wtotal = pairwise_sum(wts);
  std::vector<double> tmp(m);
  for (int kk = 0; kk < d; ++kk) {
    for (std::size_t i = 0; i < m; ++i) tmp[i] = wts[i] * coords[kk][i];
    rep.mean[kk] = pairwise_sum(tmp) / wtotal;
    for (std::size_t i = 0; i < m; ++i) {
      const double dev = coords[kk][i] - rep.mean[kk];
      tmp[i] = wts[i] * dev * dev;
    }
    rep.variance[kk] = pairwise_sum(tmp) / wtotal;
  }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      for (std::size_t i = 0; i < m; ++i)
        tmp[i] = wts[i] * (coords[a][i] - rep.mean[a]) *
                 (coords[b][i] - rep.mean[b]);
      rep.cross_cov.push_back(pairwise_sum(tmp) / wtotal);
    }

  // Coordinate 1 standardized to unit variance under the SRW law.
  const double scale = std::sqrt(static_cast<double>(d));
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = coords[0][i] * scale;
  rep.ks_coord1 = ks_statistic(z, [](double x) { return normal_cdf(x); });
  double m2 = 0.0, m4 = 0.0, mu = 0.0;
  for (double v : z) mu += v;
  mu /= static_cast<double>(m);
  for (double v : z) {
    const double dev = v - mu;
    m2 += dev * dev;
    m4 += dev * dev * dev * dev;
  }
  m2 /= static_cast<double>(m);
  m4 /= static_cast<double>(m);
  rep.kurtosis_coord1 = m4 / (m2 * m2);
  return rep;
}

MsdReport msd_exponent(const DisorderModel& model, int d,
                       const std::vector<double>& betas,
                       const std::vector<int>& horizons, int replicas,
                       std::uint64_t seed_base, const AdvanceOptions& opt) {
  if (horizons.empty() || betas.empty())
    throw Error(ErrorCode::ConfigInvalid, "msd_exponent: empty grids");
  MsdReport rep;
  const int hmax = *std::max_element(horizons.begin(), horizons.end());
  for (double beta : betas) {
    std::vector<std::vector<double>> msd(
        horizons.size(), std::vector<double>(replicas, 0.0));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < replicas; ++r) {
      EnvironmentField field(hash2(seed_base, static_cast<std::uint64_t>(r)),
                             model, d);
      AdvanceOptions aopt = opt;
      aopt.allow_parallel = false;
      PartitionSlice s = make_initial_slice(d);
      for (int t = 1; t <= hmax; ++t) {
        s = advance(s, field, beta, aopt);
        for (std::size_t h = 0; h < horizons.size(); ++h)
          if (horizons[h] == t) msd[h][r] = endpoint_second_moment(s);
      }
    }
    std::vector<double> lx, ly;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const MeanStderr ms = mean_stderr(msd[h]);
      rep.rows.push_back({beta, horizons[h], ms.mean, ms.stderr_});
      lx.push_back(std::log(static_cast<double>(horizons[h])));
      ly.push_back(std::log(ms.mean));
    }
    const LinearFit fit = linear_fit(lx, ly);
    rep.xi = 0.5 * fit.slope;
    rep.xi_stderr = 0.5 * fit.slope_stderr;
    rep.xi_by_beta.push_back({beta, {rep.xi, rep.xi_stderr}});
  }
  return rep;
}

double prefix_variation_distance(const EnvironmentField& field, double beta,
                                 int m, int k1, int k2,
                                 const AdvanceOptions& opt) {
  const int d = field.dimension();
  if (std::pow(2.0 * d, m) > 1e6)
    throw Error(ErrorCode::TooLarge, "prefix_variation_distance: (2d)^m > 1e6");
  const DisorderModel& model = field.model();
  const double lam = log_mgf(model, beta);

  const int n1 = m + k1, n2 = m + k2;
  const int nmax = std::max(n1, n2);
  double lnw1 = 0.0, lnw2 = 0.0;
  {
    PartitionSlice s = make_initial_slice(d);
    for (int t = 1; t <= nmax; ++t) {
      s = advance(s, field, beta, opt);
      if (t == n1) lnw1 = log_normalized_mass(s, model, beta);
      if (t == n2) lnw2 = log_normalized_mass(s, model, beta);
    }
  }
  const PartitionSlice v1 = remainder_field(field, beta, m, n1, opt);
  const PartitionSlice v2 = remainder_field(field, beta, m, n2, opt);

  const SitePacking pk(d);
  const double log_inv_paths = -m * std::log(2.0 * d);
  double tv = 0.0;
  enumerate_paths(d, m, [&](std::span<const std::int32_t> sites) {
    double h = 0.0;
    for (int t = 1; t <= m; ++t)
      h += field.eta(t, sites.subspan(static_cast<std::size_t>(t - 1) * d,
                                      static_cast<std::size_t>(d)));
    const double log_zeta = beta * h - m * lam;
    const std::uint64_t end_key =
        pk.pack(sites.subspan(static_cast<std::size_t>(m - 1) * d,
                              static_cast<std::size_t>(d)));
    const std::size_t i1 = v1.find(end_key);
    const std::size_t i2 = v2.find(end_key);
    const double p1 =
        i1 == PartitionSlice::npos
            ? 0.0
            : std::exp(log_zeta + log_inv_paths + std::log(v1.w[i1]) +
                       v1.logscale - lnw1);
    const double p2 =
        i2 == PartitionSlice::npos
            ? 0.0
            : std::exp(log_zeta + log_inv_paths + std::log(v2.w[i2]) +
                       v2.logscale - lnw2);
    tv += std::fabs(p1 - p2);
  });
  return tv;
}

}  // namespace dirpoly
