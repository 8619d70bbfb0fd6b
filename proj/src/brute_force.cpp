#include "dirpoly/brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "dirpoly/partition.hpp"
#include "dirpoly/polymer.hpp"
#include "dirpoly/rng.hpp"
#include "dirpoly/stats.hpp"

namespace dirpoly::brute_force {

namespace {

double path_energy(const EnvironmentField& field,
                   std::span<const std::int32_t> sites, int d, int n) {
  double h = 0.0;
  for (int t = 1; t <= n; ++t)
    h += field.eta(t, sites.subspan(static_cast<std::size_t>(t - 1) * d,
                                    static_cast<std::size_t>(d)));
  return h;
}

}  // namespace

PartitionSums partition(const EnvironmentField& field, double beta, int n) {
  const int d = field.dimension();
  const SitePacking pk(d);
  const double inv_paths = std::pow(2.0 * d, -n);
  std::map<std::uint64_t, double> zp;
  double z = 0.0;
  enumerate_paths(d, n, [&](std::span<const std::int32_t> sites) {
    const double w = inv_paths * std::exp(beta * path_energy(field, sites, d, n));
    z += w;
    zp[pk.pack(sites.subspan(static_cast<std::size_t>(n - 1) * d,
                             static_cast<std::size_t>(d)))] += w;
  });
  PartitionSums out;
  out.z = z;
  for (const auto& [k, v] : zp) {
    out.keys.push_back(k);
    out.z_point.push_back(v);
  }
  return out;
}

double normalized_mass(const EnvironmentField& field, double beta, int n) {
  return partition(field, beta, n).z *
         std::exp(-n * log_mgf(field.model(), beta));
}

std::vector<double> path_probabilities(const EnvironmentField& field,
                                       double beta, int n) {
  const int d = field.dimension();
  const double inv_paths = std::pow(2.0 * d, -n);
  std::vector<double> weights;
  double z = 0.0;
  enumerate_paths(d, n, [&](std::span<const std::int32_t> sites) {
    const double w = inv_paths * std::exp(beta * path_energy(field, sites, d, n));
    weights.push_back(w);
    z += w;
  });
  for (double& w : weights) w /= z;
  return weights;
}

double overlap(const EnvironmentField& field, double beta, int n) {
  const int d = field.dimension();
  const SitePacking pk(d);
  // Endpoint law of mu_{n-1}, then one uniform step.
  const PartitionSums sums = partition(field, beta, n - 1);
  std::map<std::uint64_t, double> q;
  const auto deltas = pk.neighbor_deltas();
  for (std::size_t i = 0; i < sums.keys.size(); ++i) {
    const double rho = sums.z_point[i] / sums.z / (2.0 * d);
    for (const std::int64_t delta : deltas)
      q[sums.keys[i] + static_cast<std::uint64_t>(delta)] += rho;
  }
  double is = 0.0;
  for (const auto& [k, v] : q) is += v * v;
  return is;
}

double lnw_derivative(const EnvironmentField& field, double beta, int n) {
  const int d = field.dimension();
  const double inv_paths = std::pow(2.0 * d, -n);
  double z = 0.0, zh = 0.0;
  enumerate_paths(d, n, [&](std::span<const std::int32_t> sites) {
    const double h = path_energy(field, sites, d, n);
    const double w = inv_paths * std::exp(beta * h);
    z += w;
    zh += w * h;
  });
  return zh / z - n * log_mgf_deriv(field.model(), beta, 1);
}

std::int32_t last_passage(const PercolationField& field, int n) {
  const int d = field.dimension();
  std::int32_t best = std::numeric_limits<std::int32_t>::min();
  enumerate_paths(d, n, [&](std::span<const std::int32_t> sites) {
    const double h = path_energy(field.env(), sites, d, n);
    best = std::max(best, static_cast<std::int32_t>(std::lround(h)));
  });
  return best;
}

std::complex<double> complex_normalized_mass(const EnvironmentField& field,
                                             std::complex<double> beta,
                                             int n) {
  const int d = field.dimension();
  const double inv_paths = std::pow(2.0 * d, -n);
  std::complex<double> z{0.0, 0.0};
  enumerate_paths(d, n, [&](std::span<const std::int32_t> sites) {
    z += inv_paths * std::exp(beta * path_energy(field, sites, d, n));
  });
  return z * std::exp(-static_cast<double>(n) *
                      log_mgf_complex(field.model(), beta));
}

namespace {

double rel_err(double a, double b) {
  const double denom = std::max(std::fabs(a), std::fabs(b));
  if (denom == 0.0) return 0.0;
  return std::fabs(a - b) / denom;
}

struct Check {
  SelftestReport* rep;
  void operator()(const std::string& name, double err, double tol) {
    ++rep->checks;
    rep->max_rel_error = std::max(rep->max_rel_error, err);
    if (!(err <= tol)) {
      ++rep->failures;
      rep->failed_checks.push_back(name + " err=" + std::to_string(err));
    }
  }
};

}  // namespace

SelftestReport run_selftest(int seeds, std::uint64_t seed_base) {
  SelftestReport rep;
  rep.seeds = seeds;
  Check check{&rep};
  const double tol = 1e-10;

  struct Case {
    int d;
    int n;
    DisorderModel model;
    double beta;
  };
  const std::vector<Case> cases = {
      {1, 8, DisorderModel::gaussian(), 0.8},
      {1, 6, DisorderModel::bernoulli(0.7), 2.0},
      {2, 6, DisorderModel::gaussian(), 0.6},
      {2, 5, DisorderModel::bernoulli(0.6), 1.5},
  };

  for (int s = 0; s < seeds; ++s) {
    for (const auto& cs : cases) {
      const std::uint64_t seed = hash3(seed_base, static_cast<std::uint64_t>(s),
                                       static_cast<std::uint64_t>(cs.d * 100 + cs.n));
      EnvironmentField field(seed, cs.model, cs.d);
      const std::string tag = "seed" + std::to_string(s) + "/d" +
                              std::to_string(cs.d) + "n" + std::to_string(cs.n);

      // Engine side: retained slices, no pruning.
      const auto slices = all_slices(field, cs.beta, cs.n);
      const PartitionSlice& top = slices.back();

      // Z_n and Z_n(x).
      const PartitionSums bf = partition(field, cs.beta, cs.n);
      const double z_dp = std::exp(std::log(pairwise_sum(top.w)) + top.logscale);
      check(tag + "/Z", rel_err(z_dp, bf.z), tol);
      double worst_pt = 0.0;
      for (std::size_t i = 0; i < bf.keys.size(); ++i) {
        const std::size_t idx = top.find(bf.keys[i]);
        if (idx == PartitionSlice::npos) {
          worst_pt = 1.0;
          break;
        }
        worst_pt = std::max(
            worst_pt, rel_err(std::exp(std::log(top.w[idx]) + top.logscale),
                              bf.z_point[i]));
      }
      check(tag + "/Z(x)", worst_pt, tol);

      // mu_n path probabilities through the backward decomposition.
      const std::vector<double> bf_probs =
          path_probabilities(field, cs.beta, cs.n);
      double worst_path = 0.0;
      std::size_t pi = 0;
      PolymerPath probe;
      probe.n = cs.n;
      probe.d = cs.d;
      enumerate_paths(cs.d, cs.n, [&](std::span<const std::int32_t> sites) {
        probe.sites.assign(static_cast<std::size_t>(cs.n + 1) * cs.d, 0);
        std::copy(sites.begin(), sites.end(),
                  probe.sites.begin() + cs.d);
        const double p_dp = std::exp(path_log_probability(slices, probe));
        worst_path = std::max(worst_path, rel_err(p_dp, bf_probs[pi]));
        ++pi;
      });
      check(tag + "/mu(path)", worst_path, tol);

      // Overlap I_n.
      check(tag + "/I_n",
            rel_err(overlap_next(slices[cs.n - 1]), overlap(field, cs.beta, cs.n)),
            tol);

      // (ln W_n)'.
      DerivativeSlice ds = make_initial_derivative_slice(cs.d);
      for (int t = 0; t < cs.n; ++t)
        ds = advance_with_derivative(ds, field, cs.beta);
      const double deriv_dp =
          path_mean_energy(ds) - cs.n * log_mgf_deriv(cs.model, cs.beta, 1);
      check(tag + "/lnW'", rel_err(deriv_dp, lnw_derivative(field, cs.beta, cs.n)),
            tol);

      // H_n* on Bernoulli cases.
      if (cs.model.kind == DisorderKind::Bernoulli) {
        PercolationField pf(field);
        const auto lp = dirpoly::last_passage(pf, cs.n);
        ++rep.checks;
        if (lp.best != last_passage(pf, cs.n)) {
          ++rep.failures;
          rep.failed_checks.push_back(tag + "/H*");
        }
      }
    }
  }
  return rep;
}

}  // namespace dirpoly::brute_force
