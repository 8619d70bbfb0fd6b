#include "dirpoly/thermo.hpp"

#include <algorithm>
#include <cmath>

#include "dirpoly/errors.hpp"
#include "dirpoly/polymer.hpp"
#include "dirpoly/stats.hpp"

namespace dirpoly {

ThermoTrace energy_fluctuation_trace(const EnvironmentField& field,
                                     double beta,
                                     const std::vector<int>& horizons,
                                     const ThermoOptions& opt) {
  if (horizons.empty() ||
      !std::is_sorted(horizons.begin(), horizons.end()))
    throw Error(ErrorCode::ConfigInvalid, "thermo trace: horizons ascending");
  const DisorderModel& model = field.model();
  if (!(opt.pi_d > 0.0 && opt.pi_d < 1.0))
    throw Error(ErrorCode::ConfigInvalid, "thermo trace requires pi_d");
  if (!l2_condition(model, beta, opt.pi_d).satisfied)
    throw Error(ErrorCode::OutsideU1,
                "energy trace requires the L2 condition at beta");

  const double lam = log_mgf(model, beta);
  const double lam1 = log_mgf_deriv(model, beta, 1);
  ThermoTrace trace;
  trace.beta = beta;
  trace.horizons = horizons;

  DerivativeSlice s = make_initial_derivative_slice(field.dimension());
  std::size_t next = 0;
  const int hmax = horizons.back();
  for (int t = 1; t <= hmax && next < horizons.size(); ++t) {
    s = advance_with_derivative(s, field, beta, opt.advance);
    if (horizons[next] == t) {
      const double mu_h = path_mean_energy(s);
      const double lnw = std::log(pairwise_sum(s.z.w)) + s.z.logscale - t * lam;
      const double u = mu_h - t * lam1;
      trace.mu_energy.push_back(mu_h);
      trace.u.push_back(u);
      trace.lnw.push_back(lnw);
      trace.s.push_back(beta * u - lnw);
      ++next;
    }
  }
  return trace;
}

EnergyCltSample energy_clt_sample(const EnvironmentField& field, double beta,
                                  int n, int k, std::uint64_t path_seed,
                                  const AdvanceOptions& opt) {
  const DisorderModel& model = field.model();
  const double lam1 = log_mgf_deriv(model, beta, 1);
  const double lam2 = log_mgf_deriv(model, beta, 2);

  SampleOptions sopt;
  sopt.path_seed = path_seed;
  sopt.advance = opt;
  // sqrt(n)-checkpointing keeps the retained slice memory flat for the
  // 1e4-path runs.
  sopt.checkpoint = n > 64;
  const std::vector<PolymerPath> paths = sample_paths(field, beta, n, k, sopt);

  EnergyCltSample out;
  out.standardized.resize(paths.size());
  const double sqn = std::sqrt(static_cast<double>(n));
  for (std::size_t p = 0; p < paths.size(); ++p) {
    double h = 0.0;
    for (int t = 1; t <= n; ++t) h += field.eta(t, paths[p].at(t));
    out.standardized[p] = (h - n * lam1) / sqn;
  }
  const double sd = std::sqrt(lam2);
  out.ks = ks_statistic(out.standardized,
                        [sd](double x) { return normal_cdf(x / sd); });
  const MeanStderr ms = mean_stderr(out.standardized);
  out.sample_mean = ms.mean;
  out.sample_variance = sample_variance(out.standardized);
  return out;
}

}  // namespace dirpoly
