#include "dirpoly/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dirpoly/errors.hpp"

namespace dirpoly {

double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

MeanStderr mean_stderr(std::span<const double> xs) {
  MeanStderr r;
  r.n = xs.size();
  if (r.n == 0) return r;
  r.mean = pairwise_sum(xs) / static_cast<double>(r.n);
  if (r.n >= 2) {
    double var = sample_variance(xs);
    r.stderr_ = std::sqrt(var / static_cast<double>(r.n));
  }
  return r;
}

double sample_variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = pairwise_sum(xs) / static_cast<double>(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dTmp = xs[i] - m;
    sq[i] = dTmp * dTmp;
  }
  return pairwise_sum(sq) / static_cast<double>(n - 1);
}

double sample_covariance(std::span<const double> xs,
                         std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) return 0.0;
  const double mx = pairwise_sum(xs) / static_cast<double>(n);
  const double my = pairwise_sum(ys) / static_cast<double>(n);
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
  return pairwise_sum(prod) / static_cast<double>(n - 1);
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    dmax = std::max(dmax, std::max(f - lo, hi - f));
  }
  return dmax;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  LinearFit fit;
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return fit;
  const double mx = pairwise_sum(x) / static_cast<double>(n);
  const double my = pairwise_sum(y) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += r * r;
    }
    fit.slope_stderr =
        std::sqrt(ss_res / (static_cast<double>(n - 2) * sxx));
  }
  return fit;
}

namespace {

// Lower regularized incomplete gamma by series, for x < s+1.
double gamma_p_series(double s, double x) {
  double sum = 1.0 / s;
  double term = sum;
  for (int k = 1; k < 500; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Upper regularized incomplete gamma by continued fraction, for x >= s+1.
double gamma_q_cf(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double dd = 1.0 / b;
  double h = dd;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    dd = an * dd + b;
    if (std::fabs(dd) < tiny) dd = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    dd = 1.0 / dd;
    const double delta = dd * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace

double gamma_q(double s, double x) {
  if (x < 0.0 || s <= 0.0)
    throw Error(ErrorCode::NumericRange, "gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < s + 1.0) return 1.0 - gamma_p_series(s, x);
  return gamma_q_cf(s, x);
}

double chisq_survival(double stat, double dof) {
  return gamma_q(0.5 * dof, 0.5 * stat);
}

double chisq_statistic(std::span<const double> observed_counts,
                       std::span<const double> expected_probs) {
  const double total = pairwise_sum(observed_counts);
  double stat = 0.0;
  for (std::size_t i = 0; i < observed_counts.size(); ++i) {
    const double expect = expected_probs[i] * total;
    if (expect <= 0.0) continue;
    const double diff = observed_counts[i] - expect;
    stat += diff * diff / expect;
  }
  return stat;
}

}  // namespace dirpoly
