#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dirpoly {

// Order-fixed pairwise summation.  Every ensemble reduction in the project
// goes through this so results do not depend on the worker count.
double pairwise_sum(std::span<const double> xs);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // sqrt(sample variance / n)
  std::size_t n = 0;
};

MeanStderr mean_stderr(std::span<const double> xs);

// Unbiased sample variance (divisor n-1).
double sample_variance(std::span<const double> xs);
double sample_covariance(std::span<const double> xs, std::span<const double> ys);

double median(std::vector<double> xs);  // by value: sorts a copy

// Two-sided Kolmogorov-Smirnov distance between the empirical law of the
// samples and a reference CDF.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Ordinary least squares y ~ a + b x with the usual residual-based slope
// standard error.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Upper regularized incomplete gamma Q(s, x); survival function of the
// chi-square distribution is Q(df/2, x/2).
double gamma_q(double s, double x);
double chisq_survival(double stat, double dof);

// Pearson chi-square statistic of observed counts against expected
// probabilities (expected counts = prob * total).
double chisq_statistic(std::span<const double> observed_counts,
                       std::span<const double> expected_probs);

}  // namespace dirpoly
