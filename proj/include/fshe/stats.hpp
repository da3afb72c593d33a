#ifndef FSHE_STATS_HPP
#define FSHE_STATS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "fshe/errors.hpp"

namespace fshe {

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  [[nodiscard]] double standard_error() const { return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0; }
};

/// Two-pass mean and variance, accumulated in index order.
inline Moments moments(const std::vector<double>& x) {
  Moments m;
  m.count = x.size();
  if (x.empty()) return m;
  double sum = 0.0;
  for (double v : x) sum += v;
  m.mean = sum / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.variance = ss / static_cast<double>(x.size() - 1);
  }
  return m;
}

/// Sample variance with its standard error, assuming a known mean of zero.
/// The estimator is mean(x^2); its standard error uses the sample spread of x^2.
inline Moments centered_second_moment(const std::vector<double>& x) {
  std::vector<double> sq(x.size());
  std::transform(x.begin(), x.end(), sq.begin(), [](double v) { return v * v; });
  return moments(sq);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("correlation needs two equal-length samples of size >= 2");
  const auto mx = moments(x), my = moments(y);
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx.mean) * (y[i] - my.mean);
  const double denom = std::sqrt(mx.variance * my.variance) * static_cast<double>(x.size() - 1);
  if (!(denom > 0.0)) throw NumericalError("correlation of a constant sample");
  return sxy / denom;
}

/// Ranks starting at 1, ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

inline double normal_cdf(double x, double variance = 1.0) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance)); }

/// Standard normal quantile by bisection on the CDF.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Two-sided z threshold giving family-wise level `level` over `tests` comparisons.
/// One comparison at the default level is the usual 3-sigma rule.
inline double bonferroni_z(std::size_t tests, double level = 2.0 * normal_cdf(-3.0)) {
  if (tests == 0) throw DomainError("need at least one comparison");
  return -normal_quantile(level / (2.0 * static_cast<double>(tests)));
}

/// Kolmogorov limiting survival function Q(z) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 z^2).
inline double kolmogorov_survival(double z) {
  if (z < 0.18) return 1.0;  // series converges slowly here; the value is 1 to double precision
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * z * z);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t count = 0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
/// The p-value uses the limiting law with the usual finite-n correction of the argument.
inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("KS test needs a nonempty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d), sample.size()};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // Euclidean norm of residuals
  double slope_se = 0.0;  // standard error of the slope
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("line fit needs two equal-length samples of size >= 2");
  const auto mx = moments(x), my = moments(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx.mean) * (x[i] - mx.mean);
    sxy += (x[i] - mx.mean) * (y[i] - my.mean);
  }
  if (!(sxx > 0.0)) throw DomainError("line fit with zero abscissa spread");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my.mean - fit.slope * mx.mean;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.residual = std::sqrt(rss);
  fit.slope_se = x.size() > 2 ? std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx) : 0.0;
  return fit;
}

}  // namespace fshe

#endif  // FSHE_STATS_HPP
