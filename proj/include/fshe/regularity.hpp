#ifndef FSHE_REGULARITY_HPP
#define FSHE_REGULARITY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fshe/partition.hpp"
#include "fshe/she.hpp"
#include "fshe/stats.hpp"

namespace fshe {

/// Hoelder exponents predicted from alpha and the Hausdorff dimension.
struct ExponentPrediction {
  double alpha = 0.0;
  double d_s = 0.0;
  double d_h = 0.0;
  double delta = 0.0;            // joint exponent
  double spatial = 0.5;          // pathwise, in the resistance metric
  double temporal = 0.0;         // pathwise
  double spatial_moment = 1.0;   // E|u(t,x)-u(t,y)|^2 ~ R^spatial_moment
  double temporal_moment = 0.0;  // E|u(s,x)-u(s+h,x)|^2 ~ h^temporal_moment
};

inline ExponentPrediction theoretical_exponents(double alpha, double d_h) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  if (!(d_h >= 1.0)) throw DomainError("Hausdorff dimension below 1 is outside the supported regime (d_s in [1,2))");
  ExponentPrediction p;
  p.alpha = alpha;
  p.d_h = d_h;
  p.d_s = spectral_dimension(d_h);
  if (alpha <= p.d_s / 2.0) p.delta = 0.5 * (1.0 - p.d_s / 2.0);
  else if (alpha <= p.d_s) p.delta = 0.5 * (1.0 - p.d_s + alpha);
  else p.delta = 0.5;
  p.temporal_moment = std::min(1.0, std::max(1.0 - p.d_s / 2.0, std::min(1.0, 1.0 - p.d_s + alpha)));
  p.temporal = p.temporal_moment / 2.0;
  return p;
}

struct HolderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  double slope_se = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  std::size_t count = 0;
  /// Approximate 95% interval from the regression standard error.
  [[nodiscard]] double ci_low() const { return slope - 1.96 * slope_se; }
  [[nodiscard]] double ci_high() const { return slope + 1.96 * slope_se; }
};

/// Least-squares slope of log(moment^{1/p}) against log(abscissa).
inline HolderFit fit_exponent(const std::vector<std::pair<double, double>>& pairs, double p) {
  if (!(p > 0.0)) throw DomainError("moment order must be positive");
  if (pairs.size() < 5) throw DomainError("exponent fit needs at least 5 points, got " + std::to_string(pairs.size()));
  std::vector<double> x, y;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [a, m] : pairs) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("exponent fit needs positive finite abscissas");
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("exponent fit needs positive finite moments");
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    x.push_back(std::log(a));
    y.push_back(std::log(m) / p);
  }
  if (hi < 10.0 * lo * (1.0 - 1e-12)) throw DomainError("abscissa range spans less than one decade");
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymax - *ymin <= 1e-12 * std::max(1.0, std::abs(*ymax))) throw DomainError("constant moments: zero log-moment range, no scaling");
  const auto line = least_squares_line(x, y);
  return {line.slope, line.intercept, line.residual, line.slope_se, lo, hi, pairs.size()};
}

enum class ScanMode { Spatial, Temporal };

inline const char* to_string(ScanMode m) { return m == ScanMode::Spatial ? "spatial" : "temporal"; }

struct MomentRow {
  double abscissa = 0.0;  // geometric mean of R in the bin, or the lag h
  double second = 0.0;    // mean squared increment
  double fourth = 0.0;    // mean fourth power of the increment
  double second_se = 0.0;
  std::size_t pairs = 0;  // vertex pairs (spatial) or vertices (temporal) averaged
};

struct MomentTable {
  ScanMode mode = ScanMode::Spatial;
  std::vector<MomentRow> rows;

  /// (abscissa, second moment) pairs whose abscissa lies in [lo, hi].
  [[nodiscard]] std::vector<std::pair<double, double>> second_moments(double lo = 0.0, double hi = std::numeric_limits<double>::infinity()) const {
    std::vector<std::pair<double, double>> out;
    for (const auto& r : rows)
      if (r.abscissa >= lo && r.abscissa <= hi) out.emplace_back(r.abscissa, r.second);
    return out;
  }
};

struct ScanInputs {
  std::size_t time_index = 0;  // spatial: the time slice; temporal: the base time s
  const Eigen::MatrixXd* resistance = nullptr;  // spatial only, indexed by ensemble vertex positions
  int bins_per_decade = 4;
  std::size_t min_pairs = 30;
  std::size_t max_pairs = 20000;
  std::uint64_t seed = 0;
};

inline constexpr int min_scan_replicas = 1000;

namespace detail {

/// Per-pair mean of squared and fourth-power increments over replicas.
inline void accumulate_increment(double d, double& s2, double& s4) {
  const double d2 = d * d;
  s2 += d2;
  s4 += d2 * d2;
}

inline MomentRow finish_row(double abscissa, const std::vector<double>& per_item, double fourth_sum, std::size_t samples) {
  MomentRow row;
  row.abscissa = abscissa;
  row.pairs = per_item.size();
  const auto m = moments(per_item);
  row.second = m.mean;
  row.second_se = per_item.size() > 1 ? m.standard_error() : 0.0;
  row.fourth = fourth_sum / static_cast<double>(samples);
  return row;
}

}  // namespace detail

/// Spatial mode: vertex pairs binned logarithmically in R(x,y) at one time.
/// Temporal mode: increments u(t_j) - u(t_base) at the recorded vertices, one row per lag;
/// for Neumann ensembles the recorded first coefficient (the Wiener mode) is removed first.
inline MomentTable increment_moment_scan(const Ensemble& e, ScanMode mode, const ScanInputs& in = {}) {
  if (e.replicas < min_scan_replicas) {
    throw DomainError("increment scan needs at least " + std::to_string(min_scan_replicas) + " replicas, got " + std::to_string(e.replicas));
  }
  if (in.time_index >= e.times.size()) throw DomainError("scan time index out of range");
  const std::size_t nv = e.vertices.size();
  MomentTable table;
  table.mode = mode;
  if (mode == ScanMode::Spatial) {
    if (in.resistance == nullptr) throw DomainError("spatial scan needs precomputed resistance distances");
    const auto& r = *in.resistance;
    if (r.rows() != static_cast<Eigen::Index>(nv) || r.cols() != static_cast<Eigen::Index>(nv)) {
      throw DomainError("resistance matrix does not match the recorded vertices");
    }
    if (in.bins_per_decade < 1) throw DomainError("bins per decade must be positive");
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < nv; ++i)
      for (std::size_t j = i + 1; j < nv; ++j)
        if (r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    if (pairs.size() > in.max_pairs) {
      // uniform subset without replacement (partial Fisher-Yates)
      NormalStream u({in.seed, 0, 0, purpose::pair_sampling});
      for (std::size_t k = 0; k < in.max_pairs; ++k) {
        const auto pick = k + static_cast<std::size_t>(u.uniform() * static_cast<double>(pairs.size() - k));
        std::swap(pairs[k], pairs[std::min(pick, pairs.size() - 1)]);
      }
      pairs.resize(in.max_pairs);
    }
    struct Bin {
      double log_sum = 0.0;
      double fourth = 0.0;
      std::vector<double> means;
    };
    std::map<long, Bin> bins;
    const double per_decade = in.bins_per_decade;
    for (const auto& [i, j] : pairs) {
      const double rij = r(i, j);
      const long key = static_cast<long>(std::floor(std::log10(rij) * per_decade));
      double s2 = 0.0, s4 = 0.0;
      for (int rep = 0; rep < e.replicas; ++rep) {
        detail::accumulate_increment(e.value(rep, in.time_index, static_cast<std::size_t>(i)) - e.value(rep, in.time_index, static_cast<std::size_t>(j)), s2, s4);
      }
      auto& bin = bins[key];
      bin.log_sum += std::log(rij);
      bin.fourth += s4;
      bin.means.push_back(s2 / e.replicas);
    }
    for (const auto& [key, bin] : bins) {
      if (bin.means.size() < in.min_pairs) continue;
      const double center = std::exp(bin.log_sum / static_cast<double>(bin.means.size()));
      table.rows.push_back(detail::finish_row(center, bin.means, bin.fourth, bin.means.size() * static_cast<std::size_t>(e.replicas)));
    }
    return table;
  }

  int wiener = -1;
  if (e.bc == Boundary::Neumann) {
    for (std::size_t k = 0; k < e.coefficients.size(); ++k)
      if (e.coefficients[k] == 1) wiener = static_cast<int>(k);
    if (wiener < 0) throw DomainError("temporal scan of a Neumann ensemble needs the first coefficient recorded");
  }
  auto value = [&](int rep, std::size_t ti, std::size_t vi) {
    double v = e.value(rep, ti, vi);
    if (wiener >= 0) v -= e.coefficient(rep, ti, static_cast<std::size_t>(wiener));  // phi_1 = 1
    return v;
  };
  if (nv == 0) throw DomainError("temporal scan needs recorded vertices");
  const std::size_t base = in.time_index;
  for (std::size_t tj = base + 1; tj < e.times.size(); ++tj) {
    std::vector<double> means;
    double fourth = 0.0;
    for (std::size_t vi = 0; vi < nv; ++vi) {
      double s2 = 0.0, s4 = 0.0;
      for (int rep = 0; rep < e.replicas; ++rep) detail::accumulate_increment(value(rep, tj, vi) - value(rep, base, vi), s2, s4);
      means.push_back(s2 / e.replicas);
      fourth += s4;
    }
    table.rows.push_back(detail::finish_row(e.times[tj] - e.times[base], means, fourth, nv * static_cast<std::size_t>(e.replicas)));
  }
  return table;
}

/// Smallest positive eigenvalue of the basis.
inline double spectral_gap(const SpectralBasis& basis) {
  for (int k = 0; k < basis.size(); ++k)
    if (basis.eigenvalues[k] >= zero_rate) return basis.eigenvalues[k];
  throw DomainError("basis has no positive eigenvalue");
}

/// Start time s with exp(-2 lambda s) < 0.01 for the slowest decaying non-constant mode.
inline double burn_in_time(const SpectralBasis& basis) { return 1.0001 * std::log(100.0) / (2.0 * spectral_gap(basis)); }

/// Lag window [c / lambda_K, c / lambda_10] over which the truncated temporal power law is resolvable.
inline std::pair<double, double> temporal_window(const SpectralBasis& basis, int modes = -1, double c = 5.0) {
  const int k_max = detail::modes_or_all(basis, modes);
  if (k_max < 10) throw DomainError("temporal window needs at least 10 modes");
  return {c / basis.eigenvalues[k_max - 1], c / basis.eigenvalues[9]};
}

/// Time grid {0, s, s + h_1, ..., s + h_n} with lags spaced geometrically over [lo, hi].
inline std::vector<double> lag_grid(double start, double lo, double hi, int lags) {
  if (!(start > 0.0) || !(lo > 0.0) || !(hi > lo) || lags < 2) throw DomainError("invalid lag grid");
  std::vector<double> t{0.0, start};
  for (int i = 0; i < lags; ++i) t.push_back(start + lo * std::pow(hi / lo, static_cast<double>(i) / (lags - 1)));
  return t;
}

/// Mass-weighted spatial average of the stationary temporal increment variance.
inline double mean_stationary_temporal_variance(const SpectralBasis& basis, double alpha, double h, int modes = -1) {
  if (!(h > 0.0)) throw DomainError("time lag must be positive");
  const int k_max = detail::modes_or_all(basis, modes);
  double sum = 0.0;
  for (int k = 0; k < k_max; ++k) {
    const double lambda = basis.eigenvalues[k];
    if (lambda < zero_rate) continue;
    const double weight = basis.eigenvectors.col(k).cwiseAbs2().dot(basis.mass);
    sum += std::pow(1.0 + lambda, -alpha) * (-std::expm1(-lambda * h)) / lambda * weight;
  }
  return sum / basis.mass.sum();
}

/// One row of an exponent report.
struct HolderEstimate {
  std::string mode;
  double alpha = 0.0;
  double predicted = 0.0;
  HolderFit fit;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

/// Slope of the averaged analytic stationary temporal variance over the automatic lag window.
inline HolderEstimate analytic_temporal_exponent(const SpectralBasis& basis, double alpha, double d_h, int modes = -1, double c = 5.0, int points = 41) {
  const auto [lo, hi] = temporal_window(basis, modes, c);
  std::vector<std::pair<double, double>> curve;
  for (int i = 0; i < points; ++i) {
    const double h = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    curve.emplace_back(h, mean_stationary_temporal_variance(basis, alpha, h, modes));
  }
  HolderEstimate out;
  out.mode = "temporal_analytic";
  out.alpha = alpha;
  out.predicted = theoretical_exponents(alpha, d_h).temporal_moment;
  out.fit = fit_exponent(curve, 1.0);
  out.window_lo = lo;
  out.window_hi = hi;
  return out;
}

inline void write_exponent_csv(const std::vector<HolderEstimate>& rows, std::ostream& out) {
  out.precision(17);
  out << "mode,alpha,predicted,fitted,ci_low,ci_high,window_lo,window_hi\n";
  for (const auto& r : rows) {
    out << r.mode << "," << r.alpha << "," << r.predicted << "," << r.fit.slope << "," << r.fit.ci_low() << "," << r.fit.ci_high() << ","
        << r.window_lo << "," << r.window_hi << "\n";
  }
}

struct EmpiricalScanSpec {
  double alpha = 0.0;
  double t = 1.0;               // spatial: observation time
  int replicas = 10000;
  int modes = -1;               // -1: the whole basis
  int vertices = 64;            // temporal: vertices sampled uniformly from the free set
  int lags = 25;                // temporal: lags in the automatic window
  double window_constant = 5.0;
  std::uint64_t seed = 0;
  int threads = 0;
};

/// RMS increment slope against R(x,y) from a simulated ensemble at time spec.t.
inline HolderEstimate empirical_spatial_exponent(const ApproximationNetwork& net, const SpectralBasis& basis, const EmpiricalScanSpec& spec,
                                                 MomentTable* table_out = nullptr) {
  if (basis.vertices() != net.num_vertices()) throw DomainError("basis does not belong to this network");
  SimulationSpec sim;
  sim.alpha = spec.alpha;
  sim.times = {0.0, spec.t};
  sim.modes = spec.modes;
  sim.replicas = spec.replicas;
  sim.seed = spec.seed;
  sim.threads = spec.threads;
  for (int v = 0; v < net.num_vertices(); ++v) sim.vertices.push_back(v);
  const auto ensemble = simulate_ensemble(basis, sim);
  const Eigen::MatrixXd r = resistance_matrix(net);
  ScanInputs in;
  in.resistance = &r;
  in.time_index = 1;
  in.seed = spec.seed;
  auto table = increment_moment_scan(ensemble, ScanMode::Spatial, in);
  HolderEstimate out;
  out.mode = "spatial";
  out.alpha = spec.alpha;
  out.predicted = theoretical_exponents(spec.alpha, net.structure().hausdorff_dimension()).spatial;
  out.fit = fit_exponent(table.second_moments(), 2.0);
  out.window_lo = out.fit.range_lo;
  out.window_hi = out.fit.range_hi;
  if (table_out != nullptr) *table_out = std::move(table);
  return out;
}

/// RMS increment slope against the lag h, stationary after burn-in, over the automatic window.
inline HolderEstimate empirical_temporal_exponent(const ApproximationNetwork& net, const SpectralBasis& basis, const EmpiricalScanSpec& spec,
                                                  MomentTable* table_out = nullptr) {
  if (basis.vertices() != net.num_vertices()) throw DomainError("basis does not belong to this network");
  const auto [lo, hi] = temporal_window(basis, spec.modes, spec.window_constant);
  SimulationSpec sim;
  sim.alpha = spec.alpha;
  sim.times = lag_grid(burn_in_time(basis), lo, hi, spec.lags);
  sim.modes = spec.modes;
  sim.replicas = spec.replicas;
  sim.seed = spec.seed;
  sim.threads = spec.threads;
  sim.coefficients = {1};
  // uniform vertex sample without replacement from the vertices carrying degrees of freedom
  auto pool = net.free_vertices();
  if (basis.bc == Boundary::Neumann) {
    pool.resize(static_cast<std::size_t>(net.num_vertices()));
    std::iota(pool.begin(), pool.end(), 0);
  }
  const auto take = std::min(pool.size(), static_cast<std::size_t>(std::max(1, spec.vertices)));
  NormalStream u({spec.seed, 1, 0, purpose::pair_sampling});
  for (std::size_t k = 0; k < take; ++k) {
    const auto pick = std::min(pool.size() - 1, k + static_cast<std::size_t>(u.uniform() * static_cast<double>(pool.size() - k)));
    std::swap(pool[k], pool[pick]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  sim.vertices = pool;
  const auto ensemble = simulate_ensemble(basis, sim);
  ScanInputs in;
  in.time_index = 1;
  auto table = increment_moment_scan(ensemble, ScanMode::Temporal, in);
  HolderEstimate out;
  out.mode = "temporal";
  out.alpha = spec.alpha;
  out.predicted = theoretical_exponents(spec.alpha, net.structure().hausdorff_dimension()).temporal;
  out.fit = fit_exponent(table.second_moments(), 2.0);
  out.window_lo = lo;
  out.window_hi = hi;
  if (table_out != nullptr) *table_out = std::move(table);
  return out;
}

struct MollifierRow {
  int n = 0;
  std::size_t cells = 0;     // |D^0_n(x)|
  std::size_t vertices = 0;  // network vertices averaged
  double gap = 0.0;          // E[(<u(t), f^x_n> - u(t,x))^2]
};

struct MollifierDecay {
  std::vector<MollifierRow> rows;
  double slope = 0.0;   // fitted d log(gap) / dn
  double factor = 0.0;  // exp(slope): decay per level
  double threshold = 0.6;
  [[nodiscard]] double rate() const { return -slope; }
  [[nodiscard]] bool passed() const { return factor <= threshold; }
};

/// Network vertices lying in the union of the cells of D^0_n(x), for x a vertex of the network.
inline std::vector<int> mollifier_support(const ApproximationNetwork& net, int x, int n) {
  const auto& s = net.structure();
  const auto lambda = level_partition(s, n);
  if (static_cast<int>(lambda.max_length()) > net.level()) {
    throw DomainError("mollifier level " + std::to_string(n) + " needs network level " + std::to_string(lambda.max_length()) + " > " +
                      std::to_string(net.level()));
  }
  const auto& cx = net.complex();
  const auto d0 = neighborhood(s, n, cx.representative(x), 0);
  std::vector<bool> in(static_cast<std::size_t>(net.num_vertices()), false);
  for (const auto& w : d0.words) {
    // cells of the complex extending w form one contiguous index block
    std::size_t span = 1;
    for (int k = static_cast<int>(w.size()); k < net.level(); ++k) span *= static_cast<std::size_t>(s.cells());
    std::size_t first = 0;
    for (std::size_t k = 0; k < w.size(); ++k) first = first * static_cast<std::size_t>(s.cells()) + static_cast<std::size_t>(w[k] - 1);
    first *= span;
    for (std::size_t c = first; c < first + span; ++c)
      for (int p = 0; p < cx.corners_per_cell(); ++p) in[static_cast<std::size_t>(cx.corner(c, p))] = true;
  }
  std::vector<int> out;
  for (int v = 0; v < net.num_vertices(); ++v)
    if (in[static_cast<std::size_t>(v)]) out.push_back(v);
  return out;
}

/// Analytic mean-square gap between the mollified pairing and the point value (u0 = 0),
/// for n in [n_lo, n_hi], with a least-squares fit of log(gap) against n.
inline MollifierDecay mollifier_decay_check(const ApproximationNetwork& net, const SpectralBasis& basis, double alpha, double t, int x, int n_lo,
                                            int n_hi, int modes = -1, double threshold = 0.6) {
  if (basis.vertices() != net.num_vertices()) throw DomainError("basis does not belong to this network");
  if (x < 0 || x >= net.num_vertices()) throw DomainError("vertex id out of range");
  if (n_lo < 0 || n_hi < n_lo + 1) throw DomainError("mollifier range needs at least two levels");
  if (n_hi > net.level()) throw DomainError("mollifier level exceeds network level");
  const int k_max = detail::modes_or_all(basis, modes);
  Eigen::VectorXd weight(k_max);
  for (int k = 0; k < k_max; ++k) weight[k] = std::pow(1.0 + basis.eigenvalues[k], -alpha) * ou_variance(basis.eigenvalues[k], t);
  MollifierDecay out;
  out.threshold = threshold;
  std::vector<double> ns, logs;
  for (int n = n_lo; n <= n_hi; ++n) {
    const auto support = mollifier_support(net, x, n);
    double total = 0.0;
    Eigen::VectorXd pairing = Eigen::VectorXd::Zero(k_max);
    for (int v : support) {
      total += basis.mass[v];
      pairing += basis.mass[v] * basis.eigenvectors.row(v).head(k_max).transpose();
    }
    pairing /= total;
    const Eigen::VectorXd diff = pairing - basis.eigenvectors.row(x).head(k_max).transpose();
    MollifierRow row;
    row.n = n;
    row.cells = neighborhood(net.structure(), n, net.complex().representative(x), 0).words.size();
    row.vertices = support.size();
    row.gap = diff.cwiseAbs2().dot(weight);
    out.rows.push_back(row);
    ns.push_back(n);
    logs.push_back(std::log(row.gap));
  }
  const auto line = least_squares_line(ns, logs);
  out.slope = line.slope;
  out.factor = std::exp(line.slope);
  return out;
}

}  // namespace fshe

#endif  // FSHE_REGULARITY_HPP
