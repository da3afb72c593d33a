#ifndef FSHE_SHE_HPP
#define FSHE_SHE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "fshe/parallel.hpp"
#include "fshe/rng.hpp"
#include "fshe/spectral.hpp"

namespace fshe {

/// Rates below this are treated as the Neumann constant mode (a Wiener process).
inline constexpr double zero_rate = 1e-14;

/// Variance of X_t for an OU process with rate lambda and unit volatility started at 0.
inline double ou_variance(double lambda, double t) {
  if (lambda < zero_rate) return t;
  return -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
}

/// E[(X_s - X_{s+h})^2] for the OU process started at 0.
inline double ou_increment_variance(double lambda, double s, double h) {
  if (lambda < zero_rate) return h;
  const double decay = -std::expm1(-lambda * h);
  return decay / lambda - std::exp(-2.0 * lambda * s) / (2.0 * lambda) * decay * decay;
}

/// Exact transition of dX = -lambda X dt + dB over dt.
inline double ou_transition(double x, double lambda, double dt, NormalStream& rng) {
  if (!(dt > 0.0)) throw DomainError("OU step must be positive");
  if (lambda < 0.0) throw DomainError("OU rate must be nonnegative");
  const double mean = lambda < zero_rate ? x : std::exp(-lambda * dt) * x;
  return mean + std::sqrt(ou_variance(lambda, dt)) * rng();
}

/// (1 + lambda)^{-alpha/2}.
inline double bessel_factor(double lambda, double alpha) { return std::pow(1.0 + lambda, -alpha / 2.0); }

namespace detail {
inline int modes_or_all(const SpectralBasis& b, int modes) {
  if (modes < 0) return b.size();
  if (modes == 0 || modes > b.size()) throw DomainError("truncation must lie in 1.." + std::to_string(b.size()));
  return modes;
}
}  // namespace detail

/// Truncated coefficients X^k at time t (u-coefficients are e^{-lambda t} u0 + (1+lambda)^{-alpha/2} X).
struct GalerkinState {
  const SpectralBasis* basis = nullptr;
  double alpha = 0.0;
  Boundary bc = Boundary::Neumann;
  double t = 0.0;
  Eigen::VectorXd coeffs;
};

enum class InitialCondition { Fixed, Invariant };

struct SimulationSpec {
  double alpha = 0.0;
  std::vector<double> times;      // strictly increasing, starting at 0
  int modes = -1;                 // truncation K; -1 means every mode of the basis
  InitialCondition initial = InitialCondition::Fixed;
  Eigen::VectorXd u0;             // u-coefficients, zero-padded to K
  bool noise = true;              // false leaves only the semigroup term
  std::vector<int> vertices;      // field values recorded here
  std::vector<int> coefficients;  // 1-based u-coefficients recorded
  std::uint64_t seed = 0;
  std::uint64_t first_replica = 0;  // replica r uses stream replica index first_replica + r
  int replicas = 1;
  int threads = 0;
};

/// Field values u(t, x) and u-coefficients for a replica ensemble.
struct Ensemble {
  std::vector<double> times;
  std::vector<int> vertices;
  std::vector<int> coefficients;
  int replicas = 0;
  double alpha = 0.0;
  Boundary bc = Boundary::Neumann;
  Eigen::VectorXd u0_first;  // per replica: the initial first u-coefficient
  std::vector<double> field;   // [replica][time][vertex]
  std::vector<double> coeffs;  // [replica][time][coefficient]

  [[nodiscard]] double value(int r, std::size_t ti, std::size_t vi) const {
    return field[(static_cast<std::size_t>(r) * times.size() + ti) * vertices.size() + vi];
  }
  [[nodiscard]] double coefficient(int r, std::size_t ti, std::size_t ki) const {
    return coeffs[(static_cast<std::size_t>(r) * times.size() + ti) * coefficients.size() + ki];
  }
  /// All replicas of one recorded coefficient at one time.
  [[nodiscard]] std::vector<double> coefficient_sample(std::size_t ti, std::size_t ki) const {
    std::vector<double> out(static_cast<std::size_t>(replicas));
    for (int r = 0; r < replicas; ++r) out[static_cast<std::size_t>(r)] = coefficient(r, ti, ki);
    return out;
  }
  [[nodiscard]] std::vector<double> value_sample(std::size_t ti, std::size_t vi) const {
    std::vector<double> out(static_cast<std::size_t>(replicas));
    for (int r = 0; r < replicas; ++r) out[static_cast<std::size_t>(r)] = value(r, ti, vi);
    return out;
  }
};

/// Draws from nu^D_inf: independent N(0, (1+lambda_k)^{-alpha} / (2 lambda_k)) u-coefficients.
inline Eigen::VectorXd sample_invariant_dirichlet(const SpectralBasis& basis, double alpha, const RngSpec& spec, int modes = -1) {
  if (basis.bc != Boundary::Dirichlet) {
    throw DomainError("the Neumann problem has no invariant marginal for the constant mode; use neumann_decompose");
  }
  const int k_max = detail::modes_or_all(basis, modes);
  Eigen::VectorXd out(k_max);
  for (int k = 0; k < k_max; ++k) {
    NormalStream z({spec.seed, static_cast<std::uint64_t>(k), spec.replica, purpose::invariant_sample});
    const double lambda = basis.eigenvalues[k];
    out[k] = std::pow(1.0 + lambda, -alpha / 2.0) / std::sqrt(2.0 * lambda) * z();
  }
  return out;
}

/// Simulates replicas exactly in law on the given grid.
/// Replicas are processed in fixed blocks so results do not depend on the thread count.
inline Ensemble simulate_ensemble(const SpectralBasis& basis, const SimulationSpec& spec) {
  const int k_max = detail::modes_or_all(basis, spec.modes);
  if (spec.times.empty() || spec.times.front() != 0.0) throw DomainError("time grid must start at 0");
  for (std::size_t i = 1; i < spec.times.size(); ++i) {
    if (!(spec.times[i] > spec.times[i - 1])) throw DomainError("time grid must be strictly increasing");
  }
  if (spec.replicas < 1) throw DomainError("replica count must be positive");
  if (spec.alpha < 0.0) throw DomainError("alpha must be nonnegative");
  if (spec.u0.size() > k_max) throw DomainError("initial condition has more coefficients than the truncation");
  for (int v : spec.vertices)
    if (v < 0 || v >= basis.vertices()) throw DomainError("recorded vertex out of range");
  for (int k : spec.coefficients)
    if (k < 1 || k > k_max) throw DomainError("recorded coefficient out of range");
  if (spec.initial == InitialCondition::Invariant && basis.bc != Boundary::Dirichlet) {
    throw DomainError("invariant initial condition requires Dirichlet boundary");
  }

  Ensemble out;
  out.times = spec.times;
  out.vertices = spec.vertices;
  out.coefficients = spec.coefficients;
  out.replicas = spec.replicas;
  out.alpha = spec.alpha;
  out.bc = basis.bc;
  out.u0_first = Eigen::VectorXd::Zero(spec.replicas);
  const std::size_t steps = spec.times.size();
  const std::size_t nv = spec.vertices.size();
  const std::size_t nc = spec.coefficients.size();
  out.field.assign(static_cast<std::size_t>(spec.replicas) * steps * nv, 0.0);
  out.coeffs.assign(static_cast<std::size_t>(spec.replicas) * steps * nc, 0.0);

  const Eigen::VectorXd lambda = basis.eigenvalues.head(k_max);
  Eigen::VectorXd beta(k_max);
  for (int k = 0; k < k_max; ++k) beta[k] = bessel_factor(lambda[k], spec.alpha);
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(nv), k_max);
  for (std::size_t i = 0; i < nv; ++i) phi.row(static_cast<Eigen::Index>(i)) = basis.eigenvectors.row(spec.vertices[i]).head(k_max);
  Eigen::VectorXd fixed_u0 = Eigen::VectorXd::Zero(k_max);
  fixed_u0.head(spec.u0.size()) = spec.u0;

  constexpr int block = 64;
  const std::size_t blocks = (static_cast<std::size_t>(spec.replicas) + block - 1) / block;
  parallel_for(blocks, resolve_threads(spec.threads), [&](std::size_t b) {
    const int r0 = static_cast<int>(b) * block;
    const int width = std::min(block, spec.replicas - r0);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(k_max, width);
    Eigen::MatrixXd u0(k_max, width);
    std::vector<NormalStream> noise;
    noise.reserve(static_cast<std::size_t>(k_max * width));
    for (int c = 0; c < width; ++c) {
      const auto replica = spec.first_replica + static_cast<std::uint64_t>(r0 + c);
      u0.col(c) = spec.initial == InitialCondition::Invariant
                      ? sample_invariant_dirichlet(basis, spec.alpha, {spec.seed, 0, replica, purpose::invariant_sample}, k_max)
                      : fixed_u0;
      for (int k = 0; k < k_max; ++k) noise.emplace_back(RngSpec{spec.seed, static_cast<std::uint64_t>(k), replica, purpose::coefficient_noise});
    }
    for (int c = 0; c < width; ++c) out.u0_first[r0 + c] = u0(0, c);
    Eigen::MatrixXd a(k_max, width);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(nv), width);
    for (std::size_t ti = 0; ti < steps; ++ti) {
      const double t = spec.times[ti];
      if (ti > 0 && spec.noise) {
        const double dt = t - spec.times[ti - 1];
        for (int c = 0; c < width; ++c)
          for (int k = 0; k < k_max; ++k)
            x(k, c) = ou_transition(x(k, c), lambda[k], dt, noise[static_cast<std::size_t>(c * k_max + k)]);
      }
      for (int k = 0; k < k_max; ++k) {
        const double decay = lambda[k] < zero_rate ? 1.0 : std::exp(-lambda[k] * t);
        a.row(k) = decay * u0.row(k) + beta[k] * x.row(k);
      }
      if (nv > 0) values.noalias() = phi * a;
      for (int c = 0; c < width; ++c) {
        const std::size_t base = static_cast<std::size_t>(r0 + c) * steps + ti;
        for (std::size_t i = 0; i < nv; ++i) out.field[base * nv + i] = values(static_cast<Eigen::Index>(i), c);
        for (std::size_t i = 0; i < nc; ++i) out.coeffs[base * nc + i] = a(spec.coefficients[i] - 1, c);
      }
    }
  });
  return out;
}

struct FieldSample {
  std::vector<double> times;
  Eigen::MatrixXd values;        // times x vertices
  Eigen::MatrixXd coefficients;  // times x K (u-coefficients)
};

/// One replica on the full vertex set.
inline FieldSample simulate_field(const SpectralBasis& basis, double alpha, const Eigen::VectorXd& u0, const std::vector<double>& times,
                                  const RngSpec& rng, int modes = -1, bool noise = true) {
  SimulationSpec spec;
  spec.alpha = alpha;
  spec.times = times;
  spec.modes = modes;
  spec.u0 = u0;
  spec.noise = noise;
  spec.seed = rng.seed;
  spec.first_replica = rng.replica;
  spec.replicas = 1;
  const int k_max = detail::modes_or_all(basis, modes);
  for (int v = 0; v < basis.vertices(); ++v) spec.vertices.push_back(v);
  for (int k = 1; k <= k_max; ++k) spec.coefficients.push_back(k);
  const Ensemble e = simulate_ensemble(basis, spec);
  const int r = 0;
  FieldSample out;
  out.times = times;
  out.values.resize(static_cast<Eigen::Index>(times.size()), basis.vertices());
  out.coefficients.resize(static_cast<Eigen::Index>(times.size()), k_max);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (int v = 0; v < basis.vertices(); ++v) out.values(static_cast<Eigen::Index>(ti), v) = e.value(r, ti, static_cast<std::size_t>(v));
    for (int k = 0; k < k_max; ++k) out.coefficients(static_cast<Eigen::Index>(ti), k) = e.coefficient(r, ti, static_cast<std::size_t>(k));
  }
  return out;
}

/// Var u(t, x) for u0 = 0.
inline double pointwise_variance(const SpectralBasis& basis, double alpha, double t, int x, int modes = -1) {
  const int k_max = detail::modes_or_all(basis, modes);
  double sum = 0.0;
  for (int k = 0; k < k_max; ++k) {
    const double lambda = basis.eigenvalues[k];
    const double p = basis.eigenvectors(x, k);
    sum += std::pow(1.0 + lambda, -alpha) * ou_variance(lambda, t) * p * p;
  }
  return sum;
}

/// E[(u(t,x) - u(t,y))^2] for u0 = 0.
inline double spatial_increment_variance(const SpectralBasis& basis, double alpha, double t, int x, int y, int modes = -1) {
  if (t < 0.0) throw DomainError("time must be nonnegative");
  const int k_max = detail::modes_or_all(basis, modes);
  double sum = 0.0;
  for (int k = 0; k < k_max; ++k) {
    const double lambda = basis.eigenvalues[k];
    const double d = basis.eigenvectors(x, k) - basis.eigenvectors(y, k);
    sum += std::pow(1.0 + lambda, -alpha) * ou_variance(lambda, t) * d * d;
  }
  return sum;
}

/// E[(u(s,x) - u(s+h,x))^2] for u0 = 0.
inline double temporal_increment_variance(const SpectralBasis& basis, double alpha, double s, double h, int x, int modes = -1) {
  if (!(h > 0.0)) throw DomainError("time lag must be positive");
  if (s < 0.0) throw DomainError("start time must be nonnegative");
  const int k_max = detail::modes_or_all(basis, modes);
  double sum = 0.0;
  for (int k = 0; k < k_max; ++k) {
    const double lambda = basis.eigenvalues[k];
    const double p = basis.eigenvectors(x, k);
    sum += std::pow(1.0 + lambda, -alpha) * ou_increment_variance(lambda, s, h) * p * p;
  }
  return sum;
}

/// Stationary version (s -> infinity) of the temporal increment variance; Dirichlet only,
/// or Neumann with the constant mode removed.
inline double stationary_temporal_variance(const SpectralBasis& basis, double alpha, double h, int x, int modes = -1) {
  if (!(h > 0.0)) throw DomainError("time lag must be positive");
  const int k_max = detail::modes_or_all(basis, modes);
  double sum = 0.0;
  for (int k = 0; k < k_max; ++k) {
    const double lambda = basis.eigenvalues[k];
    if (lambda < zero_rate) continue;
    const double p = basis.eigenvectors(x, k);
    sum += std::pow(1.0 + lambda, -alpha) * (-std::expm1(-lambda * h)) / lambda * p * p;
  }
  return sum;
}

struct SigmaResult {
  double partial = 0.0;   // sum over k <= cutoff
  double tail_low = 0.0;  // certified bracket of the remaining terms
  double tail_high = 0.0;
  std::size_t cutoff = 0;
  double bound = 0.0;
  int bound_case = 0;  // 2: b < 0, zeta(1-b) t; 3: b > 0, power of t; 0: b = 0 integral bound
  [[nodiscard]] double value() const { return partial + 0.5 * (tail_low + tail_high); }
  [[nodiscard]] double upper() const { return partial + tail_high; }
  [[nodiscard]] double lower() const { return partial + tail_low; }
  /// A violation needs the whole certified bracket above the bound. For b < 0, t <= 1 and a >= b the bound is
  /// attained with equality, so there the bracket straddles the bound.
  [[nodiscard]] bool within_bound() const { return lower() <= bound * (1.0 + 1e-12); }
  [[nodiscard]] bool bracket_contains_bound() const { return lower() <= bound && bound <= upper(); }
};

/// sigma_ab(t) = sum_{k>=1} min(k^{a-1}, k^{b-1} t), with a certified tail and the matching upper bound.
/// The cutoff is chosen so the tail bracket is narrower than 1e-8.
inline SigmaResult sigma_ab(double a, double b, double t) {
  if (!(t > 0.0)) throw DomainError("sigma_ab needs t > 0");
  if (a >= 0.0 && b >= 0.0) throw DivergenceError("sigma_ab diverges when a >= 0 and b >= 0");
  constexpr double cap = 5e7;
  constexpr double width = 1e-8;
  auto f = [&](double k) { return std::min(std::pow(k, a - 1.0), std::pow(k, b - 1.0) * t); };
  // int_x^y c k^e dk, y may be infinite
  auto power_integral = [](double c, double e, double x, double y) {
    if (e == -1.0) return c * std::log(y / x);
    const double upper = std::isinf(y) ? 0.0 : std::pow(y, e + 1.0);
    return c * (upper - std::pow(x, e + 1.0)) / (e + 1.0);
  };
  // branches: below k* the larger exponent's branch is the minimum, above it the smaller one
  const double crossover = a == b ? 1.0 : std::pow(t, 1.0 / (a - b));
  const double far_c = a < b ? 1.0 : (a > b ? t : std::min(1.0, t));
  const double far_e = std::min(a, b) - 1.0;
  const double near_c = a < b ? t : 1.0;
  const double near_e = std::max(a, b) - 1.0;
  auto tail_integral = [&](double x) {
    if (x >= crossover) return power_integral(far_c, far_e, x, INFINITY);
    return power_integral(near_c, near_e, x, crossover) + power_integral(far_c, far_e, crossover, INFINITY);
  };

  SigmaResult out;
  double n = 1000.0;
  const bool single_branch = crossover + 1.0 <= cap;
  if (single_branch) n = std::max(n, std::ceil(crossover) + 1.0);
  while (f(n) > width) {
    n *= 2.0;
    if (n > cap) throw DomainError("sigma_ab tail does not fall below 1e-8 within the summation cap");
  }
  out.cutoff = static_cast<std::size_t>(n);
  long double sum = 0.0L;
  for (std::size_t k = out.cutoff; k >= 1; --k) sum += f(static_cast<double>(k));
  out.partial = static_cast<double>(sum);
  if (single_branch) {
    // convex decreasing summand: int_{N+1}^inf f + f(N+1)/2 <= sum_{k>N} f(k) <= int_{N+1/2}^inf f
    out.tail_low = tail_integral(n + 1.0) + 0.5 * f(n + 1.0);
    out.tail_high = tail_integral(n + 0.5);
  } else {
    out.tail_low = tail_integral(n + 1.0);
    out.tail_high = tail_integral(n);
  }
  if (b < 0.0) {
    out.bound_case = 2;
    out.bound = std::riemann_zeta(1.0 - b) * t;
  } else if (b > 0.0) {
    out.bound_case = 3;
    const double c = b <= 1.0 ? 1.0 / b - 1.0 / a : 1.0 - 1.0 / a;
    out.bound = c * std::pow(t, -a / (b - a));
  } else {
    // the b > 0 constant degenerates at b = 0; f(1) + int_1^inf f instead
    out.bound_case = 0;
    out.bound = t < 1.0 ? t + t * (1.0 - std::log(t)) / (-a) : 1.0 - 1.0 / a;
  }
  return out;
}

struct NeumannDecomposition {
  std::vector<double> wiener;      // B(t) per time
  Eigen::MatrixXd remainder;       // times x K; column 0 holds the initial mean
};

/// Splits a Neumann u-coefficient trajectory into B(t) = X^{1}_t and the rest.
inline NeumannDecomposition neumann_decompose(const Eigen::MatrixXd& trajectory, Boundary bc, double u0_mean) {
  if (bc != Boundary::Neumann) throw DomainError("neumann_decompose needs a Neumann trajectory");
  if (trajectory.cols() < 1) throw DomainError("empty trajectory");
  NeumannDecomposition out;
  out.remainder = trajectory;
  for (Eigen::Index i = 0; i < trajectory.rows(); ++i) {
    out.wiener.push_back(trajectory(i, 0) - u0_mean);
    out.remainder(i, 0) = u0_mean;
  }
  return out;
}

inline void write_coefficient_csv(const Ensemble& e, std::ostream& out) {
  out.precision(17);
  out << "replica,t,k,coeff\n";
  for (int r = 0; r < e.replicas; ++r)
    for (std::size_t ti = 0; ti < e.times.size(); ++ti)
      for (std::size_t ki = 0; ki < e.coefficients.size(); ++ki)
        out << r << "," << e.times[ti] << "," << e.coefficients[ki] << "," << e.coefficient(r, ti, ki) << "\n";
}

inline void write_field_csv(const Ensemble& e, std::ostream& out) {
  out.precision(17);
  out << "replica,t,vertex,value\n";
  for (int r = 0; r < e.replicas; ++r)
    for (std::size_t ti = 0; ti < e.times.size(); ++ti)
      for (std::size_t vi = 0; vi < e.vertices.size(); ++vi)
        out << r << "," << e.times[ti] << "," << e.vertices[vi] << "," << e.value(r, ti, vi) << "\n";
}

}  // namespace fshe

#endif  // FSHE_SHE_HPP
