#ifndef FSHE_SPECTRAL_HPP
#define FSHE_SPECTRAL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "fshe/linalg.hpp"
#include "fshe/network.hpp"
#include "fshe/stats.hpp"

namespace fshe {

/// Lowest eigenpairs of -L_b at one level, mass-orthonormal, extended by zero on F^0 for Dirichlet.
struct SpectralBasis {
  Boundary bc = Boundary::Neumann;
  int level = 0;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // vertices x K
  Eigen::VectorXd residuals;     // |C phi - lambda M phi| / |phi|
  Eigen::VectorXd mass;
  int free_count = 0;  // vertices carrying degrees of freedom

  [[nodiscard]] int size() const noexcept { return static_cast<int>(eigenvalues.size()); }
  [[nodiscard]] int vertices() const noexcept { return static_cast<int>(eigenvectors.rows()); }
  /// Modes exposed downstream by default: k <= (free vertices)/4.
  [[nodiscard]] int safe_size() const noexcept { return std::max(1, std::min(size(), free_count / 4)); }
  [[nodiscard]] bool complete() const noexcept { return size() == free_count; }

  [[nodiscard]] double mass_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return u.dot(mass.cwiseProduct(v)); }

  /// Coefficients <f, phi_k>_mass of a vertex function.
  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& f) const { return eigenvectors.transpose() * mass.cwiseProduct(f); }
};

/// Default SPDE truncation: min(safe size, 256).
inline int default_truncation(const SpectralBasis& b) { return std::min(b.safe_size(), 256); }

/// Solves C phi = lambda M phi through the scaled matrix M^{-1/2} C M^{-1/2}.
/// For Neumann the first pair is the exact constant mode (lambda = 0, phi = 1).
inline SpectralBasis solve_spectrum(const ApproximationNetwork& net, Boundary bc, int count) {
  std::vector<int> free;
  if (bc == Boundary::Dirichlet) {
    std::vector<bool> pinned(static_cast<std::size_t>(net.num_vertices()), false);
    for (int b : net.boundary()) pinned[static_cast<std::size_t>(b)] = true;
    for (int v = 0; v < net.num_vertices(); ++v)
      if (!pinned[static_cast<std::size_t>(v)]) free.push_back(v);
  } else {
    free.resize(static_cast<std::size_t>(net.num_vertices()));
    std::iota(free.begin(), free.end(), 0);
  }
  const int n = static_cast<int>(free.size());
  if (count < 1 || count > n) {
    throw DomainError("spectrum size K=" + std::to_string(count) + " outside 1.." + std::to_string(n) + " for this network");
  }
  const Eigen::MatrixXd c = Eigen::MatrixXd(detail::principal_submatrix(net.stiffness(), free));
  Eigen::VectorXd m(n);
  for (int i = 0; i < n; ++i) m[i] = net.mass()[free[static_cast<std::size_t>(i)]];
  const Eigen::VectorXd root_inv = m.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = root_inv.asDiagonal() * c * root_inv.asDiagonal();
  auto pairs = lowest_eigenpairs(0.5 * (scaled + scaled.transpose()), count);

  SpectralBasis out;
  out.bc = bc;
  out.level = net.level();
  out.mass = net.mass();
  out.free_count = n;
  out.eigenvalues = pairs.values;
  out.eigenvectors = Eigen::MatrixXd::Zero(net.num_vertices(), count);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd phi = root_inv.cwiseProduct(pairs.vectors.col(k));
    // sign: first component that is not negligible is made positive
    const double scale = phi.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::abs(phi[i]) > 1e-8 * scale) {
        if (phi[i] < 0.0) phi = -phi;
        break;
      }
    }
    for (int i = 0; i < n; ++i) out.eigenvectors(free[static_cast<std::size_t>(i)], k) = phi[i];
  }
  if (bc == Boundary::Neumann) {
    out.eigenvalues[0] = 0.0;
    out.eigenvectors.col(0).setOnes();
  }
  out.residuals.resize(count);
  const auto& cfull = net.stiffness();
  for (int k = 0; k < count; ++k) {
    const Eigen::VectorXd phi = out.eigenvectors.col(k);
    const Eigen::VectorXd r = cfull * phi - out.eigenvalues[k] * out.mass.cwiseProduct(phi);
    double norm = 0.0;
    // Dirichlet rows on F^0 are not part of the eigenproblem
    for (int i = 0; i < n; ++i) norm += r[free[static_cast<std::size_t>(i)]] * r[free[static_cast<std::size_t>(i)]];
    out.residuals[k] = std::sqrt(norm) / phi.norm();
  }
  return out;
}

inline SpectralBasis solve_spectrum(const ApproximationNetwork& net, int count) { return solve_spectrum(net, net.bc(), count); }

struct WeylDiagnostic {
  int k_lo = 0;
  int k_hi = 0;
  std::vector<double> ratios;  // lambda_k k^{-2/d_s} for k = k_lo..k_hi
  double min = 0.0;
  double max = 0.0;
  double window = 0.0;   // max / min
  double spearman = 0.0; // rank correlation of ratios with k
};

/// Ratio window of lambda_k k^{-2/d_s} over k in [2, K/4].
inline WeylDiagnostic weyl_fit(const SpectralBasis& basis, double d_s) {
  if (basis.size() < 16) throw DomainError("Weyl diagnostic needs at least 16 eigenvalues");
  WeylDiagnostic out;
  out.k_lo = 2;
  out.k_hi = basis.size() / 4;
  std::vector<double> ks;
  for (int k = out.k_lo; k <= out.k_hi; ++k) {
    const double ratio = basis.eigenvalues[k - 1] * std::pow(static_cast<double>(k), -2.0 / d_s);
    if (!(ratio > 0.0)) throw NumericalError("nonpositive eigenvalue inside the Weyl window");
    out.ratios.push_back(ratio);
    ks.push_back(k);
  }
  out.min = *std::min_element(out.ratios.begin(), out.ratios.end());
  out.max = *std::max_element(out.ratios.begin(), out.ratios.end());
  out.window = out.max / out.min;
  out.spearman = spearman(ks, out.ratios);
  return out;
}

/// max over k >= 2 of |phi_k|_inf lambda_k^{-d_s/4}.
inline double supnorm_fit(const SpectralBasis& basis, double d_s) {
  double worst = 0.0;
  for (int k = 2; k <= basis.size(); ++k) {
    const double lambda = basis.eigenvalues[k - 1];
    if (!(lambda > 0.0)) continue;
    worst = std::max(worst, basis.eigenvectors.col(k - 1).cwiseAbs().maxCoeff() * std::pow(lambda, -d_s / 4.0));
  }
  return worst;
}

/// rho_lambda(x, y) = sum_k phi_k(x) phi_k(y) / (lambda + lambda_k).
inline double resolvent_density(const SpectralBasis& basis, double lambda, int x, int y) {
  if (!(lambda > 0.0)) throw DomainError("resolvent parameter must be positive");
  double sum = 0.0;
  for (int k = 0; k < basis.size(); ++k) sum += basis.eigenvectors(x, k) * basis.eigenvectors(y, k) / (lambda + basis.eigenvalues[k]);
  return sum;
}

/// The whole kernel rho_lambda(x, .) as a vertex vector.
inline Eigen::VectorXd resolvent_row(const SpectralBasis& basis, double lambda, int x) {
  if (!(lambda > 0.0)) throw DomainError("resolvent parameter must be positive");
  const Eigen::VectorXd weights = (basis.eigenvalues.array() + lambda).inverse().matrix();
  return basis.eigenvectors * weights.cwiseProduct(basis.eigenvectors.row(x).transpose());
}

inline void write_spectrum_csv(const SpectralBasis& basis, std::ostream& out) {
  out.precision(17);
  out << "k,lambda,residual\n";
  for (int k = 0; k < basis.size(); ++k) out << k + 1 << "," << basis.eigenvalues[k] << "," << basis.residuals[k] << "\n";
}

inline void write_eigenfunctions_csv(const SpectralBasis& basis, int count, std::ostream& out) {
  count = std::min(count, basis.size());
  out.precision(17);
  out << "vertex";
  for (int k = 1; k <= count; ++k) out << ",phi_" << k;
  out << "\n";
  for (int v = 0; v < basis.vertices(); ++v) {
    out << v;
    for (int k = 0; k < count; ++k) out << "," << basis.eigenvectors(v, k);
    out << "\n";
  }
}

}  // namespace fshe

#endif  // FSHE_SPECTRAL_HPP
