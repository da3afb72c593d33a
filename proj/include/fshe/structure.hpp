#ifndef FSHE_STRUCTURE_HPP
#define FSHE_STRUCTURE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "fshe/errors.hpp"
#include "fshe/word.hpp"

namespace fshe {

/// The point psi_cell(q_point); cell is 1-based, point indexes F^0 (0-based).
struct CellPoint {
  int cell = 1;
  int point = 0;
  bool operator==(const CellPoint&) const = default;
};

/// Identification psi_i(q_a) = psi_j(q_b) between two level-1 corner points.
struct Gluing {
  CellPoint lhs;
  CellPoint rhs;
  bool operator==(const Gluing&) const = default;
};

/// Exact affine model psi_i(x) = (x + translation_i) / scale with integer data.
/// Boundary points are integer vectors; level-n points are integer vectors over scale^n.
struct AffineCoordinates {
  std::int64_t scale = 2;
  std::vector<std::vector<std::int64_t>> boundary;
  std::vector<std::vector<std::int64_t>> translation;
  bool operator==(const AffineCoordinates&) const = default;
};

/// Root of sum_i r_i^s = 1 by bisection on [1e-6, 64].
inline double solve_hausdorff_dimension(const std::vector<double>& r) {
  if (r.size() < 2) throw DomainError("at least two resistance weights are required");
  for (double ri : r) {
    if (!(ri > 0.0 && ri < 1.0)) throw DomainError("resistance weights must lie in (0,1)");
  }
  auto excess = [&](double s) {
    double sum = 0.0;
    for (double ri : r) sum += std::pow(ri, s);
    return sum - 1.0;
  };
  double lo = 1e-6;
  double hi = 64.0;
  if (excess(hi) > 0.0) throw NumericalError("Hausdorff dimension exceeds 64: degenerate weights");
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = excess(mid);
    if (f == 0.0) return mid;
    (f > 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-15 * hi) break;
  }
  const double s = 0.5 * (lo + hi);
  if (std::abs(excess(s)) > 1e-12) throw NumericalError("Hausdorff dimension bisection did not converge");
  return s;
}

inline double spectral_dimension(double hausdorff_dimension) {
  if (!(hausdorff_dimension > 0.0)) throw DomainError("Hausdorff dimension must be positive");
  return 2.0 * hausdorff_dimension / (hausdorff_dimension + 1.0);
}

/// A p.c.f. self-similar structure with a candidate harmonic structure (A0, r).
///
/// `boundary_embedding[a]` names one level-1 corner (i, b) with q_a = psi_i(q_b);
/// together with `gluing` it determines every identification of corner points.
class PcfStructure {
 public:
  PcfStructure(std::string name, std::vector<double> r, Eigen::MatrixXd a0, std::vector<Gluing> gluing,
               std::vector<CellPoint> boundary_embedding, std::optional<AffineCoordinates> coords = std::nullopt)
      : name_(std::move(name)),
        r_(std::move(r)),
        a0_(std::move(a0)),
        gluing_(std::move(gluing)),
        embedding_(std::move(boundary_embedding)),
        coords_(std::move(coords)) {
    validate();
    d_h_ = solve_hausdorff_dimension(r_);
    d_s_ = spectral_dimension(d_h_);
  }

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] int cells() const noexcept { return static_cast<int>(r_.size()); }
  [[nodiscard]] int boundary_size() const noexcept { return static_cast<int>(a0_.rows()); }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return r_; }
  [[nodiscard]] const Eigen::MatrixXd& a0() const noexcept { return a0_; }
  [[nodiscard]] const std::vector<Gluing>& gluing() const noexcept { return gluing_; }
  [[nodiscard]] const std::vector<CellPoint>& boundary_embedding() const noexcept { return embedding_; }
  [[nodiscard]] const std::optional<AffineCoordinates>& coordinates() const noexcept { return coords_; }
  [[nodiscard]] double hausdorff_dimension() const noexcept { return d_h_; }
  [[nodiscard]] double spectral_dim() const noexcept { return d_s_; }
  [[nodiscard]] double r_min() const { return *std::min_element(r_.begin(), r_.end()); }
  [[nodiscard]] double r_max() const { return *std::max_element(r_.begin(), r_.end()); }

  /// r_w = prod r_{w_i}.
  [[nodiscard]] double resistance_scale(const Word& w) const {
    check_word(w);
    double prod = 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) prod *= r_[static_cast<std::size_t>(w[i] - 1)];
    return prod;
  }

  void check_word(const Word& w) const {
    if (!w.valid_for(cells())) throw DomainError("word " + w.to_string() + " has a letter outside 1.." + std::to_string(cells()));
  }

  /// Copy of this structure with different weights (A0 and gluing unchanged).
  [[nodiscard]] PcfStructure with_weights(std::vector<double> r, std::string name) const {
    return PcfStructure(std::move(name), std::move(r), a0_, gluing_, embedding_, coords_);
  }

 private:
  void validate() const {
    const int m = cells();
    if (m < 2) throw DomainError("a structure needs at least two contractions");
    const auto b = a0_.rows();
    if (b < 2 || a0_.cols() != b) throw DomainError("A0 must be square with at least two boundary points");
    for (Eigen::Index i = 0; i < b; ++i) {
      if (std::abs(a0_.row(i).sum()) > 1e-12) throw DomainError("A0 rows must sum to zero");
      for (Eigen::Index j = 0; j < b; ++j) {
        if (std::abs(a0_(i, j) - a0_(j, i)) > 1e-12) throw DomainError("A0 must be symmetric");
        if (i != j && a0_(i, j) < 0.0) throw DomainError("A0 off-diagonal entries must be nonnegative");
      }
    }
    // irreducibility: the graph of positive off-diagonal entries is connected
    std::vector<bool> seen(static_cast<std::size_t>(b), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < b; ++j) {
        if (i != j && a0_(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = true;
          stack.push_back(j);
        }
      }
    }
    for (bool s : seen) {
      if (!s) throw DomainError("A0 is not irreducible");
    }
    auto check_point = [&](const CellPoint& p) {
      if (p.cell < 1 || p.cell > m || p.point < 0 || p.point >= b) throw DomainError("corner reference out of range");
    };
    for (const auto& g : gluing_) {
      check_point(g.lhs);
      check_point(g.rhs);
    }
    if (static_cast<Eigen::Index>(embedding_.size()) != b) throw DomainError("boundary embedding must list every boundary point");
    for (const auto& p : embedding_) check_point(p);
    if (coords_) {
      if (coords_->scale < 2 || static_cast<Eigen::Index>(coords_->boundary.size()) != b ||
          static_cast<int>(coords_->translation.size()) != m) {
        throw DomainError("inconsistent affine coordinate model");
      }
    }
  }

  std::string name_;
  std::vector<double> r_;
  Eigen::MatrixXd a0_;
  std::vector<Gluing> gluing_;
  std::vector<CellPoint> embedding_;
  std::optional<AffineCoordinates> coords_;
  double d_h_ = 0.0;
  double d_s_ = 0.0;
};

/// [0,1] split into M equal pieces, r_i = 1/M.
inline PcfStructure interval(int m) {
  if (m < 2) throw DomainError("interval(M) requires M >= 2");
  Eigen::MatrixXd a0(2, 2);
  a0 << -1.0, 1.0, 1.0, -1.0;
  std::vector<Gluing> gluing;
  for (int i = 1; i < m; ++i) gluing.push_back({{i, 1}, {i + 1, 0}});
  AffineCoordinates coords;
  coords.scale = m;
  coords.boundary = {{0}, {1}};
  for (int i = 0; i < m; ++i) coords.translation.push_back({i});
  return PcfStructure("interval(" + std::to_string(m) + ")", std::vector<double>(static_cast<std::size_t>(m), 1.0 / m),
                      a0, gluing, {{1, 0}, {m, 1}}, coords);
}

/// Standard harmonic structure on the n-dimensional Sierpinski gasket: M = n+1, r_i = (n+1)/(n+3).
inline PcfStructure gasket(int n) {
  if (n < 1) throw DomainError("gasket(n) requires n >= 1");
  const int m = n + 1;
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Ones(m, m);
  a0.diagonal().setConstant(-static_cast<double>(n));
  std::vector<Gluing> gluing;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) gluing.push_back({{i + 1, j}, {j + 1, i}});
  }
  std::vector<CellPoint> embedding;
  AffineCoordinates coords;
  coords.scale = 2;
  for (int a = 0; a < m; ++a) {
    embedding.push_back({a + 1, a});
    std::vector<std::int64_t> e(static_cast<std::size_t>(m), 0);
    e[static_cast<std::size_t>(a)] = 1;
    coords.boundary.push_back(e);
    coords.translation.push_back(e);
  }
  return PcfStructure("gasket(" + std::to_string(n) + ")",
                      std::vector<double>(static_cast<std::size_t>(m), static_cast<double>(n + 1) / (n + 3)), a0, gluing,
                      embedding, coords);
}

/// Resolves "interval(M)" or "gasket(n)".
inline PcfStructure preset(const std::string& spec) {
  static const std::regex pattern(R"(\s*(interval|gasket)\s*\(\s*(\d+)\s*\)\s*)");
  std::smatch match;
  if (!std::regex_match(spec, match, pattern)) throw DomainError("unknown preset '" + spec + "'");
  const int arg = std::stoi(match[2].str());
  return match[1].str() == "interval" ? interval(arg) : gasket(arg);
}

/// mu(F_w) = r_w^{d_H}.
inline double cell_measure(const PcfStructure& s, const Word& w) {
  s.check_word(w);
  double prod = 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    prod *= std::pow(s.weights()[static_cast<std::size_t>(w[i] - 1)], s.hausdorff_dimension());
  }
  return prod;
}

}  // namespace fshe

#endif  // FSHE_STRUCTURE_HPP
