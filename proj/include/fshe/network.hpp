#ifndef FSHE_NETWORK_HPP
#define FSHE_NETWORK_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <memory>
#include <ostream>
#include <vector>

#include "fshe/complex.hpp"
#include "fshe/partition.hpp"
#include "fshe/structure.hpp"

namespace fshe {

enum class Boundary { Neumann, Dirichlet };

inline const char* to_string(Boundary b) { return b == Boundary::Neumann ? "N" : "D"; }

inline Boundary parse_boundary(const std::string& text) {
  if (text == "N" || text == "n" || text == "neumann" || text == "Neumann") return Boundary::Neumann;
  if (text == "D" || text == "d" || text == "dirichlet" || text == "Dirichlet") return Boundary::Dirichlet;
  throw DomainError("unknown boundary condition '" + text + "'");
}

struct Edge {
  int a = 0;
  int b = 0;
  double conductance = 0.0;
};

/// Level-m electrical network approximating (E, D) and the lumped measure mu.
///
/// The stiffness matrix is the positive semidefinite form
/// sum_{w in W_m} r_w^{-1} (-A0) placed on the corners of cell w.
class ApproximationNetwork {
 public:
  ApproximationNetwork(const PcfStructure& s, int level, Boundary bc)
      : structure_(s), complex_(std::make_shared<const CellComplex>(s, level)), level_(level), bc_(bc) {
    assemble();
  }

  [[nodiscard]] const PcfStructure& structure() const noexcept { return structure_; }
  [[nodiscard]] const CellComplex& complex() const noexcept { return *complex_; }
  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] Boundary bc() const noexcept { return bc_; }
  [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(complex_->num_vertices()); }
  [[nodiscard]] const Eigen::SparseMatrix<double>& stiffness() const noexcept { return stiffness_; }
  [[nodiscard]] const Eigen::VectorXd& mass() const noexcept { return mass_; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] const std::vector<int>& boundary() const noexcept { return complex_->boundary(); }

  /// Vertices left after Dirichlet deletion (all vertices for Neumann), ascending.
  [[nodiscard]] std::vector<int> free_vertices() const {
    std::vector<bool> pinned(static_cast<std::size_t>(num_vertices()), false);
    if (bc_ == Boundary::Dirichlet) {
      for (int b : boundary()) pinned[static_cast<std::size_t>(b)] = true;
    }
    std::vector<int> out;
    for (int v = 0; v < num_vertices(); ++v) {
      if (!pinned[static_cast<std::size_t>(v)]) out.push_back(v);
    }
    return out;
  }

  [[nodiscard]] int vertex(const VertexAddress& addr) const { return complex_->vertex_of(addr, structure_); }

  /// Exact coordinates of a vertex over scale^level (coordinate presets only).
  [[nodiscard]] std::vector<std::int64_t> coordinates(int v) const {
    return exact_coordinates(structure_, complex_->representative(v), static_cast<std::size_t>(level_));
  }

  /// Vertex with the given exact coordinates over scale^level, or -1.
  [[nodiscard]] int find_vertex(const std::vector<std::int64_t>& coords) const {
    if (coord_index_.empty()) {
      for (int v = 0; v < num_vertices(); ++v) coord_index_.emplace(coordinates(v), v);
    }
    auto it = coord_index_.find(coords);
    return it == coord_index_.end() ? -1 : it->second;
  }

  /// Position of a vertex of an interval preset as a real number in [0,1].
  [[nodiscard]] double position(int v) const {
    const auto c = coordinates(v);
    return static_cast<double>(c.at(0)) / std::pow(static_cast<double>(structure_.coordinates()->scale), level_);
  }

  /// Edge list: "edge a b conductance" lines followed by "mass v value" lines.
  void write_edge_list(std::ostream& out) const {
    out.precision(17);
    out << "# network " << structure_.name() << " level " << level_ << " bc " << to_string(bc_) << "\n";
    out << "# vertices " << num_vertices() << " edges " << edges_.size() << "\n";
    for (const auto& e : edges_) out << "edge " << e.a << " " << e.b << " " << e.conductance << "\n";
    for (int v = 0; v < num_vertices(); ++v) out << "mass " << v << " " << mass_[v] << "\n";
    out << "boundary";
    for (int b : boundary()) out << " " << b;
    out << "\n";
  }

 private:
  void assemble() {
    const auto& cx = *complex_;
    const int corners = cx.corners_per_cell();
    const auto& a0 = structure_.a0();
    const double d_h = structure_.hausdorff_dimension();
    std::map<std::pair<int, int>, double> conductance;
    mass_ = Eigen::VectorXd::Zero(num_vertices());
    for (std::size_t c = 0; c < cx.num_cells(); ++c) {
      const Word w = cx.word_of(c);
      const double rw = structure_.resistance_scale(w);
      const double measure = std::pow(rw, d_h);
      for (int p = 0; p < corners; ++p) {
        const int vp = cx.corner(c, p);
        mass_[vp] += measure / corners;
        for (int q = p + 1; q < corners; ++q) {
          const int vq = cx.corner(c, q);
          if (vp == vq) throw DomainError("gluing collapses two corners of one cell");
          if (a0(p, q) == 0.0) continue;
          conductance[{std::min(vp, vq), std::max(vp, vq)}] += a0(p, q) / rw;
        }
      }
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(conductance.size() * 4);
    for (const auto& [key, g] : conductance) {
      edges_.push_back({key.first, key.second, g});
      triplets.emplace_back(key.first, key.second, -g);
      triplets.emplace_back(key.second, key.first, -g);
      triplets.emplace_back(key.first, key.first, g);
      triplets.emplace_back(key.second, key.second, g);
    }
    stiffness_.resize(num_vertices(), num_vertices());
    stiffness_.setFromTriplets(triplets.begin(), triplets.end());
    for (int v = 0; v < num_vertices(); ++v) {
      if (!(mass_[v] > 0.0)) throw NumericalError("vertex with zero lumped mass");
    }
  }

  PcfStructure structure_;
  std::shared_ptr<const CellComplex> complex_;
  int level_;
  Boundary bc_;
  Eigen::SparseMatrix<double> stiffness_;
  Eigen::VectorXd mass_;
  std::vector<Edge> edges_;
  mutable std::map<std::vector<std::int64_t>, int> coord_index_;
};

inline ApproximationNetwork build_network(const PcfStructure& s, int level, Boundary bc = Boundary::Neumann) {
  if (level < 0) throw DomainError("network level must be nonnegative");
  return ApproximationNetwork(s, level, bc);
}

namespace detail {

inline Eigen::SparseMatrix<double> principal_submatrix(const Eigen::SparseMatrix<double>& a, const std::vector<int>& index) {
  std::vector<int> position(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t i = 0; i < index.size(); ++i) position[static_cast<std::size_t>(index[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      const int r = position[static_cast<std::size_t>(it.row())];
      const int c = position[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  Eigen::SparseMatrix<double> out(static_cast<Eigen::Index>(index.size()), static_cast<Eigen::Index>(index.size()));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

inline Eigen::SparseMatrix<double> block(const Eigen::SparseMatrix<double>& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> rpos(static_cast<std::size_t>(a.rows()), -1);
  std::vector<int> cpos(static_cast<std::size_t>(a.cols()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rpos[static_cast<std::size_t>(rows[i])] = static_cast<int>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) cpos[static_cast<std::size_t>(cols[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      const int r = rpos[static_cast<std::size_t>(it.row())];
      const int c = cpos[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  Eigen::SparseMatrix<double> out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

inline std::vector<int> complement(int n, const std::vector<int>& keep) {
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (int k : keep) {
    if (k < 0 || k >= n) throw DomainError("vertex id out of range");
    if (kept[static_cast<std::size_t>(k)]) throw DomainError("duplicate vertex id");
    kept[static_cast<std::size_t>(k)] = true;
  }
  std::vector<int> rest;
  for (int v = 0; v < n; ++v) {
    if (!kept[static_cast<std::size_t>(v)]) rest.push_back(v);
  }
  return rest;
}

}  // namespace detail

/// Schur complement of a symmetric matrix onto `keep` (in the given order).
inline Eigen::MatrixXd schur_complement(const Eigen::SparseMatrix<double>& a, const std::vector<int>& keep) {
  if (keep.empty()) throw DomainError("trace target set must be nonempty");
  const auto rest = detail::complement(static_cast<int>(a.rows()), keep);
  Eigen::MatrixXd kk = Eigen::MatrixXd(detail::principal_submatrix(a, keep));
  if (rest.empty()) return kk;
  const auto ii = detail::principal_submatrix(a, rest);
  const Eigen::MatrixXd ik = Eigen::MatrixXd(detail::block(a, rest, keep));
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(ii);
  if (ldlt.info() != Eigen::Success) throw NumericalError("singular interior block in trace");
  const Eigen::VectorXd d = ldlt.vectorD();
  if ((d.array() <= 1e-14 * std::max(1.0, d.cwiseAbs().maxCoeff())).any()) {
    throw NumericalError("singular interior block in trace: interior component not connected to the kept set");
  }
  const Eigen::MatrixXd x = ldlt.solve(ik);
  Eigen::MatrixXd out = kk - ik.transpose() * x;
  return 0.5 * (out + out.transpose());
}

inline Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& a, const std::vector<int>& keep) {
  return schur_complement(Eigen::SparseMatrix<double>(a.sparseView()), keep);
}

/// Trace of the network's energy form onto `keep`.
inline Eigen::MatrixXd network_trace(const ApproximationNetwork& net, const std::vector<int>& keep) {
  return schur_complement(net.stiffness(), keep);
}

struct HarmonicCheck {
  bool passed = false;
  double deviation = 0.0;
  Eigen::MatrixXd traced;
};

/// Level-1 network traced onto F^0 compared against A0 (as the form -A0).
inline HarmonicCheck verify_harmonic_structure(const PcfStructure& s, double tolerance = 1e-10) {
  const auto net = build_network(s, 1);
  HarmonicCheck out;
  out.traced = network_trace(net, net.boundary());
  out.deviation = (out.traced + s.a0()).cwiseAbs().maxCoeff();
  out.passed = out.deviation <= tolerance;
  return out;
}

/// Effective resistances from one factorization of the stiffness matrix grounded at vertex 0.
class ResistanceSolver {
 public:
  explicit ResistanceSolver(const ApproximationNetwork& net) : n_(net.num_vertices()) {
    if (n_ < 2) return;
    std::vector<int> rest(static_cast<std::size_t>(n_ - 1));
    std::iota(rest.begin(), rest.end(), 1);
    ldlt_.compute(detail::principal_submatrix(net.stiffness(), rest));
    if (ldlt_.info() != Eigen::Success) throw NumericalError("grounded stiffness matrix is singular: network disconnected");
  }

  /// Potential (grounded at 0) for unit current injected at x and extracted at y.
  [[nodiscard]] Eigen::VectorXd potential(int x, int y) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_ - 1);
    if (x > 0) rhs[x - 1] += 1.0;
    if (y > 0) rhs[y - 1] -= 1.0;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_);
    v.tail(n_ - 1) = ldlt_.solve(rhs);
    return v;
  }

  [[nodiscard]] double operator()(int x, int y) const {
    check(x);
    check(y);
    if (x == y) return 0.0;
    const auto v = potential(x, y);
    return std::max(0.0, v[x] - v[y]);
  }

  /// All resistances from x (one solve).
  [[nodiscard]] Eigen::VectorXd from(int x) const {
    check(x);
    // R(x,y) = G(x,x) + G(y,y) - 2 G(x,y) with G the grounded inverse; needs the diagonal
    const auto g = diagonal();
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n_);
    if (x > 0) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_ - 1);
      rhs[x - 1] = 1.0;
      col.tail(n_ - 1) = ldlt_.solve(rhs);
    }
    Eigen::VectorXd r = (g.array() + g[x] - 2.0 * col.array()).matrix();
    r[x] = 0.0;
    return r.cwiseMax(0.0);
  }

  /// Diagonal of the grounded inverse (computed once).
  [[nodiscard]] const Eigen::VectorXd& diagonal() const {
    if (diag_.size() == 0) {
      diag_ = Eigen::VectorXd::Zero(n_);
      Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n_ - 1, n_ - 1);
      const Eigen::MatrixXd inv = ldlt_.solve(identity);
      diag_.tail(n_ - 1) = inv.diagonal();
    }
    return diag_;
  }

  [[nodiscard]] int size() const noexcept { return n_; }

 private:
  void check(int v) const {
    if (v < 0 || v >= n_) throw DomainError("vertex id out of range");
  }
  int n_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  mutable Eigen::VectorXd diag_;
};

inline double effective_resistance(const ApproximationNetwork& net, int x, int y) {
  if (x == y) return 0.0;
  return ResistanceSolver(net)(x, y);
}

/// All-pairs resistance matrix (dense; desk-scale networks only).
inline Eigen::MatrixXd resistance_matrix(const ApproximationNetwork& net) {
  const int n = net.num_vertices();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  if (n > 1) {
    std::vector<int> rest(static_cast<std::size_t>(n - 1));
    std::iota(rest.begin(), rest.end(), 1);
    const Eigen::MatrixXd grounded = Eigen::MatrixXd(detail::principal_submatrix(net.stiffness(), rest));
    Eigen::LLT<Eigen::MatrixXd> llt(grounded);
    if (llt.info() != Eigen::Success) throw NumericalError("grounded stiffness matrix is singular: network disconnected");
    g.bottomRightCorner(n - 1, n - 1) = llt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
  }
  const Eigen::VectorXd d = g.diagonal();
  Eigen::MatrixXd r = (d.replicate(1, n) + d.transpose().replicate(n, 1) - 2.0 * g).cwiseMax(0.0);
  r.diagonal().setZero();
  return 0.5 * (r + r.transpose());
}

/// Green function g_B(x, y): C g(., y) = delta_y off B, g = 0 on B.
class GreenFunction {
 public:
  GreenFunction(const ApproximationNetwork& net, std::vector<int> pinned) : n_(net.num_vertices()), pinned_(std::move(pinned)) {
    if (pinned_.empty()) throw DomainError("Green function boundary must be nonempty");
    free_ = detail::complement(n_, pinned_);
    position_.assign(static_cast<std::size_t>(n_), -1);
    for (std::size_t i = 0; i < free_.size(); ++i) position_[static_cast<std::size_t>(free_[i])] = static_cast<int>(i);
    if (!free_.empty()) {
      ldlt_.compute(detail::principal_submatrix(net.stiffness(), free_));
      if (ldlt_.info() != Eigen::Success) throw NumericalError("pinned system singular: component disconnected from boundary");
    }
  }

  /// g_B(., y) as a full vertex vector.
  [[nodiscard]] Eigen::VectorXd column(int y) const {
    if (y < 0 || y >= n_) throw DomainError("vertex id out of range");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    const int py = position_[static_cast<std::size_t>(y)];
    if (py < 0) return out;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_.size()));
    rhs[py] = 1.0;
    const Eigen::VectorXd sol = ldlt_.solve(rhs);
    for (std::size_t i = 0; i < free_.size(); ++i) out[free_[i]] = sol[static_cast<Eigen::Index>(i)];
    return out;
  }

  [[nodiscard]] double operator()(int x, int y) const {
    if (x < 0 || x >= n_) throw DomainError("vertex id out of range");
    return column(y)[x];
  }

 private:
  int n_;
  std::vector<int> pinned_;
  std::vector<int> free_;
  std::vector<int> position_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

inline double green_function(const ApproximationNetwork& net, const std::vector<int>& pinned, int x, int y) {
  return GreenFunction(net, pinned)(x, y);
}

struct HomogeneityRow {
  int level = 0;
  std::size_t vertices = 0;
  double min_inner_scaled = 0.0;  // min over x of inner(n,x) * 2^n; +inf when D^1 covers everything
  double max_outer_scaled = 0.0;  // max over x of outer(n,x) * 2^n
};

/// Per-level resistance radii of D^1_n(x) over the vertices of F^n_Lambda.
inline std::vector<HomogeneityRow> homogeneity_scan(const PcfStructure& s, int max_level) {
  std::vector<HomogeneityRow> rows;
  for (int n = 0; n <= max_level; ++n) {
    const auto lambda = level_partition(s, n);
    const int depth = static_cast<int>(lambda.max_length());
    const auto net = build_network(s, depth);
    const auto& cx = net.complex();
    const int corners = s.boundary_size();
    // corner vertex ids of every partition cell
    std::vector<std::vector<int>> cell_corners;
    std::map<int, std::vector<int>> incident;
    for (std::size_t c = 0; c < lambda.size(); ++c) {
      std::vector<int> ids;
      for (int a = 0; a < corners; ++a) {
        const int v = cx.vertex_of({lambda.words[c], a}, s);
        ids.push_back(v);
        incident[v].push_back(static_cast<int>(c));
      }
      cell_corners.push_back(std::move(ids));
    }
    std::vector<int> lattice;
    for (const auto& [v, cells] : incident) lattice.push_back(v);
    const ResistanceSolver resist(net);
    HomogeneityRow row;
    row.level = n;
    row.vertices = lattice.size();
    row.min_inner_scaled = std::numeric_limits<double>::infinity();
    const double scale = std::ldexp(1.0, n);
    for (int x : lattice) {
      std::vector<bool> in_d1(static_cast<std::size_t>(net.num_vertices()), false);
      for (int c : incident[x]) {
        for (int y : cell_corners[static_cast<std::size_t>(c)]) {
          for (int c2 : incident[y]) {
            for (int z : cell_corners[static_cast<std::size_t>(c2)]) in_d1[static_cast<std::size_t>(z)] = true;
          }
        }
      }
      const Eigen::VectorXd r = resist.from(x);
      double outer = 0.0;
      double inner = std::numeric_limits<double>::infinity();
      for (int y : lattice) {
        if (in_d1[static_cast<std::size_t>(y)]) outer = std::max(outer, r[y]);
        else inner = std::min(inner, r[y]);
      }
      row.max_outer_scaled = std::max(row.max_outer_scaled, outer * scale);
      row.min_inner_scaled = std::min(row.min_inner_scaled, inner * scale);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fshe

#endif  // FSHE_NETWORK_HPP
