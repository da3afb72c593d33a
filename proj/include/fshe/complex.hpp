#ifndef FSHE_COMPLEX_HPP
#define FSHE_COMPLEX_HPP

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "fshe/addressing.hpp"
#include "fshe/structure.hpp"

namespace fshe {

enum class Identification { Coordinates, Gluing };

/// All cells of W_depth with their corners resolved to canonical vertex ids.
///
/// Cells are indexed in lexicographic word order. Vertex ids are assigned in order
/// of first occurrence scanning (cell, corner), so each vertex's recorded
/// representative is its lexicographically smallest (word, point) pair.
class CellComplex {
 public:
  CellComplex(const PcfStructure& s, int depth, std::optional<Identification> mode = std::nullopt)
      : depth_(depth), alphabet_(s.cells()), corners_(s.boundary_size()) {
    if (depth < 0) throw DomainError("depth must be nonnegative");
    std::size_t cells = 1;
    for (int k = 0; k < depth; ++k) {
      cells *= static_cast<std::size_t>(alphabet_);
      if (cells > (std::size_t{1} << 26)) throw DomainError("cell complex too large at depth " + std::to_string(depth));
    }
    num_cells_ = cells;
    const Identification how = mode.value_or(s.coordinates() ? Identification::Coordinates : Identification::Gluing);
    if (how == Identification::Coordinates) {
      if (!s.coordinates()) throw DomainError(s.name() + " has no coordinate model");
      build_from_coordinates(s);
    } else {
      build_from_gluing(s);
    }
    incidence_offsets_.assign(num_vertices_ + 1, 0);
    for (auto v : corner_vertex_) ++incidence_offsets_[static_cast<std::size_t>(v) + 1];
    std::partial_sum(incidence_offsets_.begin(), incidence_offsets_.end(), incidence_offsets_.begin());
    incidence_.resize(corner_vertex_.size());
    auto fill = incidence_offsets_;
    for (std::size_t slot = 0; slot < corner_vertex_.size(); ++slot) {
      incidence_[fill[static_cast<std::size_t>(corner_vertex_[slot])]++] = static_cast<std::uint32_t>(slot);
    }
    for (int a = 0; a < corners_; ++a) boundary_.push_back(vertex_of({Word{}, a}, s));
  }

  [[nodiscard]] int depth() const noexcept { return depth_; }
  [[nodiscard]] std::size_t num_cells() const noexcept { return num_cells_; }
  [[nodiscard]] std::size_t num_vertices() const noexcept { return num_vertices_; }
  [[nodiscard]] int corners_per_cell() const noexcept { return corners_; }
  [[nodiscard]] int corner(std::size_t cell, int point) const {
    return corner_vertex_[cell * static_cast<std::size_t>(corners_) + static_cast<std::size_t>(point)];
  }
  /// Vertex ids of F^0, ordered by boundary point index.
  [[nodiscard]] const std::vector<int>& boundary() const noexcept { return boundary_; }
  [[nodiscard]] const std::vector<int>& corner_vertices() const noexcept { return corner_vertex_; }

  [[nodiscard]] Word word_of(std::size_t cell) const {
    std::vector<std::uint8_t> letters(static_cast<std::size_t>(depth_));
    for (int k = depth_ - 1; k >= 0; --k) {
      letters[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(cell % static_cast<std::size_t>(alphabet_) + 1);
      cell /= static_cast<std::size_t>(alphabet_);
    }
    return Word(std::move(letters));
  }

  [[nodiscard]] std::size_t cell_of(const Word& w) const {
    if (static_cast<int>(w.size()) != depth_) throw DomainError("word length does not match complex depth");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < w.size(); ++k) idx = idx * static_cast<std::size_t>(alphabet_) + static_cast<std::size_t>(w[k] - 1);
    return idx;
  }

  /// Canonical (lexicographically smallest) representative of a vertex.
  [[nodiscard]] VertexAddress representative(int vertex) const {
    const auto slot = incidence_[incidence_offsets_[static_cast<std::size_t>(vertex)]];
    return {word_of(slot / static_cast<std::size_t>(corners_)), static_cast<int>(slot % static_cast<std::size_t>(corners_))};
  }

  /// (cell, corner) slots meeting at a vertex, in increasing order.
  [[nodiscard]] std::vector<std::pair<std::size_t, int>> incident_cells(int vertex) const {
    std::vector<std::pair<std::size_t, int>> out;
    for (auto i = incidence_offsets_[static_cast<std::size_t>(vertex)]; i < incidence_offsets_[static_cast<std::size_t>(vertex) + 1]; ++i) {
      const auto slot = incidence_[i];
      out.emplace_back(slot / static_cast<std::size_t>(corners_), static_cast<int>(slot % static_cast<std::size_t>(corners_)));
    }
    return out;
  }

  /// Id of the vertex psi_w(q_a) for any |w| <= depth.
  [[nodiscard]] int vertex_of(const VertexAddress& addr, const PcfStructure& s) const {
    const auto d = descend(s, addr, static_cast<std::size_t>(depth_));
    return corner(cell_of(d.word), d.point);
  }

 private:
  void build_from_coordinates(const PcfStructure& s) {
    std::map<std::vector<std::int64_t>, int> ids;
    corner_vertex_.resize(num_cells_ * static_cast<std::size_t>(corners_));
    for (std::size_t c = 0; c < num_cells_; ++c) {
      const auto w = word_of(c);
      for (int a = 0; a < corners_; ++a) {
        auto key = exact_coordinates(s, {w, a}, static_cast<std::size_t>(depth_));
        auto [it, inserted] = ids.try_emplace(std::move(key), static_cast<int>(ids.size()));
        corner_vertex_[c * static_cast<std::size_t>(corners_) + static_cast<std::size_t>(a)] = it->second;
      }
    }
    num_vertices_ = ids.size();
  }

  void build_from_gluing(const PcfStructure& s) {
    const std::size_t slots = num_cells_ * static_cast<std::size_t>(corners_);
    std::vector<std::size_t> parent(slots);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
      }
      return x;
    };
    auto slot_of = [&](std::size_t prefix_index, int prefix_len, CellPoint p) {
      // descend psi_{u i}(q_a) to full depth; u is encoded by prefix_index
      std::size_t idx = prefix_index * static_cast<std::size_t>(alphabet_) + static_cast<std::size_t>(p.cell - 1);
      int point = p.point;
      for (int k = prefix_len + 1; k < depth_; ++k) {
        const auto& e = s.boundary_embedding()[static_cast<std::size_t>(point)];
        idx = idx * static_cast<std::size_t>(alphabet_) + static_cast<std::size_t>(e.cell - 1);
        point = e.point;
      }
      return idx * static_cast<std::size_t>(corners_) + static_cast<std::size_t>(point);
    };
    std::size_t prefixes = 1;
    for (int len = 0; len < depth_; ++len) {
      for (std::size_t u = 0; u < prefixes; ++u) {
        for (const auto& g : s.gluing()) {
          const auto x = find(slot_of(u, len, g.lhs));
          const auto y = find(slot_of(u, len, g.rhs));
          if (x != y) parent[std::max(x, y)] = std::min(x, y);
        }
      }
      prefixes *= static_cast<std::size_t>(alphabet_);
    }
    corner_vertex_.assign(slots, -1);
    std::vector<int> root_id(slots, -1);
    int next = 0;
    for (std::size_t slot = 0; slot < slots; ++slot) {
      const auto root = find(slot);
      if (root_id[root] < 0) root_id[root] = next++;
      corner_vertex_[slot] = root_id[root];
    }
    num_vertices_ = static_cast<std::size_t>(next);
  }

  int depth_;
  int alphabet_;
  int corners_;
  std::size_t num_cells_ = 1;
  std::size_t num_vertices_ = 0;
  std::vector<int> corner_vertex_;
  std::vector<std::size_t> incidence_offsets_;
  std::vector<std::uint32_t> incidence_;
  std::vector<int> boundary_;
};

}  // namespace fshe

#endif  // FSHE_COMPLEX_HPP
