#ifndef FSHE_ADDRESSING_HPP
#define FSHE_ADDRESSING_HPP

#include <algorithm>
#include <compare>
#include <ostream>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fshe/structure.hpp"
#include "fshe/word.hpp"

namespace fshe {

/// The point psi_word(q_point), i.e. corner `point` of the cell F_word.
struct VertexAddress {
  Word word;
  int point = 0;
  auto operator<=>(const VertexAddress&) const = default;
  bool operator==(const VertexAddress&) const = default;
  [[nodiscard]] std::string to_string() const { return word.to_string() + ":" + std::to_string(point); }
};

inline std::ostream& operator<<(std::ostream& out, const VertexAddress& a) { return out << a.to_string(); }

/// Rewrites an address as the same point expressed as a corner of a cell at `depth`,
/// following q_a = psi_i(q_b) from the boundary embedding.
inline VertexAddress descend(const PcfStructure& s, VertexAddress addr, std::size_t depth) {
  s.check_word(addr.word);
  if (addr.word.size() > depth) throw DomainError("address " + addr.to_string() + " is deeper than " + std::to_string(depth));
  std::vector<std::uint8_t> letters = addr.word.letters();
  int point = addr.point;
  while (letters.size() < depth) {
    const auto& e = s.boundary_embedding()[static_cast<std::size_t>(point)];
    letters.push_back(static_cast<std::uint8_t>(e.cell));
    point = e.point;
  }
  return {Word(std::move(letters)), point};
}

/// All depth-`depth` corner addresses of the point denoted by `addr`, sorted.
/// Closure of the gluing relation: psi_{u i}(q_a) = psi_{u j}(q_b) for every prefix u.
inline std::vector<VertexAddress> equivalence_class(const PcfStructure& s, const VertexAddress& addr, std::size_t depth) {
  const auto start = descend(s, addr, depth);
  const int b = s.boundary_size();

  // chain[a] = letters appended when descending q_a by `depth` levels, plus the final point
  std::vector<std::vector<std::uint8_t>> chain_letters(static_cast<std::size_t>(b));
  std::vector<std::vector<int>> chain_points(static_cast<std::size_t>(b));
  for (int a = 0; a < b; ++a) {
    int point = a;
    chain_points[static_cast<std::size_t>(a)].push_back(point);
    for (std::size_t d = 0; d < depth; ++d) {
      const auto& e = s.boundary_embedding()[static_cast<std::size_t>(point)];
      chain_letters[static_cast<std::size_t>(a)].push_back(static_cast<std::uint8_t>(e.cell));
      point = e.point;
      chain_points[static_cast<std::size_t>(a)].push_back(point);
    }
  }

  std::set<VertexAddress> seen{start};
  std::vector<VertexAddress> frontier{start};
  while (!frontier.empty()) {
    const auto cur = frontier.back();
    frontier.pop_back();
    const auto& w = cur.word.letters();
    // position p: cur == descend(w[0..p] , a) for the level-(p+1) corner a
    for (std::size_t p = 0; p < depth; ++p) {
      const std::size_t tail = depth - p - 1;
      for (int a = 0; a < b; ++a) {
        const auto& cl = chain_letters[static_cast<std::size_t>(a)];
        if (chain_points[static_cast<std::size_t>(a)][tail] != cur.point) continue;
        if (!std::equal(w.begin() + static_cast<std::ptrdiff_t>(p + 1), w.end(), cl.begin())) continue;
        const CellPoint here{w[p], a};
        for (const auto& g : s.gluing()) {
          const CellPoint* other = nullptr;
          if (g.lhs == here) other = &g.rhs;
          else if (g.rhs == here) other = &g.lhs;
          if (other == nullptr) continue;
          std::vector<std::uint8_t> letters(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p));
          letters.push_back(static_cast<std::uint8_t>(other->cell));
          auto next = descend(s, {Word(std::move(letters)), other->point}, depth);
          if (seen.insert(next).second) frontier.push_back(std::move(next));
        }
      }
    }
  }
  return {seen.begin(), seen.end()};
}

/// Lexicographically smallest depth-`depth` representative of the point.
inline VertexAddress canonical_address(const PcfStructure& s, const VertexAddress& addr, std::size_t depth) {
  return equivalence_class(s, addr, depth).front();
}

/// Exact coordinates of the point scaled by scale^depth (presets only).
inline std::vector<std::int64_t> exact_coordinates(const PcfStructure& s, const VertexAddress& addr, std::size_t depth) {
  const auto& c = s.coordinates();
  if (!c) throw DomainError(s.name() + " carries no coordinate model");
  s.check_word(addr.word);
  if (addr.word.size() > depth) throw DomainError("address deeper than requested depth");
  std::vector<std::int64_t> x = c->boundary[static_cast<std::size_t>(addr.point)];
  std::int64_t factor = 1;
  for (std::size_t k = addr.word.size(); k-- > 0;) {
    const auto& t = c->translation[static_cast<std::size_t>(addr.word[k] - 1)];
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += factor * t[d];
    factor *= c->scale;
  }
  for (std::size_t k = addr.word.size(); k < depth; ++k) {
    for (auto& v : x) v *= c->scale;
  }
  return x;
}

}  // namespace fshe

#endif  // FSHE_ADDRESSING_HPP
