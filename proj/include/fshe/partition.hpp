#ifndef FSHE_PARTITION_HPP
#define FSHE_PARTITION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fshe/addressing.hpp"
#include "fshe/structure.hpp"
#include "fshe/word.hpp"

namespace fshe {

/// Finite prefix-free covering set of words, kept in lexicographic order.
struct Partition {
  std::vector<Word> words;
  double threshold = 1.0;
  std::optional<int> level;

  [[nodiscard]] std::size_t size() const noexcept { return words.size(); }
  [[nodiscard]] std::size_t max_length() const noexcept {
    std::size_t len = 0;
    for (const auto& w : words) len = std::max(len, w.size());
    return len;
  }
  [[nodiscard]] bool contains(const Word& w) const { return std::binary_search(words.begin(), words.end(), w); }

  /// The unique word of the partition that is a prefix of `w`, if any.
  [[nodiscard]] std::optional<Word> prefix_of(const Word& w) const {
    for (std::size_t len = 0; len <= w.size(); ++len) {
      auto candidate = w.prefix(len);
      if (contains(candidate)) return candidate;
    }
    return std::nullopt;
  }
};

/// Lambda(a) = { w : r_{w_1..w_{m-1}} > a >= r_w }, by depth-first expansion.
inline Partition build_partition(const PcfStructure& s, double a) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("partition threshold must lie in (0,1)");
  Partition p;
  p.threshold = a;
  std::vector<std::uint8_t> letters;
  auto expand = [&](auto&& self, double scale) -> void {
    if (scale <= a) {
      p.words.emplace_back(letters);
      return;
    }
    for (int i = 1; i <= s.cells(); ++i) {
      letters.push_back(static_cast<std::uint8_t>(i));
      self(self, scale * s.weights()[static_cast<std::size_t>(i - 1)]);
      letters.pop_back();
    }
  };
  expand(expand, 1.0);
  return p;  // depth-first order with increasing letters is lexicographic order
}

/// Lambda_n = Lambda(2^-n); Lambda_0 is the empty word.
inline Partition level_partition(const PcfStructure& s, int n) {
  if (n < 0) throw DomainError("partition level must be nonnegative");
  if (n == 0) {
    Partition p;
    p.words.emplace_back();
    p.level = 0;
    return p;
  }
  auto p = build_partition(s, std::ldexp(1.0, -n));
  p.level = n;
  return p;
}

/// Cardinality and total measure of Lambda(a) without enumerating the words.
/// Words are grouped by how often each letter occurs, which fixes r_w.
struct PartitionCensus {
  std::uint64_t count = 0;
  double measure = 0.0;
  std::size_t max_length = 0;
};

inline PartitionCensus census(const PcfStructure& s, double a) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("partition threshold must lie in (0,1)");
  const auto m = static_cast<std::size_t>(s.cells());
  // number of words with a given letter histogram, as a multinomial coefficient
  std::map<std::vector<int>, bool> visited;
  PartitionCensus out;
  auto multinomial = [](const std::vector<int>& h) {
    unsigned __int128 result = 1;
    int total = 0;
    for (int c : h) {
      for (int k = 1; k <= c; ++k) {
        ++total;
        result = result * static_cast<unsigned>(total) / static_cast<unsigned>(k);
      }
    }
    return static_cast<std::uint64_t>(result);
  };
  // A histogram h belongs to Lambda(a) through words ending in letter i when
  // r(h) <= a and r(h - e_i) > a; count those words as multinomial(h - e_i).
  std::vector<int> h(m, 0);
  auto scale_of = [&](const std::vector<int>& hist) {
    double r = 1.0;
    for (std::size_t i = 0; i < m; ++i) r *= std::pow(s.weights()[i], hist[i]);
    return r;
  };
  auto walk = [&](auto&& self) -> void {
    if (visited.count(h)) return;
    visited[h] = true;
    const double r = scale_of(h);
    if (r <= a) return;
    for (std::size_t i = 0; i < m; ++i) {
      ++h[i];
      const double child = r * s.weights()[i];
      if (child <= a) {
        --h[i];
        const auto words = multinomial(h);
        ++h[i];
        out.count += words;
        out.measure += static_cast<double>(words) * std::pow(child, s.hausdorff_dimension());
        out.max_length = std::max<std::size_t>(out.max_length, static_cast<std::size_t>(std::accumulate(h.begin(), h.end(), 0)));
      } else {
        self(self);
      }
      --h[i];
    }
  };
  walk(walk);
  return out;
}

inline PartitionCensus level_census(const PcfStructure& s, int n) {
  if (n == 0) return {1, 1.0, 0};
  return census(s, std::ldexp(1.0, -n));
}

/// Every fine word either extends some coarse word or is prefix-disjoint from all of them.
inline bool verify_refinement(const Partition& fine, const Partition& coarse) {
  for (const auto& w : fine.words) {
    auto it = std::lower_bound(coarse.words.begin(), coarse.words.end(), w);
    if (it != coarse.words.end() && *it == w) ++it;
    // coarse words having w as a proper prefix form a contiguous run starting here
    if (it != coarse.words.end() && w.is_prefix_of(*it)) return false;
  }
  return true;
}

/// Prefix-free and covering (Kraft equality), plus r_min a < r_w <= a when a threshold applies.
inline bool is_valid_partition(const PcfStructure& s, const Partition& p, bool check_threshold = true) {
  if (p.words.empty()) return false;
  for (std::size_t i = 0; i < p.words.size(); ++i) {
    if (!p.words[i].valid_for(s.cells())) return false;
    if (i + 1 < p.words.size() && !(p.words[i] < p.words[i + 1])) return false;
    if (i + 1 < p.words.size() && p.words[i].is_prefix_of(p.words[i + 1])) return false;
  }
  long double kraft = 0.0L;
  for (const auto& w : p.words) kraft += std::pow(static_cast<long double>(s.cells()), -static_cast<long double>(w.size()));
  if (std::abs(kraft - 1.0L) > 1e-12L) return false;
  if (check_threshold && p.threshold < 1.0) {
    for (const auto& w : p.words) {
      const double rw = s.resistance_scale(w);
      if (!(s.r_min() * p.threshold < rw && rw <= p.threshold)) return false;
    }
  }
  return true;
}

/// Words of Lambda_n whose cells make up a neighbourhood of `owner`.
struct CellAddressSet {
  VertexAddress owner;
  int level = 0;
  int order = 0;
  std::vector<Word> words;
};

namespace detail {

/// Partition words whose cells contain the given point (depth must cover both).
inline std::set<Word> cells_containing(const PcfStructure& s, const Partition& p, const VertexAddress& x, std::size_t depth) {
  std::set<Word> out;
  for (const auto& rep : equivalence_class(s, x, depth)) {
    if (auto w = p.prefix_of(rep.word)) out.insert(*w);
  }
  return out;
}

}  // namespace detail

/// D^0_n(x) (order 0) or D^1_n(x) (order 1), decided by corner identification.
inline CellAddressSet neighborhood(const PcfStructure& s, int n, const VertexAddress& x, int order) {
  if (order != 0 && order != 1) throw DomainError("neighbourhood order must be 0 or 1");
  s.check_word(x.word);
  if (x.point < 0 || x.point >= s.boundary_size()) throw DomainError("vertex address point out of range");
  const auto lambda = level_partition(s, n);
  const std::size_t depth = std::max(lambda.max_length(), x.word.size());
  auto inner = detail::cells_containing(s, lambda, x, depth);
  if (inner.empty()) throw DomainError("address " + x.to_string() + " is not realizable at level " + std::to_string(n));
  std::set<Word> result = inner;
  if (order == 1) {
    for (const auto& w : inner) {
      for (int a = 0; a < s.boundary_size(); ++a) {
        auto touching = detail::cells_containing(s, lambda, {w, a}, depth);
        result.insert(touching.begin(), touching.end());
      }
    }
  }
  return {x, n, order, {result.begin(), result.end()}};
}

/// Largest |D^1_n(x)| over all x in F^n_Lambda, computed from the partition's corner incidence.
inline std::size_t max_neighborhood_size(const PcfStructure& s, int n) {
  const auto lambda = level_partition(s, n);
  const std::size_t depth = lambda.max_length();
  std::map<std::vector<std::int64_t>, std::vector<std::uint32_t>> incident;
  std::vector<std::vector<std::int64_t>> corner_keys(lambda.size() * static_cast<std::size_t>(s.boundary_size()));
  for (std::size_t c = 0; c < lambda.size(); ++c) {
    for (int a = 0; a < s.boundary_size(); ++a) {
      std::vector<std::int64_t> key;
      if (s.coordinates()) {
        key = exact_coordinates(s, {lambda.words[c], a}, depth);
      } else {
        const auto rep = canonical_address(s, {lambda.words[c], a}, depth);
        key.assign(rep.word.letters().begin(), rep.word.letters().end());
        key.push_back(rep.point);
      }
      incident[key].push_back(static_cast<std::uint32_t>(c));
      corner_keys[c * static_cast<std::size_t>(s.boundary_size()) + static_cast<std::size_t>(a)] = std::move(key);
    }
  }
  std::size_t worst = 0;
  std::vector<std::uint32_t> cells;
  for (const auto& [key, inner] : incident) {
    cells.clear();
    for (auto c : inner) {
      for (int a = 0; a < s.boundary_size(); ++a) {
        const auto& around = incident.at(corner_keys[c * static_cast<std::size_t>(s.boundary_size()) + static_cast<std::size_t>(a)]);
        cells.insert(cells.end(), around.begin(), around.end());
      }
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    worst = std::max(worst, cells.size());
  }
  return worst;
}

struct LevelCheck {
  int level = 0;
  std::uint64_t count = 0;
  double lower = 0.0;  // 2^{d_H n}
  double upper = 0.0;  // r_min^{-d_H} 2^{d_H n}
  double measure = 0.0;
  bool sandwich = false;
  bool additive = false;
  std::optional<bool> refines_previous;  // Lambda_n refines Lambda_{n-1}, with the word-length gap
  std::optional<std::size_t> max_neighborhood;
};

struct CombinatoricsReport {
  std::string structure;
  std::vector<LevelCheck> levels;
  int refinement_checked_to = 0;
  int neighborhood_checked_to = -1;
  std::size_t neighborhood_max = 0;
  std::size_t neighborhood_bound = 0;  // 2 M^2

  [[nodiscard]] bool passed() const {
    for (const auto& l : levels) {
      if (!l.sandwich || !l.additive) return false;
      if (l.refines_previous && !*l.refines_previous) return false;
    }
    return neighborhood_max <= neighborhood_bound;
  }
};

/// Cardinality sandwich and measure additivity for n <= n_max from the census; refinement chain and
/// the largest D^1 neighbourhood wherever the partition has at most `word_budget` words.
/// With equal weights Lambda_n is all words of one length, so refinement needs no enumeration.
inline CombinatoricsReport combinatorics_check(const PcfStructure& s, int n_max, std::uint64_t word_budget = 300000) {
  CombinatoricsReport out;
  out.structure = s.name();
  out.neighborhood_bound = 2 * static_cast<std::size_t>(s.cells()) * static_cast<std::size_t>(s.cells());
  const double gap = (std::log(2.0) + std::log(1.0 / s.r_min())) / std::log(1.0 / s.r_max());
  const bool uniform = s.r_min() == s.r_max();
  std::optional<Partition> previous;
  PartitionCensus previous_census{1, 1.0, 0};
  bool refinement_gap = false;
  for (int n = 0; n <= n_max; ++n) {
    LevelCheck row;
    row.level = n;
    const auto c = level_census(s, n);
    row.count = c.count;
    row.lower = std::pow(2.0, s.hausdorff_dimension() * n);
    row.upper = std::pow(s.r_min(), -s.hausdorff_dimension()) * row.lower;
    row.measure = c.measure;
    row.sandwich = row.lower <= static_cast<double>(c.count) * (1.0 + 1e-12) && static_cast<double>(c.count) < row.upper;
    row.additive = std::abs(c.measure - 1.0) <= 1e-12;
    const bool enumerable = c.count <= word_budget;
    std::optional<Partition> current;
    if (enumerable) current = level_partition(s, n);
    if (n > 0) {
      if (uniform) {
        // count = M^L forces every word to have length L
        const auto full = [&](const PartitionCensus& pc) {
          return static_cast<double>(pc.count) == std::pow(static_cast<double>(s.cells()), static_cast<double>(pc.max_length));
        };
        row.refines_previous = full(c) && full(previous_census) && c.max_length >= previous_census.max_length &&
                               static_cast<double>(c.max_length - previous_census.max_length) < gap;
      } else if (current && previous) {
        bool ok = verify_refinement(*current, *previous);
        for (const auto& v : current->words) {
          const auto w = previous->prefix_of(v);
          if (!w || !(static_cast<double>(v.size() - w->size()) < gap)) ok = false;
        }
        row.refines_previous = ok;
      }
      if (row.refines_previous && !refinement_gap) out.refinement_checked_to = n;
      else refinement_gap = true;
    }
    if (enumerable && out.neighborhood_checked_to == n - 1) {
      row.max_neighborhood = max_neighborhood_size(s, n);
      out.neighborhood_max = std::max(out.neighborhood_max, *row.max_neighborhood);
      out.neighborhood_checked_to = n;
    }
    out.levels.push_back(row);
    previous = std::move(current);
    previous_census = c;
  }
  return out;
}

}  // namespace fshe

#endif  // FSHE_PARTITION_HPP
