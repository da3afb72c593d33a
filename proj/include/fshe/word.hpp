#ifndef FSHE_WORD_HPP
#define FSHE_WORD_HPP

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fshe/errors.hpp"

namespace fshe {

/// Finite word over the alphabet {1, ..., M}. Letters are stored 1-based.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<std::uint8_t> letters) : letters_(std::move(letters)) {}
  Word(std::initializer_list<int> letters) {
    letters_.reserve(letters.size());
    for (int l : letters) letters_.push_back(static_cast<std::uint8_t>(l));
  }

  /// Parses "121" (alphabets up to 9) or "1.12.3" (dot separated, any size).
  /// The empty string and "-" denote the empty word.
  static Word parse(std::string_view text) {
    Word w;
    if (text.empty() || text == "-") return w;
    if (text.find('.') == std::string_view::npos) {
      for (char c : text) {
        if (c < '1' || c > '9') throw DomainError("invalid letter in word: " + std::string(text));
        w.letters_.push_back(static_cast<std::uint8_t>(c - '0'));
      }
      return w;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto next = std::min(text.find('.', pos), text.size());
      const auto token = text.substr(pos, next - pos);
      int value = 0;
      if (token.empty()) throw DomainError("invalid word: " + std::string(text));
      for (char c : token) {
        if (c < '0' || c > '9') throw DomainError("invalid letter in word: " + std::string(text));
        value = value * 10 + (c - '0');
      }
      if (value < 1 || value > 255) throw DomainError("letter out of range in word: " + std::string(text));
      w.letters_.push_back(static_cast<std::uint8_t>(value));
      pos = next + 1;
    }
    return w;
  }

  [[nodiscard]] std::size_t size() const noexcept { return letters_.size(); }
  [[nodiscard]] bool empty() const noexcept { return letters_.empty(); }
  [[nodiscard]] int operator[](std::size_t i) const { return letters_[i]; }
  [[nodiscard]] const std::vector<std::uint8_t>& letters() const noexcept { return letters_; }

  [[nodiscard]] Word extended(int letter) const {
    Word w = *this;
    w.letters_.push_back(static_cast<std::uint8_t>(letter));
    return w;
  }

  [[nodiscard]] Word prefix(std::size_t n) const {
    return Word(std::vector<std::uint8_t>(letters_.begin(), letters_.begin() + static_cast<std::ptrdiff_t>(n)));
  }

  /// True when *this is a (not necessarily proper) prefix of other.
  [[nodiscard]] bool is_prefix_of(const Word& other) const noexcept {
    if (size() > other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (letters_[i] != other.letters_[i]) return false;
    }
    return true;
  }

  /// Cylinder sets of the two words intersect iff one word is a prefix of the other.
  [[nodiscard]] bool comparable(const Word& other) const noexcept {
    return is_prefix_of(other) || other.is_prefix_of(*this);
  }

  [[nodiscard]] bool valid_for(int alphabet) const noexcept {
    for (auto l : letters_) {
      if (l < 1 || l > alphabet) return false;
    }
    return true;
  }

  [[nodiscard]] std::string to_string() const {
    if (letters_.empty()) return "-";
    bool wide = false;
    for (auto l : letters_) wide = wide || l > 9;
    std::string out;
    for (std::size_t i = 0; i < letters_.size(); ++i) {
      if (wide && i > 0) out.push_back('.');
      out += std::to_string(letters_[i]);
    }
    return out;
  }

  auto operator<=>(const Word&) const = default;
  bool operator==(const Word&) const = default;

 private:
  std::vector<std::uint8_t> letters_;
};

inline std::ostream& operator<<(std::ostream& out, const Word& w) { return out << w.to_string(); }

}  // namespace fshe

#endif  // FSHE_WORD_HPP
