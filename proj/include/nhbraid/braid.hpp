#pragma once

// Braid words on N strands. Generator i (1 <= i < N) is sigma_{i(i+1)};
// words are read left to right.
//
// Permutation convention: permutation_of(w)[k] is the final position of the
// strand that starts at position k (0-based), so that
// permutation_of(a * b) = permutation_of(b) o permutation_of(a).

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "nhbraid/spectral.hpp"
#include "nhbraid/types.hpp"

namespace nhbraid {

struct BraidLetter {
  int generator = 1;  // sigma_{g, g+1}
  int sign = 1;       // +1 or -1

  bool operator==(const BraidLetter&) const = default;
};

struct BraidWord {
  int strands = 3;
  std::vector<BraidLetter> letters;

  bool operator==(const BraidWord&) const = default;

  std::size_t length() const { return letters.size(); }
  bool empty() const { return letters.empty(); }

  void validate() const {
    if (strands < 2) throw Error(ErrorKind::InvalidArgument, "braid needs at least two strands");
    for (const auto& l : letters)
      if (l.generator < 1 || l.generator >= strands || (l.sign != 1 && l.sign != -1))
        throw Error(ErrorKind::InvalidArgument, "generator out of range");
  }

  BraidWord operator*(const BraidWord& rhs) const {
    BraidWord out = *this;
    out.letters.insert(out.letters.end(), rhs.letters.begin(), rhs.letters.end());
    return out;
  }

  BraidWord inverse() const {
    BraidWord out{strands, {}};
    for (auto it = letters.rbegin(); it != letters.rend(); ++it)
      out.letters.push_back({it->generator, -it->sign});
    return out;
  }
};

/// Textual form: "s12 s23 s12' s23'" (apostrophe marks an inverse); empty
/// string is the identity.
inline std::string format_word(const BraidWord& w) {
  std::string out;
  for (const auto& l : w.letters) {
    if (!out.empty()) out += ' ';
    out += 's' + std::to_string(l.generator) + std::to_string(l.generator + 1);
    if (l.sign < 0) out += '\'';
  }
  return out;
}

inline BraidWord parse_word(const std::string& text, int strands = 3) {
  BraidWord w{strands, {}};
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    int sign = 1;
    if (!tok.empty() && tok.back() == '\'') {
      sign = -1;
      tok.pop_back();
    }
    if (tok.size() < 3 || tok[0] != 's')
      throw Error(ErrorKind::InvalidArgument, "bad braid letter '" + tok + "'");
    const std::string body = tok.substr(1);
    // sIJ with J = I + 1; I may have several digits for N > 9.
    bool parsed = false;
    for (std::size_t split = 1; split < body.size(); ++split) {
      const std::string a = body.substr(0, split);
      const std::string b = body.substr(split);
      if (!std::all_of(a.begin(), a.end(), ::isdigit) || !std::all_of(b.begin(), b.end(), ::isdigit))
        continue;
      const int i = std::stoi(a);
      const int j = std::stoi(b);
      if (j == i + 1) {
        w.letters.push_back({i, sign});
        parsed = true;
        break;
      }
    }
    if (!parsed) throw Error(ErrorKind::InvalidArgument, "bad braid letter '" + tok + "'");
  }
  w.validate();
  return w;
}

/// Bijection on {0..N-1}.
struct Permutation {
  std::vector<int> images;

  static Permutation identity(int n) {
    Permutation p;
    p.images.resize(n);
    std::iota(p.images.begin(), p.images.end(), 0);
    return p;
  }

  bool operator==(const Permutation&) const = default;

  int size() const { return static_cast<int>(images.size()); }
  int operator()(int k) const { return images[k]; }

  /// (a.then(b))(k) = b(a(k)).
  Permutation then(const Permutation& b) const {
    Permutation out;
    out.images.resize(images.size());
    for (std::size_t k = 0; k < images.size(); ++k) out.images[k] = b.images[images[k]];
    return out;
  }

  Permutation inverse() const {
    Permutation out;
    out.images.resize(images.size());
    for (std::size_t k = 0; k < images.size(); ++k) out.images[images[k]] = static_cast<int>(k);
    return out;
  }

  bool is_bijection() const {
    std::vector<bool> seen(images.size(), false);
    for (int v : images) {
      if (v < 0 || v >= size() || seen[v]) return false;
      seen[v] = true;
    }
    return true;
  }

  /// Sorted cycle lengths; equal exactly for conjugate permutations.
  std::vector<int> cycle_type() const {
    std::vector<bool> seen(images.size(), false);
    std::vector<int> lengths;
    for (int k = 0; k < size(); ++k) {
      if (seen[k]) continue;
      int len = 0;
      for (int v = k; !seen[v]; v = images[v]) {
        seen[v] = true;
        ++len;
      }
      lengths.push_back(len);
    }
    std::sort(lengths.begin(), lengths.end());
    return lengths;
  }
};

inline Permutation permutation_of(const BraidWord& w) {
  w.validate();
  // strand_at[pos] = strand currently at that position
  std::vector<int> strand_at(w.strands);
  std::iota(strand_at.begin(), strand_at.end(), 0);
  for (const auto& l : w.letters) std::swap(strand_at[l.generator - 1], strand_at[l.generator]);
  Permutation p;
  p.images.resize(w.strands);
  for (int pos = 0; pos < w.strands; ++pos) p.images[strand_at[pos]] = pos;
  return p;
}

inline int exponent_sum(const BraidWord& w) {
  int s = 0;
  for (const auto& l : w.letters) s += l.sign;
  return s;
}

/// Deletes adjacent sigma sigma^-1 pairs until none remain.
inline BraidWord free_reduce(const BraidWord& w) {
  BraidWord out{w.strands, {}};
  for (const auto& l : w.letters) {
    if (!out.letters.empty() && out.letters.back().generator == l.generator &&
        out.letters.back().sign == -l.sign)
      out.letters.pop_back();
    else
      out.letters.push_back(l);
  }
  return out;
}

/// Translates real-part crossings tau_{ij} (continuation labels) into braid
/// generators on instantaneous real-part positions.
inline BraidWord tau_to_sigma(const std::vector<CrossingEvent>& crossings, int strands = 3) {
  BraidWord w{strands, {}};
  // position[label-1] = current real-part position (1-based) of the band,
  // i.e. the inverse of the accumulated permutation Z_m.
  std::vector<int> position(strands);
  std::iota(position.begin(), position.end(), 1);
  for (const auto& c : crossings) {
    if (c.i < 1 || c.i > strands || c.j < 1 || c.j > strands || c.i == c.j)
      throw Error(ErrorKind::InvalidArgument, "crossing labels out of range");
    const int k = position[c.i - 1];
    const int l = position[c.j - 1];
    if (std::abs(k - l) != 1)
      throw Error(ErrorKind::NonAdjacentCrossing,
                  "crossing maps to non-adjacent positions " + std::to_string(k) + "," +
                      std::to_string(l));
    w.letters.push_back({std::min(k, l), k < l ? 1 : -1});
    std::swap(position[c.i - 1], position[c.j - 1]);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Exact Laurent polynomials in t with integer coefficients.

class Laurent {
 public:
  Laurent() = default;
  explicit Laurent(std::int64_t constant) {
    if (constant != 0) terms_[0] = constant;
  }
  static Laurent monomial(std::int64_t coeff, int power) {
    Laurent p;
    if (coeff != 0) p.terms_[power] = coeff;
    return p;
  }

  bool is_zero() const { return terms_.empty(); }
  const std::map<int, std::int64_t>& terms() const { return terms_; }

  bool operator==(const Laurent&) const = default;

  Laurent& operator+=(const Laurent& o) {
    for (const auto& [pw, c] : o.terms_) add_term(pw, c);
    return *this;
  }
  Laurent& operator-=(const Laurent& o) {
    for (const auto& [pw, c] : o.terms_) add_term(pw, checked_neg(c));
    return *this;
  }
  friend Laurent operator+(Laurent a, const Laurent& b) { return a += b; }
  friend Laurent operator-(Laurent a, const Laurent& b) { return a -= b; }
  friend Laurent operator*(const Laurent& a, const Laurent& b) {
    Laurent out;
    for (const auto& [pa, ca] : a.terms_)
      for (const auto& [pb, cb] : b.terms_) {
        std::int64_t prod;
        if (__builtin_mul_overflow(ca, cb, &prod))
          throw Error(ErrorKind::OutOfRange, "Laurent coefficient overflow");
        out.add_term(pa + pb, prod);
      }
    return out;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto [pw, c] = *it;
      if (!first) os << (c < 0 ? " - " : " + ");
      else if (c < 0) os << '-';
      first = false;
      const std::int64_t mag = c < 0 ? -c : c;
      if (pw == 0) {
        os << mag;
        continue;
      }
      if (mag != 1) os << mag << '*';
      os << 't';
      if (pw != 1) os << '^' << pw;
    }
    return os.str();
  }

 private:
  static std::int64_t checked_neg(std::int64_t c) {
    if (c == INT64_MIN) throw Error(ErrorKind::OutOfRange, "Laurent coefficient overflow");
    return -c;
  }
  void add_term(int power, std::int64_t c) {
    std::int64_t& slot = terms_[power];
    if (__builtin_add_overflow(slot, c, &slot))
      throw Error(ErrorKind::OutOfRange, "Laurent coefficient overflow");
    if (slot == 0) terms_.erase(power);
  }

  std::map<int, std::int64_t> terms_;  // power -> nonzero coefficient
};

/// Square matrix over Z[t, t^-1].
struct LaurentMatrix {
  int n = 0;
  std::vector<Laurent> entries;

  static LaurentMatrix identity(int n) {
    LaurentMatrix m{n, std::vector<Laurent>(static_cast<std::size_t>(n * n))};
    for (int i = 0; i < n; ++i) m(i, i) = Laurent(1);
    return m;
  }

  Laurent& operator()(int r, int c) { return entries[static_cast<std::size_t>(r * n + c)]; }
  const Laurent& operator()(int r, int c) const { return entries[static_cast<std::size_t>(r * n + c)]; }

  bool operator==(const LaurentMatrix&) const = default;

  friend LaurentMatrix operator*(const LaurentMatrix& a, const LaurentMatrix& b) {
    LaurentMatrix out{a.n, std::vector<Laurent>(a.entries.size())};
    for (int i = 0; i < a.n; ++i)
      for (int k = 0; k < a.n; ++k) {
        if (a(i, k).is_zero()) continue;
        for (int j = 0; j < a.n; ++j)
          if (!b(k, j).is_zero()) out(i, j) += a(i, k) * b(k, j);
      }
    return out;
  }

  Laurent trace() const {
    Laurent t;
    for (int i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
  }
};

/// Reduced Burau image of a single generator. The (N-1)x(N-1) matrix is the
/// identity except for the block on rows/cols g-2..g (0-based, clipped):
///   sigma    : [[1, t, 0], [0, -t, 0], [0, 1, 1]]
///   sigma^-1 : [[1, 1, 0], [0, -t^-1, 0], [0, t^-1, 1]]
inline LaurentMatrix burau_generator(int strands, const BraidLetter& letter) {
  const int n = strands - 1;
  LaurentMatrix m = LaurentMatrix::identity(n);
  const int c = letter.generator - 1;  // centre of the block
  auto set = [&](int r, int col, const Laurent& v) {
    if (r >= 0 && r < n && col >= 0 && col < n) m(r, col) = v;
  };
  if (letter.sign > 0) {
    set(c - 1, c, Laurent::monomial(1, 1));
    set(c, c, Laurent::monomial(-1, 1));
    set(c + 1, c, Laurent(1));
  } else {
    set(c - 1, c, Laurent(1));
    set(c, c, Laurent::monomial(-1, -1));
    set(c + 1, c, Laurent::monomial(1, -1));
  }
  return m;
}

inline LaurentMatrix burau(const BraidWord& w) {
  w.validate();
  LaurentMatrix m = LaurentMatrix::identity(w.strands - 1);
  for (const auto& l : w.letters) m = m * burau_generator(w.strands, l);
  return m;
}

/// Outcome of an equivalence query. Undecided outcomes are raised as
/// Error(Inconclusive) by equivalent(); this enum is what check_equivalence
/// reports without throwing.
enum class Equivalence { Equal, Different, Inconclusive };

namespace detail {

inline void for_each_reduced_word(int strands, int max_len,
                                  const std::function<bool(const BraidWord&)>& visit) {
  BraidWord w{strands, {}};
  std::function<bool(int)> rec = [&](int remaining) -> bool {
    if (visit(w)) return true;
    if (remaining == 0) return false;
    for (int g = 1; g < strands; ++g)
      for (int s : {1, -1}) {
        if (!w.letters.empty() && w.letters.back().generator == g && w.letters.back().sign == -s)
          continue;
        w.letters.push_back({g, s});
        const bool done = rec(remaining - 1);
        w.letters.pop_back();
        if (done) return true;
      }
    return false;
  };
  rec(max_len);
}

}  // namespace detail

inline constexpr int kConjugatorSearchLength = 6;

/// Word-problem (or conjugacy) comparison without throwing.
inline Equivalence check_equivalence(const BraidWord& a, const BraidWord& b, bool up_to_conjugacy,
                                     int conjugator_bound = kConjugatorSearchLength) {
  a.validate();
  b.validate();
  if (a.strands != b.strands) throw Error(ErrorKind::InvalidArgument, "strand counts differ");

  const LaurentMatrix ba = burau(a);
  const LaurentMatrix bb = burau(b);

  if (!up_to_conjugacy) {
    if (permutation_of(a) != permutation_of(b) || ba != bb) return Equivalence::Different;
    // The reduced Burau representation is faithful on three strands.
    return a.strands <= 3 ? Equivalence::Equal : Equivalence::Inconclusive;
  }

  if (exponent_sum(a) != exponent_sum(b)) return Equivalence::Different;
  if (permutation_of(a).cycle_type() != permutation_of(b).cycle_type()) return Equivalence::Different;
  if (ba.trace() != bb.trace()) return Equivalence::Different;

  bool found = false;
  detail::for_each_reduced_word(a.strands, conjugator_bound, [&](const BraidWord& g) {
    // g a g^-1 == b  <=>  B(g) B(a) == B(b) B(g), plus matching permutations.
    const LaurentMatrix bg = burau(g);
    if (bg * ba == bb * bg &&
        permutation_of(g * a * g.inverse()) == permutation_of(b)) {
      found = true;
      return a.strands <= 3;
    }
    return false;
  });
  if (found) return a.strands <= 3 ? Equivalence::Equal : Equivalence::Inconclusive;
  return Equivalence::Inconclusive;
}

/// Word-problem equality (or conjugacy when requested). Throws
/// Error(Inconclusive) when the bounded conjugator search cannot decide.
inline bool equivalent(const BraidWord& a, const BraidWord& b, bool up_to_conjugacy) {
  switch (check_equivalence(a, b, up_to_conjugacy)) {
    case Equivalence::Equal: return true;
    case Equivalence::Different: return false;
    case Equivalence::Inconclusive: break;
  }
  throw Error(ErrorKind::Inconclusive, "could not decide equivalence of '" + format_word(a) +
                                           "' and '" + format_word(b) + "'");
}

}  // namespace nhbraid
