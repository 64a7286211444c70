#pragma once

// Exact ordinal arithmetic in Cantor normal form, for ordinals below
// epsilon_0.  An Ordinal is a sum  w^e1*c1 + ... + w^ek*ck  with strictly
// decreasing exponents (themselves ordinals) and positive coefficients;
// the empty sum is 0.  Equality is structural, which makes the
// representation canonical.

#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace casco {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when two independent computations of the same value disagree.
struct internal_fault : error {
  using error::error;
};

struct parse_error : error {
  std::size_t pos;
  parse_error(const std::string& what, std::size_t at)
      : error(what + " (at offset " + std::to_string(at) + ")"), pos(at) {}
};

class Ordinal {
 public:
  struct Term;

  Ordinal() = default;

  static Ordinal nat(std::uint64_t n);
  static Ordinal omega();
  // w^exp * coeff as a single term.
  static Ordinal omega_pow(const Ordinal& exp, std::uint64_t coeff = 1);

  bool is_zero() const { return terms_.empty(); }
  bool is_finite() const;
  // Value when finite; throws otherwise.
  std::uint64_t finite_value() const;
  bool is_limit() const;      // limit ordinal (> 0, no trailing finite part)
  bool is_successor() const;  // has a trailing finite part

  const std::vector<Term>& terms() const { return terms_; }

  // Trailing finite part n where a = l + n with l either 0 or a limit.
  std::uint64_t finite_part() const;
  // The l above.
  Ordinal limit_part() const;

  friend bool operator==(const Ordinal& a, const Ordinal& b);
  friend bool operator!=(const Ordinal& a, const Ordinal& b) { return !(a == b); }
  friend bool operator<(const Ordinal& a, const Ordinal& b);
  friend bool operator<=(const Ordinal& a, const Ordinal& b) { return !(b < a); }
  friend bool operator>(const Ordinal& a, const Ordinal& b) { return b < a; }
  friend bool operator>=(const Ordinal& a, const Ordinal& b) { return !(a < b); }

  std::string to_string() const;
  friend std::ostream& operator<<(std::ostream& os, const Ordinal& a) {
    return os << a.to_string();
  }

  // Internal use by arithmetic below; keeps terms in strict CNF order.
  void append_term(Ordinal exp, std::uint64_t coeff);

 private:
  std::vector<Term> terms_;
};

struct Ordinal::Term {
  Ordinal exp;
  std::uint64_t coeff = 0;
};

enum class ordering { less, equal, greater };

inline ordering compare(const Ordinal& a, const Ordinal& b);

inline bool operator==(const Ordinal& a, const Ordinal& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    if (a.terms_[i].coeff != b.terms_[i].coeff) return false;
    if (!(a.terms_[i].exp == b.terms_[i].exp)) return false;
  }
  return true;
}

inline bool operator<(const Ordinal& a, const Ordinal& b) {
  return compare(a, b) == ordering::less;
}

inline ordering compare(const Ordinal& a, const Ordinal& b) {
  const auto& ta = a.terms();
  const auto& tb = b.terms();
  for (std::size_t i = 0;; ++i) {
    if (i == ta.size() && i == tb.size()) return ordering::equal;
    if (i == ta.size()) return ordering::less;
    if (i == tb.size()) return ordering::greater;
    ordering e = compare(ta[i].exp, tb[i].exp);
    if (e != ordering::equal) return e;
    if (ta[i].coeff != tb[i].coeff)
      return ta[i].coeff < tb[i].coeff ? ordering::less : ordering::greater;
  }
}

inline void Ordinal::append_term(Ordinal exp, std::uint64_t coeff) {
  if (coeff == 0) throw error("ordinal term with zero coefficient");
  if (!terms_.empty() && !(exp < terms_.back().exp))
    throw error("ordinal terms out of CNF order");
  terms_.push_back(Term{std::move(exp), coeff});
}

inline Ordinal Ordinal::nat(std::uint64_t n) {
  Ordinal a;
  if (n > 0) a.terms_.push_back(Term{Ordinal(), n});
  return a;
}

inline Ordinal Ordinal::omega() { return omega_pow(nat(1)); }

inline Ordinal Ordinal::omega_pow(const Ordinal& exp, std::uint64_t coeff) {
  Ordinal a;
  if (coeff > 0) a.terms_.push_back(Term{exp, coeff});
  return a;
}

inline bool Ordinal::is_finite() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].exp.is_zero());
}

inline std::uint64_t Ordinal::finite_value() const {
  if (!is_finite()) throw error("finite_value of infinite ordinal " + to_string());
  return terms_.empty() ? 0 : terms_[0].coeff;
}

inline std::uint64_t Ordinal::finite_part() const {
  if (!terms_.empty() && terms_.back().exp.is_zero()) return terms_.back().coeff;
  return 0;
}

inline Ordinal Ordinal::limit_part() const {
  Ordinal a;
  for (const Term& t : terms_)
    if (!t.exp.is_zero()) a.terms_.push_back(t);
  return a;
}

inline bool Ordinal::is_successor() const { return finite_part() > 0; }
inline bool Ordinal::is_limit() const { return !is_zero() && finite_part() == 0; }

// Ordinal sum with the usual left absorption: 1 + w = w, w + 1 = w+1.
inline Ordinal add(const Ordinal& a, const Ordinal& b) {
  if (b.is_zero()) return a;
  const Ordinal& lead = b.terms()[0].exp;
  Ordinal r;
  for (const auto& t : a.terms()) {
    ordering c = compare(t.exp, lead);
    if (c == ordering::greater) {
      r.append_term(t.exp, t.coeff);
    } else if (c == ordering::equal) {
      r.append_term(t.exp, t.coeff + b.terms()[0].coeff);
      for (std::size_t i = 1; i < b.terms().size(); ++i)
        r.append_term(b.terms()[i].exp, b.terms()[i].coeff);
      return r;
    } else {
      break;  // absorbed
    }
  }
  for (const auto& t : b.terms()) r.append_term(t.exp, t.coeff);
  return r;
}

inline Ordinal add(const Ordinal& a, std::uint64_t n) { return add(a, Ordinal::nat(n)); }

// The paper's -1+a: a-1 for finite a, a itself for infinite a.  Rejects 0.
inline Ordinal minus_one_plus(const Ordinal& a) {
  if (a.is_zero()) throw error("minus_one_plus requires a >= 1");
  if (!a.is_finite()) return a;
  return Ordinal::nat(a.finite_value() - 1);
}

// a + step*n for natural n (step repeated n times; exact by CNF rules).
inline Ordinal add_scaled(const Ordinal& a, const Ordinal& step, std::uint64_t n) {
  if (step.is_zero() || n == 0) return a;
  // step*n: multiply the leading coefficient, keep the tail once; this is
  // exactly iterated addition collapsed.
  Ordinal sn;
  const auto& ts = step.terms();
  sn.append_term(ts[0].exp, ts[0].coeff * n);
  if (n >= 1)
    for (std::size_t i = 1; i < ts.size(); ++i) sn.append_term(ts[i].exp, ts[i].coeff);
  return add(a, sn);
}

// Least ordinal strictly above every  base + step*n :  base + step*w.
// For step = w^e*c + ..., step*w = w^(e+1).
inline Ordinal affine_limit(const Ordinal& base, const Ordinal& step) {
  if (step.is_zero()) throw error("affine_limit of a constant sequence");
  Ordinal bump = Ordinal::omega_pow(add(step.terms()[0].exp, 1));
  return add(base, bump);
}

// A rank stream with a finite description: explicit prefix, then optionally
// the affine tail  base + step*k  (k counted from the end of the prefix).
// step == 0 means a constant infinite tail.
struct OrdinalSeq {
  std::vector<Ordinal> prefix;
  struct Tail {
    Ordinal base;
    Ordinal step;  // may be 0
  };
  std::optional<Tail> tail;

  static OrdinalSeq finite(std::vector<Ordinal> xs) { return {std::move(xs), std::nullopt}; }
  static OrdinalSeq affine(Ordinal base, Ordinal step, std::vector<Ordinal> prefix = {}) {
    return {std::move(prefix), Tail{std::move(base), std::move(step)}};
  }

  bool infinite() const { return tail.has_value(); }

  Ordinal at(std::size_t n) const {
    if (n < prefix.size()) return prefix[n];
    if (!tail) throw error("OrdinalSeq index past end");
    return add_scaled(tail->base, tail->step, n - prefix.size());
  }

  bool non_decreasing() const {
    for (std::size_t i = 0; i + 1 < prefix.size(); ++i)
      if (prefix[i + 1] < prefix[i]) return false;
    if (tail && !prefix.empty() && tail->base < prefix.back()) return false;
    return true;  // affine tails with step >= 0 are non-decreasing
  }
};

// Least ordinal strictly greater than every element of the stream.
// Rejects empty finite streams (a rank needs at least one child there).
inline Ordinal sup_plus_one(const OrdinalSeq& seq) {
  Ordinal best;  // least strict upper bound found so far
  bool have = false;
  auto consider = [&](const Ordinal& bound) {
    if (!have || best < bound) best = bound;
    have = true;
  };
  for (const Ordinal& x : seq.prefix) consider(add(x, 1));
  if (seq.tail) {
    if (seq.tail->step.is_zero())
      consider(add(seq.tail->base, 1));
    else
      consider(affine_limit(seq.tail->base, seq.tail->step));
  }
  if (!have) throw error("sup_plus_one of an empty stream");
  return best;
}

// ---------------------------------------------------------------------------
// Text syntax:  0, 5, w, w*3, w^2*3+w+4, w^(w+1)*2+1
// ---------------------------------------------------------------------------

inline std::string Ordinal::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const Term& t : terms_) {
    if (!first) os << "+";
    first = false;
    if (t.exp.is_zero()) {
      os << t.coeff;
      continue;
    }
    os << "w";
    if (!(t.exp == Ordinal::nat(1))) {
      if ((t.exp.is_finite() && t.exp.terms().size() == 1) || t.exp == Ordinal::omega())
        os << "^" << t.exp.to_string();
      else
        os << "^(" << t.exp.to_string() << ")";
    }
    if (t.coeff != 1) os << "*" << t.coeff;
  }
  return os.str();
}

namespace detail {

struct OrdinalParser {
  std::string_view s;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  std::uint64_t number() {
    skip_ws();
    if (i >= s.size() || s[i] < '0' || s[i] > '9')
      throw parse_error("expected number in ordinal", i);
    std::uint64_t v = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      v = v * 10 + static_cast<std::uint64_t>(s[i] - '0');
      ++i;
    }
    return v;
  }

  Ordinal parse_sum() {
    Ordinal acc = parse_term();
    while (true) {
      skip_ws();
      if (!eat('+')) break;
      acc = add(acc, parse_term());
    }
    return acc;
  }

  Ordinal parse_term() {
    skip_ws();
    if (i < s.size() && (s[i] == 'w' || s[i] == 'W')) {
      ++i;
      Ordinal exp = Ordinal::nat(1);
      if (eat('^')) {
        skip_ws();
        if (eat('(')) {
          exp = parse_sum();
          if (!eat(')')) throw parse_error("expected ')' in ordinal exponent", i);
        } else {
          exp = parse_term();
        }
      }
      std::uint64_t coeff = 1;
      if (eat('*')) coeff = number();
      if (coeff == 0) throw parse_error("zero coefficient in ordinal", i);
      return Ordinal::omega_pow(exp, coeff);
    }
    return Ordinal::nat(number());
  }
};

}  // namespace detail

inline Ordinal parse_ordinal(std::string_view text) {
  detail::OrdinalParser p{text};
  Ordinal a = p.parse_sum();
  p.skip_ws();
  if (p.i != text.size()) throw parse_error("trailing input after ordinal", p.i);
  return a;
}

}  // namespace casco
