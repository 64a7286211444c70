#pragma once

// Finitely presented cascades: well-founded trees with a least element in
// which every internal node carries countably many ordered children.  A
// schema describes such a tree by an explicit finite prefix of children per
// node plus a formulaic tail: tail child k is the complete cascade of rank
// base + step*k, optionally rewritten by destroy_base + destroy_step*k
// rounds of rank-1 destruction.  This closure is what keeps every operation
// in the library decidable: past the explicit prefix all siblings look alike.
//
// Leaves are addressed by their paths (child indices root-down).  Rewrites
// that regroup the tree (destruction) keep the leaf addressing of the
// original tree via Flattened nodes, so filters produced before and after a
// rewrite live on the same ground set and can be compared.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "casco/ordinal.hpp"

namespace casco {

using Path = std::vector<std::uint32_t>;

inline std::string path_to_string(const Path& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

// sum of entries + length; independent of tree structure.
inline std::uint64_t path_weight(const Path& p) {
  std::uint64_t w = 0;
  for (std::uint32_t e : p) w += static_cast<std::uint64_t>(e) + 1;
  return w;
}

struct TailRule {
  Ordinal base;   // rank of tail child k is base + step*k, before destroys
  Ordinal step;
  std::uint32_t destroy_base = 0;  // destruction rounds: destroy_base + destroy_step*k,
  std::uint32_t destroy_step = 0;  // capped at what the child rank admits

  friend bool operator==(const TailRule& a, const TailRule& b) {
    return a.base == b.base && a.step == b.step && a.destroy_base == b.destroy_base &&
           a.destroy_step == b.destroy_step;
  }
};

class Schema;

namespace detail {
struct SchemaNode;
using NodePtr = std::shared_ptr<const SchemaNode>;
}  // namespace detail

class Schema {
 public:
  enum class Kind { leaf, internal, flattened };

  Schema() = default;  // empty handle; real schemas come from factories

  static Schema leaf();
  static Schema internal(std::vector<Schema> children, std::optional<TailRule> tail);
  static Schema flattened(Schema inner);
  // Canonical complete monotone sequential cascade of the given rank.
  static Schema complete(const Ordinal& rank);
  // complete(rank) after `destroys` rounds of rank-1 destruction.
  static Schema destroyed_complete(const Ordinal& rank, std::uint32_t destroys);

  bool valid() const { return node_ != nullptr; }
  Kind kind() const;
  const Ordinal& rank() const;

  // Internal nodes.
  const std::vector<Schema>& explicit_children() const;
  const std::optional<TailRule>& tail() const;
  bool is_sequential_node() const;  // internal with a tail, or flattened
  Schema child(std::uint64_t n) const;  // materializes tail children

  // Flattened nodes.
  const Schema& inner() const;

  const detail::NodePtr& raw() const { return node_; }

  friend bool operator==(const Schema& a, const Schema& b);
  friend bool operator!=(const Schema& a, const Schema& b) { return !(a == b); }

 private:
  explicit Schema(detail::NodePtr n) : node_(std::move(n)) {}
  detail::NodePtr node_;
};

namespace detail {
struct SchemaNode {
  Schema::Kind kind;
  std::vector<Schema> children;
  std::optional<TailRule> tail;
  Schema inner;  // flattened only
  Ordinal rank;
};
}  // namespace detail

// Rank of tail child k under a rule (after capping destroys).
inline Ordinal tail_child_rank(const TailRule& t, std::uint64_t k) {
  Ordinal r = add_scaled(t.base, t.step, k);
  std::uint64_t m = t.destroy_base + static_cast<std::uint64_t>(t.destroy_step) * k;
  if (m == 0) return r;
  if (!r.is_finite()) return r;  // destruction keeps infinite ranks
  std::uint64_t v = r.finite_value();
  if (v <= 1) return r;
  return Ordinal::nat(m < v - 1 ? v - m : 1);
}

// The stream of tail-child ranks as a finite description.  Affine pieces
// change regime at most once (where the destroy cap starts or stops
// biting), so a bounded scan followed by an affine tail is exact.
inline OrdinalSeq tail_rank_seq(const TailRule& t) {
  // Scan far enough that any regime change driven by the finite offsets is
  // behind us; slopes are constant afterwards.
  std::uint64_t guard = 4;
  std::uint64_t consts = static_cast<std::uint64_t>(t.destroy_base) + t.destroy_step +
                         t.base.finite_part() + t.step.finite_part();
  std::uint64_t scan = consts + guard;
  std::vector<Ordinal> prefix;
  for (std::uint64_t k = 0; k < scan; ++k) prefix.push_back(tail_child_rank(t, k));
  // Tail after the scan: rank(scan + j).
  Ordinal r0 = tail_child_rank(t, scan);
  Ordinal r1 = tail_child_rank(t, scan + 1);
  Ordinal r2 = tail_child_rank(t, scan + 2);
  if (r0 == r1 && r1 == r2) return OrdinalSeq::affine(r0, Ordinal::nat(0), std::move(prefix));
  if (!r0.is_finite()) {
    // infinite ranks: destroys do not bite, sequence is base+step*k itself
    return OrdinalSeq::affine(r0, t.step, std::move(prefix));
  }
  // finite, strictly changing: effective slope = step - destroy_step >= 0
  // (a negative net slope would have been capped to the constant regime).
  std::uint64_t d0 = r1.finite_value() - r0.finite_value();
  if (r1.finite_value() < r0.finite_value() || r2.finite_value() - r1.finite_value() != d0)
    throw internal_fault("tail rank sequence failed to stabilize");
  return OrdinalSeq::affine(r0, Ordinal::nat(d0), std::move(prefix));
}

inline Schema Schema::leaf() {
  static Schema cached{std::make_shared<detail::SchemaNode>(
      detail::SchemaNode{Kind::leaf, {}, std::nullopt, Schema(), Ordinal()})};
  return cached;
}

inline Schema Schema::internal(std::vector<Schema> children, std::optional<TailRule> tail) {
  for (const Schema& c : children)
    if (!c.valid()) throw error("internal(): invalid child schema");
  if (children.empty() && !tail) throw error("internal(): node needs at least one child");
  OrdinalSeq ranks;
  for (const Schema& c : children) ranks.prefix.push_back(c.rank());
  if (tail) {
    OrdinalSeq ts = tail_rank_seq(*tail);
    for (const Ordinal& r : ts.prefix) ranks.prefix.push_back(r);
    ranks.tail = ts.tail;
  }
  Ordinal rk = sup_plus_one(ranks);
  auto n = std::make_shared<detail::SchemaNode>(detail::SchemaNode{
      Kind::internal, std::move(children), std::move(tail), Schema(), std::move(rk)});
  return Schema(detail::NodePtr(std::move(n)));
}

inline Schema Schema::flattened(Schema inner) {
  if (!inner.valid()) throw error("flattened(): invalid inner schema");
  if (inner.rank().is_zero()) throw error("flattened(): inner schema must have rank >= 1");
  auto n = std::make_shared<detail::SchemaNode>(detail::SchemaNode{
      Kind::flattened, {}, std::nullopt, std::move(inner), Ordinal::nat(1)});
  return Schema(detail::NodePtr(std::move(n)));
}

inline Schema Schema::complete(const Ordinal& rank) {
  static std::mutex mu;
  static std::map<std::string, Schema> cache;  // keyed by canonical text
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(rank.to_string());
    if (it != cache.end()) return it->second;
  }
  Schema made;
  if (rank.is_zero()) {
    made = leaf();
  } else if (rank.is_successor()) {
    Ordinal pred = add(rank.limit_part(), Ordinal::nat(rank.finite_part() - 1));
    made = internal({}, TailRule{pred, Ordinal::nat(0)});
  } else {
    // limit: last CNF term w^e*c must have successor exponent e, so that the
    // child ranks base + w^(e-1)*k form an affine stream with limit `rank`.
    const auto& terms = rank.terms();
    const Ordinal& e = terms.back().exp;
    if (!e.is_successor())
      throw error("complete(): rank " + rank.to_string() +
                  " has no affine child-rank stream (limit exponent)");
    Ordinal base;
    for (std::size_t i = 0; i + 1 < terms.size(); ++i)
      base.append_term(terms[i].exp, terms[i].coeff);
    if (terms.back().coeff > 1) base.append_term(e, terms.back().coeff - 1);
    Ordinal epred = add(e.limit_part(), Ordinal::nat(e.finite_part() - 1));
    made = internal({}, TailRule{base, Ordinal::omega_pow(epred)});
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(rank.to_string(), made).first->second;
}

inline Schema Schema::destroyed_complete(const Ordinal& rank, std::uint32_t destroys) {
  if (destroys == 0 || rank <= Ordinal::nat(1)) return complete(rank);
  if (rank == Ordinal::nat(2) || (rank.is_finite() && rank.finite_value() <= destroys + 1)) {
    // Fully collapses: repeated destruction of a finite-rank complete
    // cascade bottoms out at the flattening of the rank-2 stage.
    if (rank.is_finite() && rank.finite_value() > 2)
      return flattened(destroyed_complete(rank, static_cast<std::uint32_t>(
                                                    rank.finite_value() - 2)));
    return flattened(complete(rank));
  }
  if (rank.is_finite()) {
    // rank v > destroys+1: all children (rank v-1 >= 2) get destroyed too
    Ordinal childrank = Ordinal::nat(rank.finite_value() - 1);
    return internal({}, TailRule{childrank, Ordinal::nat(0), destroys, 0});
  }
  if (rank.is_successor()) {
    Ordinal pred = add(rank.limit_part(), Ordinal::nat(rank.finite_part() - 1));
    return internal({}, TailRule{pred, Ordinal::nat(0), destroys, 0});
  }
  // limit rank: children of the canonical complete get destroyed; children
  // of rank < 2 are unaffected and stay in the materialized prefix.
  Schema base = complete(rank);
  const TailRule& t = *base.tail();
  std::vector<Schema> prefix;
  std::uint64_t k = 0;
  while (tail_child_rank(t, k) < Ordinal::nat(2)) {
    prefix.push_back(complete(tail_child_rank(t, k)));
    ++k;
  }
  TailRule rest{add_scaled(t.base, t.step, k), t.step, destroys, 0};
  return internal(std::move(prefix), rest);
}

inline Schema::Kind Schema::kind() const {
  if (!node_) throw error("empty schema handle");
  return node_->kind;
}
inline const Ordinal& Schema::rank() const {
  if (!node_) throw error("empty schema handle");
  return node_->rank;
}
inline const std::vector<Schema>& Schema::explicit_children() const {
  if (kind() != Kind::internal) throw error("explicit_children on non-internal node");
  return node_->children;
}
inline const std::optional<TailRule>& Schema::tail() const {
  if (kind() != Kind::internal) throw error("tail on non-internal node");
  return node_->tail;
}
inline bool Schema::is_sequential_node() const {
  Kind k = kind();
  if (k == Kind::flattened) return true;
  if (k != Kind::internal) return false;
  return node_->tail.has_value();
}
inline const Schema& Schema::inner() const {
  if (kind() != Kind::flattened) throw error("inner on non-flattened node");
  return node_->inner;
}

inline Schema Schema::child(std::uint64_t n) const {
  if (kind() == Kind::flattened)
    throw error("child(): flattened nodes address children by inner leaf paths");
  if (kind() != Kind::internal) throw error("child(): leaf has no children");
  const auto& cs = node_->children;
  if (n < cs.size()) return cs[n];
  if (!node_->tail) throw error("child(): index past finite child list");
  std::uint64_t k = n - cs.size();
  const TailRule& t = *node_->tail;
  Ordinal r = add_scaled(t.base, t.step, k);
  std::uint64_t m = t.destroy_base + static_cast<std::uint64_t>(t.destroy_step) * k;
  if (m > 0xffffffffull) throw error("child(): destroy count overflow");
  return destroyed_complete(r, static_cast<std::uint32_t>(m));
}

inline bool operator==(const Schema& a, const Schema& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  if (a.node_->kind != b.node_->kind) return false;
  switch (a.node_->kind) {
    case Schema::Kind::leaf:
      return true;
    case Schema::Kind::flattened:
      return a.node_->inner == b.node_->inner;
    case Schema::Kind::internal: {
      if (a.node_->tail.has_value() != b.node_->tail.has_value()) return false;
      if (a.node_->tail && !(*a.node_->tail == *b.node_->tail)) return false;
      const auto& ca = a.node_->children;
      const auto& cb = b.node_->children;
      if (ca.size() != cb.size()) return false;
      for (std::size_t i = 0; i < ca.size(); ++i)
        if (!(ca[i] == cb[i])) return false;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Structural queries
// ---------------------------------------------------------------------------

// Subcascade rooted at an inner node, following child indices.  Paths that
// descend into a flattened region address inner nodes of that region.
inline Schema subcascade_up(const Schema& s, const Path& at) {
  Schema cur = s;
  for (std::size_t i = 0; i < at.size(); ++i) {
    if (cur.kind() == Schema::Kind::flattened) {
      // inside the flattened region the original structure remains
      cur = cur.inner();
    }
    if (cur.kind() != Schema::Kind::internal)
      throw error("subcascade_up: path leaves the tree at " + path_to_string(at));
    cur = cur.child(at[i]);
  }
  return cur;
}

inline Ordinal rank_at(const Schema& s, const Path& at) { return subcascade_up(s, at).rank(); }

// Minimal leaf weight in a schema's leaf space.  Entry costs grow with the
// child index, so the scan over an infinite tail can stop once the entry
// cost alone reaches the best complete path seen.
inline std::uint64_t min_leaf_weight(const Schema& s) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return 0;
    case Schema::Kind::flattened:
      return min_leaf_weight(s.inner());
    case Schema::Kind::internal: {
      std::uint64_t best = ~0ull;
      auto consider = [&](std::uint64_t k) {
        if (k + 1 >= best) return false;
        best = std::min(best, k + 1 + min_leaf_weight(s.child(k)));
        return true;
      };
      std::uint64_t nexp = s.explicit_children().size();
      for (std::uint64_t k = 0; k < nexp; ++k) consider(k);
      if (s.tail())
        for (std::uint64_t k = nexp;; ++k)
          if (!consider(k)) break;
      if (best == ~0ull) throw error("min_leaf_weight: node without leaves");
      return best;
    }
  }
  return 0;
}

// Is `p` a leaf path of s?
inline bool is_leaf_path(const Schema& s, const Path& p, std::size_t from = 0) {
  if (from == p.size()) return s.kind() == Schema::Kind::leaf;
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return false;
    case Schema::Kind::flattened:
      return is_leaf_path(s.inner(), p, from);
    case Schema::Kind::internal: {
      if (!s.tail() && p[from] >= s.explicit_children().size()) return false;
      return is_leaf_path(s.child(p[from]), p, from + 1);
    }
  }
  return false;
}

// Threshold class of a leaf: the largest d with the leaf in the canonical
// base set of level d.  At internal levels that is the child index; across
// a flattened region it is the weight of the remaining path.
inline std::uint64_t theta(const Schema& s, const Path& p, std::size_t from = 0) {
  constexpr std::uint64_t inf = ~0ull;
  switch (s.kind()) {
    case Schema::Kind::leaf:
      if (from != p.size()) throw error("theta: path too long");
      return inf;
    case Schema::Kind::flattened: {
      Path rest(p.begin() + static_cast<std::ptrdiff_t>(from), p.end());
      if (!is_leaf_path(s.inner(), rest)) throw error("theta: not a leaf path");
      return path_weight(rest);
    }
    case Schema::Kind::internal: {
      if (from == p.size()) throw error("theta: path too short");
      std::uint64_t idx = p[from];
      std::uint64_t deeper = theta(s.child(idx), p, from + 1);
      return std::min(idx, deeper);
    }
  }
  return inf;
}

// ---------------------------------------------------------------------------
// Monotonicity
// ---------------------------------------------------------------------------

// A cascade is monotone when every node's children can be (and here, are)
// listed with non-decreasing ranks.  Returns a path to an offending node
// when not.
inline std::optional<Path> monotone_counterexample(const Schema& s) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return std::nullopt;
    case Schema::Kind::flattened:
      return std::nullopt;  // all children are leaves
    case Schema::Kind::internal: {
      OrdinalSeq ranks;
      for (const Schema& c : s.explicit_children()) ranks.prefix.push_back(c.rank());
      if (s.tail()) {
        OrdinalSeq ts = tail_rank_seq(*s.tail());
        for (const Ordinal& r : ts.prefix) ranks.prefix.push_back(r);
        ranks.tail = ts.tail;
      }
      if (!ranks.non_decreasing()) return Path{};
      for (std::size_t i = 0; i < s.explicit_children().size(); ++i) {
        auto sub = monotone_counterexample(s.explicit_children()[i]);
        if (sub) {
          Path p{static_cast<std::uint32_t>(i)};
          p.insert(p.end(), sub->begin(), sub->end());
          return p;
        }
      }
      // tail children are (destroyed) completes, which are monotone
      return std::nullopt;
    }
  }
  return std::nullopt;
}

inline bool is_monotone(const Schema& s) { return !monotone_counterexample(s).has_value(); }

// Every internal node countably branching?
inline bool is_sequential(const Schema& s) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return true;
    case Schema::Kind::flattened:
      return true;  // children = inner leaves, countably many
    case Schema::Kind::internal: {
      if (!s.tail()) return false;
      for (const Schema& c : s.explicit_children())
        if (!is_sequential(c)) return false;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Confluence (grafting onto leaves)
// ---------------------------------------------------------------------------

// (n) |> V_n : attach the n-th element of the stream to the n-th leaf of the
// rank-1 cascade.  The stream is an explicit prefix plus a complete-cascade
// tail, which is exactly an internal node description.
inline Schema confluence_seq(std::vector<Schema> prefix, std::optional<TailRule> tail) {
  return Schema::internal(std::move(prefix), std::move(tail));
}

namespace detail {
inline Schema graft_rec(const Schema& s, const Ordinal& default_rank,
                        const std::map<Path, Schema>& overrides, Path& at) {
  // override lookup is by full leaf path
  switch (s.kind()) {
    case Schema::Kind::leaf: {
      auto it = overrides.find(at);
      if (it != overrides.end()) return it->second;
      return Schema::complete(default_rank);
    }
    case Schema::Kind::flattened:
      throw error("graft: cannot graft below a flattened node");
    case Schema::Kind::internal: {
      std::vector<Schema> children;
      std::optional<TailRule> tail = s.tail();
      if (tail) {
        if (tail->destroy_base || tail->destroy_step)
          throw error("graft: cannot graft below a destroyed tail");
        // Any override whose next index lands in the tail forces that child
        // to be materialized first.
        std::uint64_t need = s.explicit_children().size();
        for (const auto& [p, g] : overrides) {
          (void)g;
          if (p.size() > at.size() && std::equal(at.begin(), at.end(), p.begin()))
            need = std::max(need, static_cast<std::uint64_t>(p[at.size()]) + 1);
        }
        std::uint64_t base_count = s.explicit_children().size();
        for (std::uint64_t n = 0; n < need; ++n) {
          at.push_back(static_cast<std::uint32_t>(n));
          children.push_back(graft_rec(s.child(n), default_rank, overrides, at));
          at.pop_back();
        }
        std::uint64_t k = need - base_count;  // consumed tail children
        // Remaining tail: complete(base+step*j) grafted uniformly with
        // complete(default) = complete(default + base + step*j).
        TailRule nt{add(default_rank, add_scaled(tail->base, tail->step, k)), tail->step};
        return Schema::internal(std::move(children), nt);
      }
      for (std::uint64_t n = 0; n < s.explicit_children().size(); ++n) {
        at.push_back(static_cast<std::uint32_t>(n));
        children.push_back(graft_rec(s.child(n), default_rank, overrides, at));
        at.pop_back();
      }
      return Schema::internal(std::move(children), std::nullopt);
    }
  }
  throw error("graft: unreachable");
}
}  // namespace detail

// W |> V_w with a uniform complete default and finitely many explicit
// exceptions addressed by leaf path.  Leaves turn into the grafted roots;
// the part of W above them is unchanged.
inline Schema graft(const Schema& w, const Ordinal& default_rank,
                    const std::map<Path, Schema>& overrides = {}) {
  for (const auto& [p, g] : overrides) {
    if (!is_leaf_path(w, p)) throw error("graft: override at non-leaf path " + path_to_string(p));
    if (!g.valid()) throw error("graft: invalid override schema");
  }
  Path at;
  return detail::graft_rec(w, default_rank, overrides, at);
}

// ---------------------------------------------------------------------------
// Finite truncation
// ---------------------------------------------------------------------------

struct FiniteTruncation {
  Schema schema;
  std::uint32_t width = 0;
  std::vector<Path> leaves;  // ambient leaf paths, lexicographic order
};

inline constexpr std::size_t kTruncationLeafCap = 20000;

namespace detail {
inline void truncate_rec(const Schema& s, std::uint32_t width, Path& at,
                         std::vector<Path>& out) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      if (out.size() >= kTruncationLeafCap)
        throw error("truncate: leaf cap exceeded (" + std::to_string(kTruncationLeafCap) + ")");
      out.push_back(at);
      return;
    case Schema::Kind::flattened:
      // children are the inner leaves; the truncated inner supplies them
      truncate_rec(s.inner(), width, at, out);
      return;
    case Schema::Kind::internal: {
      std::uint64_t count = width;
      if (!s.tail())
        count = std::min<std::uint64_t>(count, s.explicit_children().size());
      for (std::uint64_t n = 0; n < count; ++n) {
        at.push_back(static_cast<std::uint32_t>(n));
        truncate_rec(s.child(n), width, at, out);
        at.pop_back();
      }
      return;
    }
  }
}
}  // namespace detail

inline FiniteTruncation truncate(const Schema& s, std::uint32_t width) {
  if (width == 0) throw error("truncate: width must be >= 1");
  FiniteTruncation t;
  t.schema = s;
  t.width = width;
  Path at;
  detail::truncate_rec(s, width, at, t.leaves);
  return t;
}

// ---------------------------------------------------------------------------
// Text format
//
//   (leaf)
//   (complete rank R)
//   (node CHILD... (tail base R step R [destroy N N]))
//   (flat SCHEMA)
//   (conf (ranks affine base R step R) CHILD...)   [input sugar]
//
// R is an ordinal in the w^a*c+... syntax.
// ---------------------------------------------------------------------------

namespace detail {

struct SexprParser {
  std::string_view s;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\n' || s[i] == '\t' || s[i] == '\r')) ++i;
  }
  void expect(char c) {
    skip_ws();
    if (i >= s.size() || s[i] != c)
      throw parse_error(std::string("expected '") + c + "' in schema", i);
    ++i;
  }
  bool peek(char c) {
    skip_ws();
    return i < s.size() && s[i] == c;
  }
  std::string word() {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    if (b == i) throw parse_error("expected word in schema", i);
    return std::string(s.substr(b, i - b));
  }
  // ordinal atom: may contain balanced parentheses, ends at whitespace or an
  // unbalanced ')'
  Ordinal ordinal_atom() {
    skip_ws();
    std::size_t b = i;
    int depth = 0;
    while (i < s.size()) {
      char c = s[i];
      if (c == '(') {
        ++depth;
      } else if (c == ')') {
        if (depth == 0) break;
        --depth;
      } else if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
        if (depth == 0) break;
      }
      ++i;
    }
    if (b == i) throw parse_error("expected ordinal in schema", i);
    return parse_ordinal(s.substr(b, i - b));
  }
  std::uint32_t nat_atom() {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (b == i) throw parse_error("expected number in schema", i);
    return static_cast<std::uint32_t>(std::stoul(std::string(s.substr(b, i - b))));
  }

  Schema parse_schema() {
    expect('(');
    std::string head = word();
    if (head == "leaf") {
      expect(')');
      return Schema::leaf();
    }
    if (head == "complete") {
      skip_ws();
      // optional "rank" keyword
      std::size_t save = i;
      if (i < s.size() && s[i] == 'r') {
        std::string kw = word();
        if (kw != "rank") i = save;
      }
      Ordinal r = ordinal_atom();
      expect(')');
      return Schema::complete(r);
    }
    if (head == "flat") {
      Schema in = parse_schema();
      expect(')');
      return Schema::flattened(in);
    }
    if (head == "node" || head == "conf") {
      std::vector<Schema> children;
      std::optional<TailRule> tail;
      if (head == "conf") tail = parse_conf_ranks();
      while (true) {
        skip_ws();
        if (peek(')')) break;
        // lookahead: "(tail ..." vs child schema
        std::size_t save = i;
        expect('(');
        std::string w = word();
        i = save;
        if (w == "tail") {
          tail = parse_tail();
        } else {
          children.push_back(parse_schema());
        }
      }
      expect(')');
      return Schema::internal(std::move(children), std::move(tail));
    }
    throw parse_error("unknown schema form '" + head + "'", i);
  }

  TailRule parse_tail() {
    expect('(');
    if (word() != "tail") throw parse_error("expected tail", i);
    TailRule t;
    bool saw_base = false, saw_step = false;
    while (!peek(')')) {
      std::string kw = word();
      if (kw == "base") {
        t.base = ordinal_atom();
        saw_base = true;
      } else if (kw == "step") {
        t.step = ordinal_atom();
        saw_step = true;
      } else if (kw == "destroy") {
        t.destroy_base = nat_atom();
        t.destroy_step = nat_atom();
      } else {
        throw parse_error("unknown tail keyword '" + kw + "'", i);
      }
    }
    expect(')');
    if (!saw_base || !saw_step) throw parse_error("tail needs base and step", i);
    return t;
  }

  TailRule parse_conf_ranks() {
    expect('(');
    if (word() != "ranks") throw parse_error("expected ranks in conf", i);
    if (word() != "affine") throw parse_error("expected affine rank rule", i);
    TailRule t;
    while (!peek(')')) {
      std::string kw = word();
      if (kw == "base")
        t.base = ordinal_atom();
      else if (kw == "step")
        t.step = ordinal_atom();
      else
        throw parse_error("unknown ranks keyword '" + kw + "'", i);
    }
    expect(')');
    return t;
  }
};

inline void print_schema_rec(const Schema& s, std::ostream& os) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      os << "(leaf)";
      return;
    case Schema::Kind::flattened:
      os << "(flat ";
      print_schema_rec(s.inner(), os);
      os << ")";
      return;
    case Schema::Kind::internal: {
      if (s == Schema::complete(s.rank())) {
        os << "(complete rank " << s.rank().to_string() << ")";
        return;
      }
      os << "(node";
      for (const Schema& c : s.explicit_children()) {
        os << " ";
        print_schema_rec(c, os);
      }
      if (s.tail()) {
        const TailRule& t = *s.tail();
        os << " (tail base " << t.base.to_string() << " step " << t.step.to_string();
        if (t.destroy_base || t.destroy_step)
          os << " destroy " << t.destroy_base << " " << t.destroy_step;
        os << ")";
      }
      os << ")";
      return;
    }
  }
}

}  // namespace detail

inline Schema parse_schema(std::string_view text) {
  detail::SexprParser p{text};
  Schema s = p.parse_schema();
  p.skip_ws();
  if (p.i != text.size()) throw parse_error("trailing input after schema", p.i);
  return s;
}

inline std::string print_schema(const Schema& s) {
  std::ostringstream os;
  detail::print_schema_rec(s, os);
  return os.str();
}

}  // namespace casco
