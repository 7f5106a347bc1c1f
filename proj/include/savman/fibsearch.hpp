#pragma once

// Fibonacci search for the maximum of a unimodal function on an integer
// lattice, in one, two and three dimensions.
//
// 1-D: classic discrete Fibonacci bracketing. The bracket [a, a + F(k)] is
// padded past `hi` with -inf so any interval length works.
// 2-D: a 1-D search over the longer side whose objective is the value of a
// whole line, itself found by a 1-D search.
// 3-D: every dimension keeps its own bracket. Each step shrinks the dimension
// with the largest remaining extent by comparing the two interior planes; a
// plane is worth the 2-D maximum over the current box. Stops once every
// extent is <= 1 and scans the remaining corner cells.
//
// For non-unimodal inputs all three return the best point they visited.
// Ties go to the smallest coordinate. Each call memoizes f, and
// `evaluations` counts distinct points evaluated.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>

#include "savman/core.hpp"

namespace savman {

using Coord = std::int64_t;
using Point2 = std::array<Coord, 2>;
using Point3 = std::array<Coord, 3>;

struct Interval {
  Coord lo = 0;
  Coord hi = 0;

  Coord extent() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

using Rect = std::array<Interval, 2>;

// Search box over (bid, fine, budget).
struct Box3 {
  enum Dim : std::size_t { kBid = 0, kFine = 1, kBudget = 2 };
  static constexpr std::array<const char*, 3> kLabels{"bid", "fine", "budget"};

  std::array<Interval, 3> dims;

  Interval& operator[](std::size_t d) { return dims[d]; }
  const Interval& operator[](std::size_t d) const { return dims[d]; }
};

template <class Arg>
struct SearchResult {
  Arg arg{};
  double value = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

inline constexpr std::size_t kDefaultLatticeCap = 1'000'000;

inline std::int64_t fib(int n) {
  std::int64_t a = 0, b = 1;
  for (int i = 0; i < n; ++i) {
    const std::int64_t next = a + b;
    a = b;
    b = next;
  }
  return a;
}

namespace detail {

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

class FibBracket {
 public:
  FibBracket(Coord lo, Coord hi) : hi_(hi), a_(lo) {
    while (fib(k_) < hi - lo) ++k_;
  }

  Coord lower() const { return a_; }
  Coord upper() const { return std::min(a_ + fib(k_), hi_); }
  Coord extent() const { return upper() - a_; }
  bool done() const { return extent() <= 1; }
  bool in_range(Coord x) const { return x <= hi_; }

  std::pair<Coord, Coord> probes() const {
    if (k_ == 3) return {a_ + 1, a_ + 2};
    return {a_ + fib(k_ - 2), a_ + fib(k_ - 1)};
  }

  // value(first probe) < value(second probe): the maximum lies above the first probe.
  void keep_upper() {
    a_ = probes().first;
    --k_;
  }
  // otherwise the smallest maximizer lies at or below the second probe.
  void keep_lower() { --k_; }

 private:
  Coord hi_;
  Coord a_;
  int k_ = 0;
};

template <std::size_t N>
class Memo {
 public:
  using Point = std::array<Coord, N>;

  template <class F>
  double operator()(F& f, const Point& p) {
    auto it = cache_.find(p);
    if (it != cache_.end()) return it->second;
    const double v = static_cast<double>(call(f, p));
    cache_.emplace(p, v);
    return v;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  template <class F>
  static auto call(F& f, const Point& p) {
    return [&]<std::size_t... I>(std::index_sequence<I...>) { return f(p[I]...); }(std::make_index_sequence<N>{});
  }

  std::map<Point, double> cache_;
};

template <class Arg>
void keep_best(Arg& best_arg, double& best_value, bool& have, const Arg& arg, double value) {
  if (!have || value > best_value || (value == best_value && arg < best_arg)) {
    best_arg = arg;
    best_value = value;
    have = true;
  }
}

// Maximizes g over [lo, hi]; returns the best probed argument.
template <class G>
std::pair<Coord, double> fib_max_1d(Coord lo, Coord hi, G&& g) {
  Coord best_arg = lo;
  double best_value = kMinusInf;
  bool have = false;
  FibBracket br(lo, hi);
  auto value = [&](Coord x) {
    if (!br.in_range(x)) return kMinusInf;
    const double v = g(x);
    keep_best(best_arg, best_value, have, x, v);
    return v;
  };
  while (!br.done()) {
    const auto [x1, x2] = br.probes();
    if (value(x1) < value(x2)) {
      br.keep_upper();
    } else {
      br.keep_lower();
    }
  }
  for (Coord x = br.lower(); x <= br.upper(); ++x) value(x);
  return {best_arg, best_value};
}

// 2-D search over `rect` of g(Point2); returns the best visited point.
template <class G>
std::pair<Point2, double> fib_max_2d(const Rect& rect, G&& g) {
  const std::size_t outer = rect[1].extent() > rect[0].extent() ? 1 : 0;
  const std::size_t inner = 1 - outer;
  std::map<Coord, std::pair<Coord, double>> lines;
  auto line = [&](Coord t) {
    auto it = lines.find(t);
    if (it != lines.end()) return it->second.second;
    const auto best = fib_max_1d(rect[inner].lo, rect[inner].hi, [&](Coord s) {
      Point2 p{};
      p[outer] = t;
      p[inner] = s;
      return g(p);
    });
    lines.emplace(t, best);
    return best.second;
  };
  const auto [t, value] = fib_max_1d(rect[outer].lo, rect[outer].hi, line);
  Point2 p{};
  p[outer] = t;
  p[inner] = lines.at(t).first;
  return {p, value};
}

}  // namespace detail

template <class F>
SearchResult<Coord> search_1d(F&& f, Coord lo, Coord hi) {
  detail::Memo<1> memo;
  const auto [arg, value] = detail::fib_max_1d(lo, hi, [&](Coord x) { return memo(f, {x}); });
  return {arg, value, memo.size()};
}

template <class F>
SearchResult<Point2> search_2d(F&& f, const Rect& rect) {
  detail::Memo<2> memo;
  const auto [arg, value] = detail::fib_max_2d(rect, [&](const Point2& p) { return memo(f, p); });
  return {arg, value, memo.size()};
}

template <class F>
SearchResult<Point3> search_3d(F&& f, const Box3& box) {
  detail::Memo<3> memo;
  std::array<detail::FibBracket, 3> br{detail::FibBracket(box[0].lo, box[0].hi),
                                       detail::FibBracket(box[1].lo, box[1].hi),
                                       detail::FibBracket(box[2].lo, box[2].hi)};
  Point3 best_arg{box[0].lo, box[1].lo, box[2].lo};
  double best_value = detail::kMinusInf;
  bool have = false;

  auto plane = [&](std::size_t d, Coord x) {
    if (!br[d].in_range(x)) return detail::kMinusInf;
    const std::size_t u = d == 0 ? 1 : 0;
    const std::size_t v = d == 2 ? 1 : 2;
    const Rect rect{Interval{br[u].lower(), br[u].upper()}, Interval{br[v].lower(), br[v].upper()}};
    const auto [p2, value] = detail::fib_max_2d(rect, [&](const Point2& p) {
      Point3 p3{};
      p3[d] = x;
      p3[u] = p[0];
      p3[v] = p[1];
      return memo(f, p3);
    });
    Point3 p3{};
    p3[d] = x;
    p3[u] = p2[0];
    p3[v] = p2[1];
    detail::keep_best(best_arg, best_value, have, p3, value);
    return value;
  };

  for (;;) {
    std::size_t d = 3;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!br[i].done() && (d == 3 || br[i].extent() > br[d].extent())) d = i;
    }
    if (d == 3) break;
    const auto [x1, x2] = br[d].probes();
    if (plane(d, x1) < plane(d, x2)) {
      br[d].keep_upper();
    } else {
      br[d].keep_lower();
    }
  }

  for (Coord b = br[0].lower(); b <= br[0].upper(); ++b)
    for (Coord fn = br[1].lower(); fn <= br[1].upper(); ++fn)
      for (Coord u = br[2].lower(); u <= br[2].upper(); ++u) {
        const Point3 p{b, fn, u};
        detail::keep_best(best_arg, best_value, have, p, memo(f, p));
      }
  return {best_arg, best_value, memo.size()};
}

/// Exhaustive scan in lexicographic order; the first maximizer wins ties.
template <std::size_t N, class F>
SearchResult<std::array<Coord, N>> brute_force(F&& f, const std::array<Interval, N>& box,
                                               std::size_t cap = kDefaultLatticeCap) {
  std::size_t points = 1;
  for (const auto& iv : box) {
    if (iv.hi < iv.lo) throw Error(Errc::MalformedSpec, "interval with hi < lo");
    const auto n = static_cast<std::size_t>(iv.extent()) + 1;
    if (points > cap / n) throw Error(Errc::LatticeTooLarge, "lattice exceeds cap of " + std::to_string(cap));
    points *= n;
  }
  if (points > cap) throw Error(Errc::LatticeTooLarge, "lattice exceeds cap of " + std::to_string(cap));

  SearchResult<std::array<Coord, N>> result;
  std::array<Coord, N> p{};
  for (std::size_t i = 0; i < N; ++i) p[i] = box[i].lo;
  for (std::size_t visited = 0; visited < points; ++visited) {
    const double v = static_cast<double>(
        [&]<std::size_t... I>(std::index_sequence<I...>) { return f(p[I]...); }(std::make_index_sequence<N>{}));
    if (visited == 0 || v > result.value) {
      result.arg = p;
      result.value = v;
    }
    for (std::size_t i = N; i-- > 0;) {
      if (p[i] < box[i].hi) {
        ++p[i];
        break;
      }
      p[i] = box[i].lo;
    }
  }
  result.evaluations = points;
  return result;
}

template <class F>
SearchResult<Point3> brute_force(F&& f, const Box3& box, std::size_t cap = kDefaultLatticeCap) {
  return brute_force<3>(std::forward<F>(f), box.dims, cap);
}

}  // namespace savman
