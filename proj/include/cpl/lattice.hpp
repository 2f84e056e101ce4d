#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

namespace cpl {

inline constexpr int kMaxDim = 4;
inline constexpr std::size_t kNoSite = std::numeric_limits<std::size_t>::max();

// A point of Z^d, 2 <= d <= kMaxDim (d = 1 is allowed for scratch use).
class Point {
 public:
  Point() = default;
  explicit Point(int d);
  Point(std::initializer_list<std::int64_t> coords);

  int dim() const { return d_; }
  std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  Point operator+(const Point& o) const;
  Point operator-(const Point& o) const;
  Point operator*(std::int64_t k) const;
  Point& operator+=(const Point& o);

  bool operator==(const Point& o) const = default;
  std::strong_ordering operator<=>(const Point& o) const;

  static Point unit(int d, int axis, std::int64_t sign = 1);
  std::string str() const;

 private:
  std::array<std::int64_t, kMaxDim> c_{};
  int d_ = 0;
};

std::int64_t l1_norm(const Point& p);
std::int64_t linf_norm(const Point& p);
// Plain Z^d distances; throw UsageError on dimension mismatch.
std::int64_t l1_dist(const Point& a, const Point& b);
std::int64_t linf_dist(const Point& a, const Point& b);

// Cube corner + [0, side)^d.
struct Box {
  Point corner;
  std::int64_t side = 1;

  int dim() const { return corner.dim(); }
  bool contains(const Point& p) const;
  std::uint64_t volume() const;
  bool operator==(const Box& o) const = default;
};

// {y : |x - y|_inf <= floor(r)}.
Box linf_ball(const Point& x, double r);

// Disjoint tiles of side `step` covering b; step must divide b.side.
std::vector<Box> subboxes(const Box& b, std::int64_t step);

// Calls f(point) for every point of b in row-major order (last axis fastest).
template <class F>
void for_each_point(const Box& b, F&& f) {
  const int d = b.dim();
  Point p = b.corner;
  if (b.side <= 0) return;
  while (true) {
    f(static_cast<const Point&>(p));
    int i = d - 1;
    while (i >= 0) {
      if (++p[i] < b.corner[i] + b.side) break;
      p[i] = b.corner[i];
      --i;
    }
    if (i < 0) return;
  }
}

// Lattice points of a box spanned by a few coordinate directions through an anchor.
struct Slice {
  Point anchor;
  std::vector<int> axes;
  Box bounds;

  Slice(Point anchor, std::vector<int> axes, Box bounds);
  bool contains(const Point& p) const;
  std::vector<Point> points() const;
};

// Finite window [low, low + N)^d, optionally a torus.
class Window {
 public:
  Window() = default;
  Window(int d, std::int64_t side, bool wrap, std::int64_t low = 0);

  int dim() const { return d_; }
  std::int64_t side() const { return n_; }
  bool wrap() const { return wrap_; }
  std::int64_t low() const { return low_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

  // Index of p (reduced mod N on a torus); kNoSite when outside a hard window.
  std::size_t index(const Point& p) const;
  Point point(std::size_t idx) const;
  bool contains(const Point& p) const;
  Point reduce(const Point& p) const;
  // Every point of the box is addressable (always true on a torus with side <= N).
  bool covers(const Box& b) const;

  // Coordinate of site idx along axis, in [0, N).
  std::int64_t coord(std::size_t idx, int axis) const {
    return static_cast<std::int64_t>((idx / stride(axis)) % static_cast<std::size_t>(n_));
  }
  // Neighbor idx +/- e_axis; kNoSite across a hard boundary.
  std::size_t neighbor(std::size_t idx, int axis, int sign) const;

  // l1 distance using the shortest image on a torus.
  std::int64_t l1_dist(const Point& a, const Point& b) const;

  bool operator==(const Window& o) const = default;

 private:
  int d_ = 0;
  std::int64_t n_ = 0;
  bool wrap_ = false;
  std::int64_t low_ = 0;
  std::size_t size_ = 0;
  std::array<std::size_t, kMaxDim> stride_{};
};

}  // namespace cpl
