#include "cpl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpl/errors.hpp"

namespace cpl {

namespace {

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw UsageError("dimension out of range: " + std::to_string(d));
}

void same_dim(const Point& a, const Point& b) {
  if (a.dim() != b.dim()) throw UsageError("dimension mismatch");
}

std::int64_t floor_mod(std::int64_t a, std::int64_t n) {
  std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

}  // namespace

Point::Point(int d) : d_(d) { check_dim(d); }

Point::Point(std::initializer_list<std::int64_t> coords) : d_(static_cast<int>(coords.size())) {
  check_dim(d_);
  std::copy(coords.begin(), coords.end(), c_.begin());
}

Point Point::operator+(const Point& o) const {
  same_dim(*this, o);
  Point r = *this;
  for (int i = 0; i < d_; ++i) r[i] += o[i];
  return r;
}

Point Point::operator-(const Point& o) const {
  same_dim(*this, o);
  Point r = *this;
  for (int i = 0; i < d_; ++i) r[i] -= o[i];
  return r;
}

Point Point::operator*(std::int64_t k) const {
  Point r = *this;
  for (int i = 0; i < d_; ++i) r[i] *= k;
  return r;
}

Point& Point::operator+=(const Point& o) {
  same_dim(*this, o);
  for (int i = 0; i < d_; ++i) c_[static_cast<std::size_t>(i)] += o[i];
  return *this;
}

std::strong_ordering Point::operator<=>(const Point& o) const {
  if (auto c = d_ <=> o.d_; c != 0) return c;
  for (int i = 0; i < d_; ++i) {
    if (auto c = (*this)[i] <=> o[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

Point Point::unit(int d, int axis, std::int64_t sign) {
  Point p(d);
  p[axis] = sign;
  return p;
}

std::string Point::str() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < d_; ++i) os << (i ? "," : "") << (*this)[i];
  os << ')';
  return os.str();
}

std::int64_t l1_norm(const Point& p) {
  std::int64_t s = 0;
  for (int i = 0; i < p.dim(); ++i) s += std::abs(p[i]);
  return s;
}

std::int64_t linf_norm(const Point& p) {
  std::int64_t s = 0;
  for (int i = 0; i < p.dim(); ++i) s = std::max(s, std::abs(p[i]));
  return s;
}

std::int64_t l1_dist(const Point& a, const Point& b) { return l1_norm(a - b); }
std::int64_t linf_dist(const Point& a, const Point& b) { return linf_norm(a - b); }

bool Box::contains(const Point& p) const {
  if (p.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (p[i] < corner[i] || p[i] >= corner[i] + side) return false;
  }
  return true;
}

std::uint64_t Box::volume() const {
  std::uint64_t v = 1;
  for (int i = 0; i < dim(); ++i) v *= static_cast<std::uint64_t>(side);
  return v;
}

Box linf_ball(const Point& x, double r) {
  if (!(r >= 0)) throw UsageError("linf_ball: negative radius");
  const auto k = static_cast<std::int64_t>(std::floor(r));
  Point c = x;
  for (int i = 0; i < x.dim(); ++i) c[i] -= k;
  return Box{c, 2 * k + 1};
}

std::vector<Box> subboxes(const Box& b, std::int64_t step) {
  if (step <= 0 || b.side % step != 0) throw UsageError("subboxes: step must divide side");
  std::vector<Box> out;
  Box index_box{Point(b.dim()), b.side / step};
  for_each_point(index_box, [&](const Point& t) { out.push_back(Box{b.corner + t * step, step}); });
  return out;
}

Slice::Slice(Point anchor_, std::vector<int> axes_, Box bounds_)
    : anchor(anchor_), axes(std::move(axes_)), bounds(bounds_) {
  std::vector<int> sorted = axes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw UsageError("slice directions must be distinct");
  for (int a : axes) {
    if (a < 0 || a >= anchor.dim()) throw UsageError("slice direction out of range");
  }
}

bool Slice::contains(const Point& p) const {
  if (!bounds.contains(p)) return false;
  for (int i = 0; i < p.dim(); ++i) {
    if (std::find(axes.begin(), axes.end(), i) == axes.end() && p[i] != anchor[i]) return false;
  }
  return true;
}

std::vector<Point> Slice::points() const {
  std::vector<Point> out;
  for (int i = 0; i < anchor.dim(); ++i) {
    if (std::find(axes.begin(), axes.end(), i) == axes.end() &&
        (anchor[i] < bounds.corner[i] || anchor[i] >= bounds.corner[i] + bounds.side))
      return out;
  }
  const int j = static_cast<int>(axes.size());
  Box idx{Point(j), bounds.side};
  for_each_point(idx, [&](const Point& t) {
    Point p = anchor;
    for (int k = 0; k < j; ++k) p[axes[static_cast<std::size_t>(k)]] = bounds.corner[axes[static_cast<std::size_t>(k)]] + t[k];
    out.push_back(p);
  });
  return out;
}

Window::Window(int d, std::int64_t side, bool wrap, std::int64_t low)
    : d_(d), n_(side), wrap_(wrap), low_(low) {
  if (d < 2 || d > kMaxDim) throw UsageError("window dimension must be in [2, 4]");
  if (side < 1) throw UsageError("window side must be positive");
  std::uint64_t total = 1;
  for (int i = 0; i < d; ++i) {
    total *= static_cast<std::uint64_t>(side);
    if (total > (std::uint64_t{1} << 31)) throw UsageError("window too large");
  }
  size_ = static_cast<std::size_t>(total);
  std::size_t s = 1;
  for (int i = d - 1; i >= 0; --i) {
    stride_[static_cast<std::size_t>(i)] = s;
    s *= static_cast<std::size_t>(side);
  }
}

std::size_t Window::index(const Point& p) const {
  if (p.dim() != d_) throw UsageError("dimension mismatch");
  std::size_t idx = 0;
  for (int i = 0; i < d_; ++i) {
    std::int64_t c = p[i] - low_;
    if (wrap_) {
      c = floor_mod(c, n_);
    } else if (c < 0 || c >= n_) {
      return kNoSite;
    }
    idx += static_cast<std::size_t>(c) * stride(i);
  }
  return idx;
}

Point Window::point(std::size_t idx) const {
  Point p(d_);
  for (int i = 0; i < d_; ++i) p[i] = coord(idx, i) + low_;
  return p;
}

bool Window::contains(const Point& p) const { return index(p) != kNoSite; }

Point Window::reduce(const Point& p) const {
  if (!wrap_) return p;
  Point r = p;
  for (int i = 0; i < d_; ++i) r[i] = floor_mod(p[i] - low_, n_) + low_;
  return r;
}

bool Window::covers(const Box& b) const {
  if (b.dim() != d_) return false;
  if (wrap_) return b.side <= n_;
  for (int i = 0; i < d_; ++i) {
    if (b.corner[i] < low_ || b.corner[i] + b.side > low_ + n_) return false;
  }
  return true;
}

std::size_t Window::neighbor(std::size_t idx, int axis, int sign) const {
  const std::size_t s = stride(axis);
  const std::int64_t c = coord(idx, axis);
  if (sign > 0) {
    if (c + 1 < n_) return idx + s;
    return wrap_ ? idx - static_cast<std::size_t>(n_ - 1) * s : kNoSite;
  }
  if (c > 0) return idx - s;
  return wrap_ ? idx + static_cast<std::size_t>(n_ - 1) * s : kNoSite;
}

std::int64_t Window::l1_dist(const Point& a, const Point& b) const {
  if (a.dim() != d_ || b.dim() != d_) throw UsageError("dimension mismatch");
  std::int64_t s = 0;
  for (int i = 0; i < d_; ++i) {
    std::int64_t diff = std::abs(a[i] - b[i]);
    if (wrap_) {
      diff %= n_;
      diff = std::min(diff, n_ - diff);
    }
    s += diff;
  }
  return s;
}

}  // namespace cpl
