#include <doctest.h>

#include <random>
#include <set>

#include "cpl/errors.hpp"
#include "cpl/lattice.hpp"

using namespace cpl;

TEST_CASE("l1_dist examples") {
  CHECK(l1_dist(Point{0, 0}, Point{0, 0}) == 0);
  CHECK(l1_dist(Point{0, 0}, Point{3, -4}) == 7);
  const Window w(2, 10, true);
  CHECK(w.l1_dist(Point{0, 0}, Point{9, 0}) == 1);
  CHECK_THROWS_AS(l1_dist(Point{0, 0}, Point{0, 0, 0}), UsageError);
}

TEST_CASE("l1_dist is a metric") {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> coord(-20, 20);
  const Window torus(3, 16, true);
  for (int t = 0; t < 500; ++t) {
    Point a{coord(gen), coord(gen), coord(gen)}, b{coord(gen), coord(gen), coord(gen)},
        c{coord(gen), coord(gen), coord(gen)};
    CHECK(l1_dist(a, b) >= 0);
    CHECK(l1_dist(a, b) == l1_dist(b, a));
    CHECK(l1_dist(a, c) <= l1_dist(a, b) + l1_dist(b, c));
    CHECK(torus.l1_dist(a, c) <= torus.l1_dist(a, b) + torus.l1_dist(b, c));
    CHECK(torus.l1_dist(a, b) == torus.l1_dist(b, a));
    CHECK((torus.l1_dist(a, a) == 0));
  }
}

TEST_CASE("linf_ball examples and counts") {
  CHECK(linf_ball(Point{0, 0}, 0).volume() == 1);
  CHECK(linf_ball(Point{0, 0}, 1.9).volume() == 9);
  const Box b = linf_ball(Point{5, 5}, 2);
  CHECK(b.volume() == 25);
  CHECK(b.corner == Point{3, 3});
  for (double r : {0.0, 0.5, 1.0, 2.7, 4.0}) {
    const Point x{1, -2, 3};
    const Box ball = linf_ball(x, r);
    std::uint64_t n = 0;
    for_each_point(ball, [&](const Point& p) {
      CHECK(linf_dist(p, x) <= static_cast<std::int64_t>(r));
      ++n;
    });
    const auto k = 2 * static_cast<std::uint64_t>(r) + 1;
    CHECK(n == k * k * k);
  }
}

TEST_CASE("subboxes partition the box") {
  CHECK(subboxes(Box{Point{0, 0}, 8}, 4).size() == 4);
  const Box b4{Point{2, 3}, 4};
  const auto one = subboxes(b4, 4);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == b4);
  const Box b12{Point{0, 0, 0}, 12};
  const auto tiles = subboxes(b12, 3);
  CHECK(tiles.size() == 64);
  std::set<Point> seen;
  for (const auto& t : tiles) {
    for_each_point(t, [&](const Point& p) {
      CHECK(b12.contains(p));
      CHECK(seen.insert(p).second);
    });
  }
  CHECK(seen.size() == b12.volume());
  CHECK_THROWS_AS(subboxes(Box{Point{0, 0}, 10}, 3), UsageError);
}

TEST_CASE("window indexing round trip and wrap") {
  const Window w(3, 5, false, -2);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w.index(w.point(i)) == i);
  CHECK(w.index(Point{3, 0, 0}) == kNoSite);
  const Window t(2, 6, true);
  CHECK(t.index(Point{-1, 7}) == t.index(Point{5, 1}));
  CHECK(t.reduce(Point{-1, 7}) == Point{5, 1});
  CHECK(t.neighbor(t.index(Point{5, 0}), 0, +1) == t.index(Point{0, 0}));
  CHECK(w.neighbor(w.index(Point{2, 0, 0}), 0, +1) == kNoSite);
}

TEST_CASE("slice points") {
  const Slice s(Point{1, 2, 3}, {0, 2}, Box{Point{0, 0, 0}, 4});
  const auto pts = s.points();
  CHECK(pts.size() == 16);
  for (const auto& p : pts) {
    CHECK(p[1] == 2);
    CHECK(s.contains(p));
  }
  CHECK_THROWS_AS(Slice(Point{0, 0}, {1, 1}, Box{Point{0, 0}, 2}), UsageError);
}
