#include <doctest.h>

#include <random>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/samplers.hpp"
#include "oracles.hpp"

using namespace cpl;

namespace {

Config from_points(const Window& w, const std::vector<Point>& pts) {
  Config c(w, ModelSpec{});
  for (const auto& p : pts) c.set(p, true);
  return c;
}

Config full(const Window& w) { return Config(w, std::vector<std::uint8_t>(w.size(), 1), ModelSpec{}); }

Config random_config(const Window& w, double u, std::uint64_t seed) {
  ModelSpec s;
  s.u = u;
  s.window = w;
  s.seed = seed;
  return sample_bernoulli(s);
}

}  // namespace

TEST_CASE("label_components examples") {
  const Window w(2, 4, false);
  const auto lab = label_components(full(w));
  REQUIRE(lab.components.size() == 1);
  CHECK(lab.components[0].volume == 16);
  CHECK(label_components(Config(w, ModelSpec{})).components.empty());
  std::vector<Point> checker;
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) {
      if ((x + y) % 2 == 0) checker.push_back(Point{x, y});
    }
  }
  CHECK(label_components(from_points(w, checker)).components.size() == checker.size());
}

TEST_CASE("label_components agrees with flood fill") {
  for (int t = 0; t < 60; ++t) {
    const bool wrap = t % 2;
    const int d = t % 3 == 0 ? 3 : 2;
    const Window w(d, d == 3 ? 6 : 16, wrap);
    const Config c = random_config(w, 0.3 + 0.01 * t, static_cast<std::uint64_t>(t));
    const auto lab = label_components(c);
    const auto rep = oracle::flood_fill(w, oracle::occupied_points(c));
    std::size_t total = 0;
    for (const auto& st : lab.components) total += st.volume;
    CHECK(total == c.count());
    for (const auto& [p, m] : rep) CHECK(lab.label(w.index(p)) == static_cast<std::int64_t>(w.index(m)));
    if (!wrap) {
      for (std::size_t ci = 0; ci < lab.components.size(); ++ci) {
        std::vector<Point> pts;
        for (auto s : lab.members(ci)) pts.push_back(w.point(s));
        CHECK(lab.components[ci].diameter == oracle::l1_diameter(pts));
      }
    }
  }
}

TEST_CASE("restrict_s_r") {
  const Window w(2, 12, false);
  const Config c = random_config(w, 0.5, 3);
  CHECK(restrict_s_r(c, 0) == c);
  CHECK(restrict_s_r(from_points(w, {Point{3, 3}}), 1).count() == 0);
  std::vector<Point> seg;
  for (int i = 0; i < 5; ++i) seg.push_back(Point{2, 1 + i});
  CHECK(oracle::l1_diameter(seg) == 4);
  CHECK(restrict_s_r(from_points(w, seg), 4).count() == 5);
  CHECK(restrict_s_r(from_points(w, seg), 5).count() == 0);
  for (double r = 0; r < 10; r += 1) {
    const auto a = restrict_s_r(c, r + 1), b = restrict_s_r(c, r);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK((!a.occupancy()[i] || b.occupancy()[i]));
  }
}

TEST_CASE("wrapped diameters: exact below the limit, bounds above") {
  const Window w(2, 80, true);
  const Config c = random_config(w, 0.75, 8);
  const auto lab = label_components(c);
  for (std::size_t ci = 0; ci < lab.components.size(); ++ci) {
    const auto& st = lab.components[ci];
    if (st.volume <= 300) {
      CHECK(st.diameter_exact);
      CHECK(st.diameter == pairwise_l1_diameter(w, lab.members(ci)));
    } else if (!st.diameter_exact) {
      const auto exact = pairwise_l1_diameter(w, lab.members(ci));
      CHECK(st.diameter <= exact);
      CHECK(exact <= st.diameter_upper);
    }
  }
}

TEST_CASE("largest_component") {
  const Window w(2, 10, false);
  const auto all = largest_component(full(w), std::nullopt);
  CHECK(all.volume == 100);
  CHECK(all.unique);
  std::vector<Point> segs;
  for (int i = 0; i < 3; ++i) segs.push_back(Point{0, i});
  for (int i = 0; i < 5; ++i) segs.push_back(Point{4, i});
  const auto lc = largest_component(from_points(w, segs), std::nullopt);
  CHECK(lc.volume == 5);
  CHECK(lc.unique);
  CHECK(lc.contains(w.index(Point{4, 0})));
  std::vector<Point> ties;
  for (int i = 0; i < 3; ++i) ties.insert(ties.end(), {Point{0, i}, Point{5, i}});
  const auto tie = largest_component(from_points(w, ties), std::nullopt);
  CHECK(tie.volume == 3);
  CHECK_FALSE(tie.unique);
  CHECK(tie.id == w.index(Point{0, 0}));
  CHECK(largest_component(Config(w, ModelSpec{}), std::nullopt).empty);
  const Config rc = random_config(w, 0.55, 4);
  const auto big = largest_component(rc, std::nullopt);
  for (const auto& st : label_components(rc).components) CHECK(st.volume <= big.volume);
}

TEST_CASE("chemical distance") {
  const Window w(2, 8, false);
  const Config f = full(w);
  for (int t = 0; t < 20; ++t) {
    const Point a{t % 8, (3 * t) % 8}, b{(5 * t + 1) % 8, (7 * t) % 8};
    CHECK(chemical_distance(f, a, b).value == l1_dist(a, b));
  }
  CHECK(chemical_distance(from_points(w, {Point{0, 0}, Point{5, 5}}), Point{0, 0}, Point{5, 5}).infinite());
  // U-shaped corridor: two 5-site arms joined by a 5-site base.
  std::vector<Point> u;
  for (int i = 0; i < 5; ++i) u.insert(u.end(), {Point{i, 0}, Point{i, 4}});
  for (int j = 1; j < 4; ++j) u.push_back(Point{4, j});
  const Config uc = from_points(w, u);
  CHECK(oracle::bfs_distance(w, oracle::occupied_points(uc), Point{0, 0}, Point{0, 4}) == 12);
  CHECK(chemical_distance(uc, Point{0, 0}, Point{0, 4}).value == 12);
  CHECK_THROWS_AS(chemical_distance(uc, Point{1, 1}, Point{0, 0}), UsageError);
}

TEST_CASE("chemical distance dominates l1 and agrees with oracle") {
  for (int t = 0; t < 20; ++t) {
    const Window w(2, 12, t % 2);
    const Config c = random_config(w, 0.65, 100 + static_cast<std::uint64_t>(t));
    const auto pts = oracle::occupied_points(c);
    const std::vector<Point> v(pts.begin(), pts.end());
    for (std::size_t k = 0; k + 7 < v.size(); k += 7) {
      const auto r = chemical_distance(c, v[k], v[k + 7]);
      const auto o = oracle::bfs_distance(w, pts, v[k], v[k + 7]);
      CHECK(r.infinite() == (o < 0));
      if (!r.infinite()) {
        CHECK(*r.value == o);
        CHECK(*r.value >= w.l1_dist(v[k], v[k + 7]));
      }
    }
  }
}

TEST_CASE("A3, A4 and local uniqueness predicates") {
  const Window w(2, 41, false, -20);
  const Config f = full(w);
  for (bool b : check_A3(f, 5)) CHECK(b);
  for (bool b : check_A3(Config(w, ModelSpec{}), 5)) CHECK_FALSE(b);
  CHECK(check_A4(f, 8, 4).holds);
  CHECK(check_A4(f, 8, 4).max_ratio == doctest::Approx(4.0));
  const auto lu = check_local_uniqueness(f, 8);
  CHECK(lu.exists);
  CHECK(lu.unique);
  const auto le = check_local_uniqueness(Config(w, ModelSpec{}), 8);
  CHECK_FALSE(le.exists);
  CHECK(le.unique);
  // Two parallel lines crossing B(0, 2R), never joined inside it.
  std::vector<Point> lines;
  for (int x = -20; x <= 20; ++x) lines.insert(lines.end(), {Point{x, -3}, Point{x, 3}});
  const auto two = check_local_uniqueness(from_points(w, lines), 8);
  CHECK(two.exists);
  CHECK_FALSE(two.unique);
  CHECK_THROWS_AS(check_local_uniqueness(f, 15), UsageError);
}

TEST_CASE("A3 and A4 on supercritical bernoulli") {
  int ok = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const Config c = random_config(Window(2, 256, true, -128), 0.7, 900 + static_cast<std::uint64_t>(r));
    const auto a3 = check_A3(c, 64);
    ok += std::all_of(a3.begin(), a3.end(), [](bool b) { return b; });
  }
  CHECK(static_cast<double>(ok) / reps >= 0.95);
}

TEST_CASE("A4 diameter matches all-pairs BFS oracle") {
  const Window w(2, 24, false, -12);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Config c = random_config(w, 0.62, 300 + seed);
    const auto lc = largest_component(c, std::nullopt);
    const std::set<Point> s = oracle::occupied_points(c);
    const Box ball = linf_ball(Point(2), 6.0);
    std::vector<Point> t;
    for (auto i : lc.sites) {
      if (ball.contains(w.point(i))) t.push_back(w.point(i));
    }
    std::int64_t worst = 0;
    for (const auto& x : t) {
      for (const auto& y : t) worst = std::max(worst, oracle::bfs_distance(w, s, x, y));
    }
    const auto res = check_A4(c, 6, 1.0);
    CHECK(res.max_ratio == doctest::Approx(static_cast<double>(worst) / 6.0));
    CHECK(res.holds == (worst <= 6));
  }
}

TEST_CASE("box labeler matches flood fill on the box") {
  const Window w(2, 20, true);
  const Config c = random_config(w, 0.6, 5);
  BoxLabeler bl;
  const Box b{Point{15, 15}, 8};
  const int k = bl.run(c.occupancy(), w, b);
  std::set<Point> inside;
  for_each_point(b, [&](const Point& p) {
    if (c.occupied(p)) inside.insert(p);
  });
  const Window local(2, 1000, false, -500);
  const auto rep = oracle::flood_fill(local, inside);
  std::set<Point> reps;
  for (const auto& [p, m] : rep) reps.insert(m);
  CHECK(static_cast<std::size_t>(k) == reps.size());
}
