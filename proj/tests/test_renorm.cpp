#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/renorm.hpp"
#include "cpl/samplers.hpp"
#include "oracles.hpp"

using namespace cpl;

namespace {

Config full(const Window& w) { return Config(w, std::vector<std::uint8_t>(w.size(), 1), ModelSpec{}); }

Config random_config(const Window& w, double u, std::uint64_t seed) {
  ModelSpec s;
  s.u = u;
  s.window = w;
  s.seed = seed;
  return sample_bernoulli(s);
}

ScaleLadder fig2_ladder(int levels = 2) {
  std::vector<std::pair<std::int64_t, std::int64_t>> lr{{9, 2}, {12, 3}, {12, 2}};
  lr.resize(static_cast<std::size_t>(levels));
  return ladder_from_levels(4, lr);
}

// Level-0 flags over the G_0 grid of region, with the listed boxes bad.
std::vector<std::uint8_t> flags(const Box& region, std::int64_t L0, const std::vector<Point>& bad) {
  const std::int64_t n = region.side / L0;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n * n), 0);
  for (const auto& p : bad) {
    const Point t = p - region.corner;
    out[static_cast<std::size_t>((t[0] / L0) * n + t[1] / L0)] = 1;
  }
  return out;
}

}  // namespace

TEST_CASE("scale ladder recurrences") {
  const auto lad = build_scale_ladder(9, 2, 8, 1, 4);
  CHECK(lad.l[1] == 36);
  CHECK(lad.r[1] == 4);
  CHECK(4 * lad.r[1] < lad.l[1]);
  CHECK(lad.L[1] == 72);
  const auto k0 = build_scale_ladder(9, 2, 8, 1, 0);
  CHECK(k0.levels() == 1);
  CHECK((k0.l[0] == 9 && k0.r[0] == 2 && k0.L[0] == 8));
  CHECK_THROWS_AS(build_scale_ladder(4, 2, 10, 1, 1), ParameterError);
  // Same recurrence at an admissible l0: l1 = 4 l0, r1 = 2 r0, L1 = l0 L0.
  const auto five = build_scale_ladder(17, 2, 10, 1, 1);
  CHECK((five.l[1] == 68 && five.r[1] == 4 && five.L[1] == 170));
  for (int theta : {1, 2, 3}) {
    const auto g = build_scale_ladder(9, 2, 8, theta, 6);
    for (int k = 1; k < g.levels(); ++k) {
      const auto e = static_cast<std::int64_t>(std::pow(k, theta));
      CHECK(g.l[static_cast<std::size_t>(k)] == 9 * (std::int64_t{1} << (2 * e)));
      CHECK(g.r[static_cast<std::size_t>(k)] == 2 * (std::int64_t{1} << e));
      CHECK(g.L[static_cast<std::size_t>(k)] == g.l[static_cast<std::size_t>(k - 1)] * g.L[static_cast<std::size_t>(k - 1)]);
    }
  }
  const auto huge = build_scale_ladder(9, 2, 8, 2, 40);
  CHECK(huge.overflow);
  CHECK(huge.levels() < 41);
  const auto f2 = fig2_ladder();
  CHECK_FALSE(f2.canonical);
  CHECK(f2.L[1] == 36);
  CHECK_THROWS_AS(ladder_from_levels(4, {{7, 2}}), ParameterError);
}

TEST_CASE("compute_levels") {
  const auto lad = build_scale_ladder(9, 2, 2, 1, 3);
  const auto lv = compute_levels(lad, 1 << 13, 1.0, 2);
  CHECK(lv.s == 0);
  CHECK(lv.r == 0);
  CHECK_THROWS_AS(compute_levels(lad, 100, 1.0, 2), ParameterError);
  // Maximality against exact integer powers.
  using boost::multiprecision::cpp_int;
  const auto small = build_scale_ladder(5, 1, 2, 1, 4);
  for (std::int64_t R : {4096LL, 5000LL, 10000LL, 1000000LL, 200000000LL}) {
    for (int theta : {1, 2, 3}) {
      Levels got;
      try {
        got = compute_levels(small, R, theta, 2);
      } catch (const ParameterError&) {
        CHECK(boost::multiprecision::pow(cpp_int(small.L[0]), 12) > boost::multiprecision::pow(cpp_int(R), theta));
        continue;
      }
      const cpp_int rhs = boost::multiprecision::pow(cpp_int(R), theta);
      CHECK(boost::multiprecision::pow(cpp_int(small.L[static_cast<std::size_t>(got.s)]), 12) <= rhs);
      CHECK(boost::multiprecision::pow(cpp_int(small.L[static_cast<std::size_t>(got.s + 1)]), 12) > rhs);
      CHECK(got.r == got.s / 2);
    }
  }
}

TEST_CASE("level-0 events on constructed configs") {
  const Window w(2, 24, false, -4);
  const Point x{4, 4};
  const Config f = full(w);
  CHECK(event_A(f, x, 4, 1.0));
  CHECK(event_B(f, x, 4, 1.0));
  CHECK_FALSE(event_B(f, x, 4, 0.5));
  const Config e(w, ModelSpec{});
  CHECK_FALSE(event_A(e, x, 4, 1.0));
  CHECK(event_B(e, x, 4, 1.0));
  CHECK_FALSE(event_A_line(e, x, 4, 1.0));

  // An empty hyperplane at row 7 separates the lower tiles from the upper ones.
  Config split = f;
  for (std::int64_t y = -4; y < 20; ++y) split.set(Point{7, y}, false);
  CHECK_FALSE(event_A(split, x, 4, 1.0));
  CHECK_FALSE(oracle::event_A(w, oracle::occupied_points(split), x, 4, 1.0));

  // Isolated sites: S_{L0} is empty.
  Config dust(w, ModelSpec{});
  for (std::int64_t a = -4; a < 20; a += 2) {
    for (std::int64_t b = -4; b < 20; b += 2) dust.set(Point{a, b}, true);
  }
  CHECK(event_B(dust, x, 4, 0.1));
  CHECK_THROWS_AS(event_A(f, Point{16, 16}, 4, 1.0), UsageError);
  CHECK_THROWS_AS(event_A(f, Point{5, 4}, 4, 1.0), UsageError);

  // Central third of the first axis removed from the special component.
  const Window wl(2, 27, false, -9);
  Config hole = full(wl);
  for (std::int64_t t = 3; t < 6; ++t) hole.set(Point{t, 4}, false);
  CHECK(event_A_line(full(wl), Point{0, 0}, 9, 1.0));
  CHECK(event_A(hole, Point{0, 0}, 9, 1.0));
  CHECK_FALSE(event_A_line(hole, Point{0, 0}, 9, 1.0));
}

TEST_CASE("level-0 events agree with the definition oracle") {
  for (int t = 0; t < 40; ++t) {
    const Window w(2, 20, false, 0);
    const Config c = random_config(w, 0.55 + 0.01 * t, 300 + static_cast<std::uint64_t>(t));
    const auto occ = oracle::occupied_points(c);
    const double eta = 0.4 + 0.015 * t;
    for (const Point& x : {Point{0, 0}, Point{4, 8}, Point{12, 4}}) {
      CHECK(event_A(c, x, 4, eta) == oracle::event_A(w, occ, x, 4, eta));
      CHECK(event_B(c, x, 4, eta) == oracle::event_B(w, occ, x, 4, eta));
    }
  }
}

TEST_CASE("classify_good level 0 matches the single-box events") {
  const Window w(2, 40, false);
  const auto lad = fig2_ladder(1);
  for (int t = 0; t < 5; ++t) {
    const Config c = random_config(w, 0.62 + 0.03 * t, 40 + static_cast<std::uint64_t>(t));
    const Box region{Point{0, 0}, 36};
    const auto g1 = classify_good(c, lad, 0.6, 0, false, region, 1);
    const auto g4 = classify_good(c, lad, 0.6, 0, false, region, 4);
    CHECK(g1.levels[0].a_bad == g4.levels[0].a_bad);
    CHECK(g1.levels[0].b_bad == g4.levels[0].b_bad);
    for (std::size_t i = 0; i < g1.levels[0].size(); ++i) {
      const Point x = g1.levels[0].box(i);
      CHECK(static_cast<bool>(g1.levels[0].a_bad[i]) == !event_A(c, x, 4, 0.6));
      CHECK(static_cast<bool>(g1.levels[0].b_bad[i]) == !event_B(c, x, 4, 0.6));
    }
  }
  CHECK_THROWS_AS(classify_good(full(w), lad, 0.6, 0, false, Box{Point{0, 0}, 40}, 1), UsageError);
}

TEST_CASE("recursion: pairs at distance r_{k-1} make the parent bad") {
  const auto lad = fig2_ladder(2);
  const Box region{Point{0, 0}, 36};
  const auto none = std::vector<std::uint8_t>(81, 0);
  CHECK(classify_from_level0(lad, 1, region, none, none).good(1, Point{0, 0}));
  const auto one = flags(region, 4, {Point{16, 16}});
  CHECK(classify_from_level0(lad, 1, region, one, none).good(1, Point{0, 0}));
  const auto near = flags(region, 4, {Point{16, 16}, Point{20, 20}});
  CHECK(classify_from_level0(lad, 1, region, near, near).good(1, Point{0, 0}));
  const auto far = flags(region, 4, {Point{0, 0}, Point{8, 0}});
  const auto g = classify_from_level0(lad, 1, region, far, none);
  CHECK_FALSE(g.good(1, Point{0, 0}));
  CHECK(g.levels[1].a_bad[0]);
  CHECK_FALSE(g.levels[1].b_bad[0]);
  const auto [p, q] = g.levels[1].a_witness[0];
  CHECK(linf_dist(g.levels[0].box(p), g.levels[0].box(q)) >= 2 * 4);
  // One A-bad and one B-bad child far apart: neither recursion fires.
  const auto a1 = flags(region, 4, {Point{0, 0}});
  const auto b1 = flags(region, 4, {Point{32, 32}});
  CHECK(classify_from_level0(lad, 1, region, a1, b1).good(1, Point{0, 0}));
  const auto all = std::vector<std::uint8_t>(81, 1);
  CHECK_FALSE(classify_from_level0(lad, 1, region, all, all).good(1, Point{0, 0}));
}

TEST_CASE("recursion agrees with pair enumeration and is local") {
  const auto lad = fig2_ladder(2);
  const Box region{Point{0, 0}, 72};
  std::mt19937_64 gen(5);
  for (int t = 0; t < 100; ++t) {
    std::bernoulli_distribution bad(0.005 + 0.002 * t);
    std::vector<std::uint8_t> a(18 * 18), b(18 * 18);
    for (auto& v : a) v = bad(gen);
    for (auto& v : b) v = bad(gen);
    const auto g = classify_from_level0(lad, 1, region, a, b);
    for (std::size_t pi = 0; pi < 4; ++pi) {
      const Point parent = g.levels[1].box(pi);
      for (int which = 0; which < 2; ++which) {
        const auto& fl = which == 0 ? a : b;
        std::vector<Point> pts;
        for (std::size_t ci = 0; ci < fl.size(); ++ci) {
          const Point x = g.levels[0].box(ci);
          if (fl[ci] && Box{parent, 36}.contains(x)) pts.push_back(x);
        }
        bool pair = false;
        for (const auto& p : pts) {
          for (const auto& q : pts) pair = pair || linf_dist(p, q) >= 2 * 4;
        }
        CHECK(static_cast<bool>((which == 0 ? g.levels[1].a_bad : g.levels[1].b_bad)[pi]) == pair);
      }
      // Flipping every child flag outside this parent leaves it unchanged.
      auto a2 = a, b2 = b;
      for (std::size_t ci = 0; ci < a2.size(); ++ci) {
        if (!Box{parent, 36}.contains(g.levels[0].box(ci))) {
          a2[ci] ^= 1;
          b2[ci] ^= 1;
        }
      }
      const auto g2 = classify_from_level0(lad, 1, region, a2, b2);
      CHECK(g2.levels[1].bad(pi) == g.levels[1].bad(pi));
    }
  }
}

TEST_CASE("f_j against a 50-digit oracle") {
  CHECK(compute_f_j(0, 2, 1) == 1.0);
  CHECK(compute_f_j(2.0 / 9.0, 2, 1) == doctest::Approx(0.8102).epsilon(1e-4));
  for (int theta : {1, 2}) {
    for (int j : {2, 3, 4}) {
      double prev = 1.0;
      for (double ratio = 0; ratio <= 0.6; ratio += 0.025) {
        const double v = compute_f_j(ratio, j, theta);
        CHECK(std::abs(v - oracle::f_product(ratio, j, theta)) <= 1e-9);
        CHECK(v <= prev);
        prev = v;
        if (j > 2) CHECK(v >= compute_f_j(ratio, j - 1, theta));
      }
    }
  }
  CHECK(compute_f_j(0.7, 2, 1) == 0.0);
  CHECK_THROWS_AS(compute_f_j(0.1, 1, 1), UsageError);
}

TEST_CASE("fat set with no bad boxes") {
  const auto lad = fig2_ladder(2);
  const Levels lv{1, 1, false};
  const std::int64_t R = 54;
  const Window w(2, 512, false, -256);
  const Config c = full(w);
  const Box region = h_region(lad, lv, R, 2);
  const auto g = classify_good(c, lad, 1.0, 1, false, region, 2);
  const auto h = check_event_H(c, lad, lv, R, g);
  CHECK(h.holds);
  const auto f = build_fat_set(g, lad, lv, R);
  CHECK(f.log.empty());
  CHECK(f.top_boxes.size() == 9);
  CHECK(f.size() == 729);
  const auto rep = verify_fat_set(f, lad, g);
  CHECK(rep.passed());
  CHECK(rep.min_density_b == 1.0);
  CHECK(rep.slices_checked == 1);
  CHECK(rep.min_density_c[2] == 1.0);
  const auto sc = special_components(c, f, 4, 1.0);
  CHECK(sc.adjacency_ok);
  for (const auto& s : sc.sites) CHECK(s.size() == 16);

  FatSet adversarial = f;
  for (std::int64_t k = 0; k < 4; ++k)
    adversarial.log.push_back(Deletion{1, Point{0, 0}, 'a', Point{0, 8 * k}, 8});
  CHECK_FALSE(verify_fat_set(adversarial, lad, g).log_ok);
}

TEST_CASE("fat set: a single bad L0-box removes exactly one a-box") {
  const auto lad = fig2_ladder(2);
  const Levels lv{1, 1, false};
  const Box region{Point{0, 0}, 36};
  const auto none = std::vector<std::uint8_t>(81, 0);
  for_each_point(Box{Point{0, 0}, 9}, [&](const Point& t) {
    const auto one = flags(region, 4, {t * 4});
    const auto g = classify_from_level0(lad, 1, region, one, one);
    const auto f = build_fat_set(g, lad, lv, 36);
    REQUIRE(f.log.size() == 1);
    CHECK(f.log[0].kind == 'a');
    CHECK(f.size() >= 81 - 3 * 4);
    CHECK(f.size() == 81 - 4);
    CHECK_FALSE(f.contains(t * 4));
    CHECK(verify_fat_set(f, lad, g).passed());
  });
}

TEST_CASE("fat set on the illustration ladder with hand-placed bad boxes") {
  const auto lad = fig2_ladder(3);
  const Levels lv{2, 2, false};
  const std::int64_t L2 = 432, R = 432;
  const Box region{Point{0, 0}, L2};
  std::vector<Point> bad;
  // L1-box (2,3) is 1-bad: two bad children 4 apart.
  bad.push_back(Point{2 * 36 + 4, 3 * 36 + 4});
  bad.push_back(Point{2 * 36 + 20, 3 * 36 + 4});
  // L1-box (3,3) is 1-bad too; the two bad L1-boxes are adjacent.
  bad.push_back(Point{3 * 36, 3 * 36});
  bad.push_back(Point{3 * 36 + 32, 3 * 36 + 32});
  // Good L1-boxes with single or adjacent bad children, near corners and edges.
  bad.push_back(Point{0, 0});
  bad.push_back(Point{5 * 36 + 32, 7 * 36 + 32});
  bad.push_back(Point{8 * 36 + 12, 11 * 36 + 32});
  bad.push_back(Point{8 * 36 + 16, 11 * 36 + 32});
  bad.push_back(Point{10 * 36 + 4, 10 * 36 + 4});
  std::vector<Point> bbad{Point{10 * 36 + 8, 10 * 36 + 8}, Point{6 * 36 + 16, 16}};
  const auto g = classify_from_level0(lad, 2, region, flags(region, 4, bad), flags(region, 4, bbad));
  REQUIRE(g.good(2, Point{0, 0}));
  CHECK_FALSE(g.good(1, Point{72, 108}));
  CHECK_FALSE(g.good(1, Point{108, 108}));
  const auto f = build_fat_set(g, lad, lv, R);
  const auto rep = verify_fat_set(f, lad, g);
  CHECK(rep.passed());
  for (const auto& v : rep.violations) MESSAGE(v);
  // Coarse connectivity by flood fill over the members in unit spacing.
  std::set<Point> pts;
  for (const auto& p : f.members()) pts.insert(Point{p[0] / 4, p[1] / 4});
  const auto rep_map = oracle::flood_fill(Window(2, 108, false), pts);
  std::set<Point> roots;
  for (const auto& [p, m] : rep_map) roots.insert(m);
  CHECK(roots.size() == 1);
  for (const auto& p : bad) CHECK_FALSE(f.contains(p));
  for (const auto& p : bbad) CHECK_FALSE(f.contains(p));
  const double bound = 108.0 * 108.0 * (1 - 3 * 4.0 / 81) * (1 - 3 * 9.0 / 144);
  CHECK(static_cast<double>(f.size()) >= bound);
  std::map<Point, int> per_parent;
  for (const auto& e : f.log) CHECK(++per_parent[e.parent] <= 3);
}

TEST_CASE("fat set refuses a bad level-r box") {
  const auto lad = fig2_ladder(2);
  const Box region{Point{0, 0}, 36};
  const auto far = flags(region, 4, {Point{0, 0}, Point{8, 0}});
  const auto g = classify_from_level0(lad, 1, region, far, far);
  CHECK_THROWS_AS(build_fat_set(g, lad, Levels{1, 1, false}, 36), UsageError);
}

TEST_CASE("event H reports a bad box with its witness") {
  const auto lad = fig2_ladder(2);
  const Levels lv{1, 1, false};
  const std::int64_t R = 36;
  const Window w(2, 432, false, -216);
  Config c = full(w);
  for_each_point(Box{Point{0, 0}, 4}, [&](const Point& p) { c.set(p, false); });
  for_each_point(Box{Point{20, 20}, 4}, [&](const Point& p) { c.set(p, false); });
  const auto g = classify_good(c, lad, 1.0, 1, false, h_region(lad, lv, R, 2), 2);
  const auto h = check_event_H(c, lad, lv, R, g);
  CHECK_FALSE(h.holds);
  CHECK_FALSE(h.clause_a);
  CHECK(h.clause_b);
  REQUIRE(!h.failures.empty());
  CHECK(h.failures[0].find("A-witness") != std::string::npos);
}

TEST_CASE("special components") {
  const Window w(2, 40, false, -8);
  FatSet f;
  f.L0 = 8;
  f.Ls = 8;
  f.region = Box{Point{0, 0}, 8};
  f.count = 1;
  f.member = {1};
  Config c = full(w);
  for (std::int64_t t = 0; t < 8; ++t) c.set(Point{t, 3}, false);
  CHECK_THROWS_AS(special_components(c, f, 8, 0.4), ContractViolation);
  CHECK_THROWS_AS(special_components(Config(w, ModelSpec{}), f, 8, 0.4), ContractViolation);
}

TEST_CASE("special components connect across adjacent 0-good boxes") {
  const auto lad = ladder_from_levels(16, {{9, 2}});
  const Window w(2, 128, false);
  int pairs = 0;
  for (int t = 0; t < 4; ++t) {
    const Config c = random_config(w, 0.8, 60 + static_cast<std::uint64_t>(t));
    const Box region{Point{0, 0}, 96};
    const auto g = classify_good(c, lad, 0.8, 0, false, region, 2);
    FatSet f;
    f.L0 = 16;
    f.Ls = 16;
    f.region = region;
    f.count = 6;
    for (std::size_t i = 0; i < g.levels[0].size(); ++i) f.member.push_back(!g.levels[0].bad(i));
    const auto sc = special_components(c, f, 16, 0.8);
    CHECK(sc.adjacency_ok);
    const auto occ = oracle::occupied_points(c);
    for (std::size_t i = 0; i < sc.members.size(); ++i) {
      const Point x = sc.members[i];
      for (int a = 0; a < 2; ++a) {
        const Point y = x + Point::unit(2, a) * 16;
        if (!f.contains(y)) continue;
        ++pairs;
        std::set<Point> uni = oracle::in_box(occ, Box{x, 32});
        const auto more = oracle::in_box(occ, Box{y, 32});
        uni.insert(more.begin(), more.end());
        const auto j = static_cast<std::size_t>(std::find(sc.members.begin(), sc.members.end(), y) - sc.members.begin());
        CHECK(oracle::bfs_distance(w, uni, w.point(sc.sites[i].front()), w.point(sc.sites[j].front())) >= 0);
      }
    }
  }
  CHECK(pairs > 0);
}

TEST_CASE("fat set invariants hold on random level-0 flags") {
  std::mt19937_64 gen(17);
  for (int d : {2, 3}) {
    const auto lad = ladder_from_levels(2, {{9, 2}, {12, 3}});
    const Levels lv{1, 1, false};
    const std::int64_t R = 27;
    Point corner(d);
    for (int a = 0; a < d; ++a) corner[a] = -18;
    const Box reg{corner, 54};
    const auto n = static_cast<std::size_t>(std::pow(27, d));
    int built = 0, c_boxes = 0;
    for (int t = 0; t < 60; ++t) {
      // Each L1-box gets bad children inside one random r0-cube per recursion, so every L1-box stays good.
      std::vector<std::uint8_t> a(n, 0), b(n, 0);
      std::uniform_int_distribution<int> pos(0, 7), coin(0, 3);
      for_each_point(Box{Point(d), 3}, [&](const Point& parent) {
        for (auto* fl : {&a, &b}) {
          if (coin(gen) == 0) continue;
          Point base(d);
          for (int k = 0; k < d; ++k) base[k] = parent[k] * 9 + pos(gen);
          for_each_point(Box{base, 2}, [&](const Point& q) {
            if (coin(gen) == 0) return;
            std::size_t idx = 0;
            for (int k = 0; k < d; ++k) idx = idx * 27 + static_cast<std::size_t>(q[k]);
            (*fl)[idx] = 1;
          });
        }
      });
      const auto g = classify_from_level0(lad, 1, reg, a, b);
      ++built;
      const auto f = build_fat_set(g, lad, lv, R);
      const auto rep = verify_fat_set(f, lad, g);
      CHECK(rep.passed());
      for (const auto& v : rep.violations) MESSAGE(v);
      for (const auto& e : f.log) c_boxes += e.kind == 'c';
      for (std::size_t i = 0; i < n; ++i) {
        if (a[i] || b[i]) CHECK_FALSE(f.contains(g.levels[0].box(i)));
      }
    }
    CHECK(built == 60);
    MESSAGE("d=" << d << " c-boxes " << c_boxes);
  }
}
