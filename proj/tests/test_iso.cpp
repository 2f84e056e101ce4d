#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/iso.hpp"
#include "cpl/rng.hpp"
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

SiteSet all_sites(const Config& c) {
  SiteSet s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.occupied(i)) s.push_back(i);
  }
  return s;
}

// Brute force over every subset with the definition-level boundary.
double brute_min_ratio(const Config& c, std::int64_t floor, std::int64_t cap) {
  const auto occ = oracle::occupied_points(c);
  const std::vector<Point> pts(occ.begin(), occ.end());
  double best = kNoRatio;
  const int d = c.dim();
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << pts.size()); ++m) {
    const auto k = std::popcount(m);
    if (k < floor || k > cap) continue;
    std::set<Point> a;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (m >> i & 1) a.insert(pts[i]);
    }
    best = std::min(best, static_cast<double>(oracle::edge_boundary(c.window(), occ, a)) /
                              std::pow(static_cast<double>(k), (d - 1.0) / d));
  }
  return best;
}

// The illustration ladder with its top level only: L0 = 4, L1 = 36.
struct FullFatSet {
  ScaleLadder lad = ladder_from_levels(4, {{9, 2}, {12, 3}});
  Levels lv{1, 1, false};
  std::int64_t R;
  Config c;
  GoodnessField g;
  FatSet f;

  FullFatSet(std::int64_t R_, std::int64_t side) : R(R_), c(full(Window(2, side, false, -side / 2))) {
    g = classify_good(c, lad, 1.0, 1, false, h_region(lad, lv, R, 2), 4);
    f = build_fat_set(g, lad, lv, R);
  }
};

}  // namespace

TEST_CASE("edge boundary examples") {
  const Window w(2, 6, false);
  const Config c = full(w);
  CHECK(edge_boundary(c, make_site_set(c, {Point{2, 2}})) == 4);
  CHECK(edge_boundary(c, make_site_set(c, {Point{0, 0}})) == 2);
  CHECK(edge_boundary(c, all_sites(c)) == 0);
  std::vector<Point> left;
  for (std::int64_t x = 0; x < 3; ++x)
    for (std::int64_t y = 0; y < 6; ++y) left.push_back(Point{x, y});
  CHECK(edge_boundary(c, make_site_set(c, left)) == 6);
  CHECK(boundary_edges(c, make_site_set(c, left)).size() == 6);

  Config holes = c;
  holes.set(Point{3, 3}, false);
  CHECK(edge_boundary(holes, make_site_set(holes, {Point{2, 3}})) == 3);
  CHECK_THROWS_AS(make_site_set(holes, {Point{3, 3}}), UsageError);
  const std::vector<std::size_t> bad{w.index(Point{3, 3})};
  CHECK_THROWS_AS(edge_boundary(holes, bad), UsageError);

  const Config torus = full(Window(2, 6, true));
  CHECK(edge_boundary(torus, make_site_set(torus, {Point{0, 0}})) == 4);
  CHECK(iso_ratio(4, 0, 2) == kNoRatio);
  CHECK(iso_ratio(8, 4, 2) == doctest::Approx(4.0));
  CHECK(size_floor(48, 0.5) == 7);
  CHECK(size_floor(49, 0.5) == 7);
  CHECK(size_floor(100, 1.0) == 100);
}

TEST_CASE("edge boundary agrees with the definition oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Window w(seed % 2 ? 2 : 3, seed % 2 ? 12 : 5, seed % 3 == 0);
    const Config c = random_config(w, 0.6, seed);
    const auto occ = oracle::occupied_points(c);
    std::set<Point> a;
    SiteSet idx;
    std::size_t k = 0;
    for (const auto& p : occ) {
      if (rng::uniform(seed, rng::kSubset, k++) < 0.4) {
        a.insert(p);
        idx.push_back(w.index(p));
      }
    }
    CHECK(edge_boundary(c, idx) == oracle::edge_boundary(w, occ, a));
  }
}

TEST_CASE("exact minimum on small instances") {
  const Config c2 = full(Window(2, 2, false));
  const Box all{Point{0, 0}, 2};
  const auto single = exact_min_ratio(c2, all, 1, 1);
  CHECK(single.found);
  CHECK(single.ratio == doctest::Approx(2.0));
  const auto pair = exact_min_ratio(c2, all, 1);
  CHECK(pair.ratio == doctest::Approx(std::sqrt(2.0)));
  CHECK(pair.witness.size() == 2);
  CHECK_FALSE(exact_min_ratio(c2, all, 3).found);

  const Config c3 = full(Window(2, 3, false));
  const auto r3 = exact_min_ratio(c3, Box{Point{0, 0}, 3}, 1);
  CHECK(r3.ratio <= 2.0);
  CHECK(r3.ratio == doctest::Approx(3.0 / std::sqrt(3.0)));
  CHECK(r3.subsets == 511);

  const Config c4 = full(Window(2, 4, false));
  const auto r4 = exact_min_ratio(c4, Box{Point{0, 0}, 4}, 1);
  CHECK(r4.ratio == doctest::Approx(4.0 / std::sqrt(8.0)));
  CHECK(edge_boundary(c4, r4.witness) == r4.boundary);

  CHECK_THROWS_AS(exact_min_ratio(full(Window(2, 9, false)), Box{Point{0, 0}, 9}, 1), UsageError);
  CHECK_THROWS_AS(exact_min_ratio(c4, Box{Point{0, 0}, 5}, 1), UsageError);
}

TEST_CASE("exact minimum matches brute force") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const Window w(2, 4, seed % 2 == 0);
    const Config c = random_config(w, 0.7, seed);
    const auto n = static_cast<std::int64_t>(c.count());
    if (n < 2) continue;
    const auto ex = exact_min_ratio(c, Box{Point{0, 0}, 4}, 1);
    CHECK(ex.ratio == doctest::Approx(brute_min_ratio(c, 1, n / 2)));
    CHECK_FALSE(ex.connected_only);
  }
}

TEST_CASE("exact connected enumeration on a path") {
  const Window w(2, 32, false);
  Config c(w, ModelSpec{});
  for (std::int64_t x = 0; x < 30; ++x) c.set(Point{x, 1}, true);
  const auto ex = exact_min_ratio(c, Box{Point{0, 0}, 32}, 1, 15);
  CHECK(ex.connected_only);
  CHECK(ex.subsets == 345);
  CHECK(ex.ratio == doctest::Approx(1.0 / std::sqrt(15.0)));
  CHECK(ex.witness.size() == 15);
}

TEST_CASE("heuristic profile bounds and determinism") {
  const Config c4 = full(Window(2, 4, false));
  const auto sites = all_sites(c4);
  ProfileOptions opt;
  opt.budget = 30;
  const auto rep = heuristic_profile(c4, sites, opt);
  CHECK(rep.min_ratio == doctest::Approx(4.0 / std::sqrt(8.0)));
  CHECK(rep.candidates == rep.records.size());
  CHECK(edge_boundary(c4, rep.argmin) == rep.best.boundary);
  CHECK(static_cast<std::int64_t>(rep.argmin.size()) == rep.best.size);

  opt.budget = 0;
  const auto none = heuristic_profile(c4, sites, opt);
  CHECK(none.candidates == 0);
  CHECK(none.min_ratio == kNoRatio);

  const Window w(2, 40, false, -20);
  const Config c = random_config(w, 0.75, 5);
  const auto cr = ball_component(c, 16);
  ProfileOptions po;
  po.budget = 60;
  po.floor = 4;
  po.seed = 9;
  po.threads = 1;
  const auto a = heuristic_profile(c, cr, po);
  po.threads = 4;
  const auto b = heuristic_profile(c, cr, po);
  CHECK(a.min_ratio == b.min_ratio);
  CHECK(a.argmin == b.argmin);
  CHECK(a.records.size() == b.records.size());
  for (const auto& r : a.records) {
    CHECK(r.size >= 4);
    CHECK(r.size <= static_cast<std::int64_t>(cr.size() / 2));
  }
  CHECK(edge_boundary(c, a.argmin) == a.best.boundary);
}

TEST_CASE("heuristic matches the exact minimum on small instances") {
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Window w(2, 5, false);
    const Config r = random_config(w, 0.8, seed);
    Config c(w, ModelSpec{});
    for (auto site : largest_component(r, std::nullopt).sites) c.set(site, true);
    const auto n = c.count();
    if (n < 4 || n > 24) continue;
    const auto ex = exact_min_ratio(c, Box{Point{0, 0}, 5}, 2);
    ProfileOptions opt;
    opt.floor = 2;
    opt.budget = 90;
    opt.seed = seed;
    const auto h = heuristic_profile(c, all_sites(c), opt);
    CHECK(h.min_ratio >= ex.ratio - 1e-9);
    CHECK(h.min_ratio == doctest::Approx(ex.ratio));
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("heuristic minimum is stable across seeds") {
  const Config c = random_config(Window(2, 97, false, -48), 0.75, 1);
  const auto cr = ball_component(c, 48);
  std::vector<double> mins;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ProfileOptions opt;
    opt.floor = size_floor(48, 0.5);
    opt.budget = 60;
    opt.seed = seed;
    mins.push_back(heuristic_profile(c, cr, opt).min_ratio);
  }
  const double mean = std::accumulate(mins.begin(), mins.end(), 0.0) / static_cast<double>(mins.size());
  for (double m : mins) CHECK(std::abs(m - mean) <= 0.15 * mean);
}

TEST_CASE("reduction map with an isolated component") {
  FullFatSet fs(54, 512);
  const Window& w = fs.c.window();
  Config c(w, ModelSpec{});
  for_each_point(Box{Point{-20, -20}, 41}, [&](const Point& p) { c.set(p, true); });
  FatSet empty = fs.f;
  std::fill(empty.member.begin(), empty.member.end(), 0);
  const ReductionContext ctx(c, empty, 1.0);
  REQUIRE(ctx.c_R() == ctx.c_2R());
  const auto red = ctx.map(ctx.c_R());
  CHECK(red.M.empty());
  CHECK(red.D.empty());
}

TEST_CASE("reduction map on the full lattice") {
  FullFatSet fs(108, 800);
  REQUIRE(fs.f.size() == 81u * 81u);
  const ReductionContext ctx(fs.c, fs.f, 1.0);
  CHECK(ctx.c_R().size() == 217u * 217u);
  CHECK(ctx.c_2R().size() == 433u * 433u);

  const auto empty = ctx.map({});
  CHECK(empty.M.empty());
  CHECK(empty.D.empty());

  const auto red = ctx.map(ctx.c_R());
  CHECK(red.M.size() == 55u * 55u);
  CHECK(red.D.size() == 217u * 217u - 73u * 73u);
  CHECK(ctx.coarse_boundary(red.M) == 220);

  const auto rep = ctx.check(ctx.c_R(), true);
  CHECK(rep.boundary == 4 * 217);
  CHECK(rep.m_boundary == 220);
  CHECK(rep.lower_bound == doctest::Approx(27.5));
  CHECK(rep.boundary_ok);
  CHECK(rep.volume_ok);
  CHECK(rep.coarse_gamma == doctest::Approx(220.0 / 55.0));

  const std::vector<std::size_t> outside{fs.c.window().index(Point{150, 0})};
  CHECK_THROWS_AS(ctx.map(outside), UsageError);
}

TEST_CASE("reduction map agrees with a definition scan") {
  FullFatSet fs(54, 512);
  const Config& c = fs.c;
  const Window& w = c.window();
  const ReductionContext ctx(c, fs.f, 1.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SiteSet a;
    for (auto s : ctx.c_R()) {
      const Point p = w.point(s);
      if (p[0] > 10 * static_cast<std::int64_t>(seed) - 30 && rng::uniform(seed, rng::kSubset, s) < 0.97) a.push_back(s);
    }
    const auto red = map_MA_DA(c, fs.f, a, 1.0);
    std::vector<std::uint8_t> in_a(c.size(), 0), in_2r(c.size(), 0);
    for (auto s : a) in_a[s] = 1;
    for (auto s : ctx.c_2R()) in_2r[s] = 1;
    SiteSet d;
    const std::int64_t rad = 2 * fs.f.Ls;
    for (auto s : a) {
      const Point x = w.point(s);
      bool hit = false;
      for (std::int64_t dx = -rad; dx <= rad && !hit; ++dx) {
        for (std::int64_t dy = -rad; dy <= rad && !hit; ++dy) {
          const auto y = w.index(x + Point{dx, dy});
          hit = y != kNoSite && in_2r[y] && !in_a[y];
        }
      }
      if (hit) d.push_back(s);
    }
    CHECK(red.D == d);
    std::vector<Point> m;
    for (const auto& x : fs.f.members()) {
      bool meets = false;
      for_each_point(Box{x, 4}, [&](const Point& p) { meets = meets || in_a[w.index(p)]; });
      if (meets) m.push_back(x);
    }
    std::sort(m.begin(), m.end());
    auto got = red.M;
    std::sort(got.begin(), got.end());
    CHECK(got == m);
  }
}

TEST_CASE("coarse density boxes") {
  FullFatSet fs(54, 512);
  const auto members = fs.f.members();
  const Box first{fs.f.top_boxes[0], fs.f.Ls};
  std::vector<Point> in_first;
  for (const auto& x : members) {
    if (first.contains(x)) in_first.push_back(x);
  }
  REQUIRE(in_first.size() == 81);
  std::vector<Point> half(in_first.begin(), in_first.begin() + 41);
  auto boxes = coarse_density_boxes(fs.f, half);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0] == fs.f.top_boxes[0]);
  half.pop_back();
  CHECK(coarse_density_boxes(fs.f, half).empty());
  CHECK(coarse_density_boxes(fs.f, members).size() == 9);
  CHECK_THROWS_AS(coarse_density_boxes(fs.f, {Point{1, 1}}), UsageError);
}

TEST_CASE("slice box profile on a full fat set") {
  FullFatSet fs(54, 512);
  const auto prof = slice_box_profile(fs.f, 3);
  CHECK(prof.boxes == 1);
  CHECK(prof.subsets > 0);
  CHECK(prof.min_scaled_boundary > 0);
  CHECK(prof.min_scaled_boundary <= 3.0);
}
