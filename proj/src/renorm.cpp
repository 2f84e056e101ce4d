#include "cpl/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/parallel.hpp"
#include "cpl/rng.hpp"
#include "cpl/samplers.hpp"

namespace cpl {

namespace {

bool checked_mul(std::int64_t a, std::int64_t b, std::int64_t& out) { return !__builtin_mul_overflow(a, b, &out); }

bool checked_pow(std::int64_t base, std::int64_t e, std::int64_t& out) {
  out = 1;
  for (std::int64_t i = 0; i < e; ++i) {
    if (!checked_mul(out, base, out)) return false;
  }
  return true;
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

bool on_grid(const Point& x, std::int64_t L) {
  for (int i = 0; i < x.dim(); ++i) {
    if (x[i] % L != 0) return false;
  }
  return true;
}

// Per-tile data over S_{L0}: occupied count, largest volume, one local position
// per component with at least the (3/4) eta L0^d volume.
struct TileInfo {
  std::int64_t s_count = 0;
  std::int64_t largest = 0;
  std::vector<std::uint32_t> large_local;
};

class Level0Evaluator {
 public:
  Level0Evaluator(const Config& c, const Config& s_l0, std::int64_t L0, double eta)
      : c_(c), s_(s_l0), L0_(L0), d_(c.dim()) {
    const double vol = static_cast<double>(ipow(L0, d_));
    large_ = 0.75 * eta * vol;
    cap_ = 1.25 * eta * vol;
  }

  TileInfo tile(const Point& corner, BoxLabeler& bl) const {
    TileInfo t;
    const int k = bl.run(s_.occupancy(), s_.window(), Box{corner, L0_});
    const auto labels = bl.labels();
    const auto vols = bl.volumes();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(k), 0);
    for (std::size_t p = 0; p < labels.size(); ++p) {
      const auto lab = labels[p];
      if (lab < 0 || seen[static_cast<std::size_t>(lab)]) continue;
      seen[static_cast<std::size_t>(lab)] = 1;
      const auto v = vols[static_cast<std::size_t>(lab)];
      t.s_count += v;
      t.largest = std::max<std::int64_t>(t.largest, v);
      if (static_cast<double>(v) >= large_) t.large_local.push_back(static_cast<std::uint32_t>(p));
    }
    return t;
  }

  bool B(std::span<const TileInfo* const> tiles) const {
    for (const auto* t : tiles) {
      if (static_cast<double>(t->s_count) > cap_) return false;
    }
    return true;
  }

  // tiles are ordered by e in {0,1}^d, row-major (last axis fastest).
  bool A(const Point& x, std::span<const TileInfo* const> tiles, BoxLabeler& bl) const {
    for (const auto* t : tiles) {
      if (t->large_local.empty()) return false;
    }
    bl.run(c_.occupancy(), c_.window(), Box{x, 2 * L0_});
    const auto labels = bl.labels();
    std::vector<std::int32_t> common;
    for (std::size_t e = 0; e < tiles.size(); ++e) {
      std::vector<std::int32_t> here;
      for (auto p : tiles[e]->large_local) here.push_back(labels[big_position(e, p)]);
      std::sort(here.begin(), here.end());
      if (e == 0) {
        common = here;
      } else {
        std::vector<std::int32_t> next;
        std::set_intersection(common.begin(), common.end(), here.begin(), here.end(), std::back_inserter(next));
        common.swap(next);
      }
      if (common.empty()) return false;
    }
    return true;
  }

  // Largest S_{L0} component of x + [0, L0)^d meets every central segment.
  bool line_condition(const Point& x, BoxLabeler& bl) const {
    const int k = bl.run(s_.occupancy(), s_.window(), Box{x, L0_});
    if (k == 0) return false;
    const auto vols = bl.volumes();
    const auto best = static_cast<std::int32_t>(std::max_element(vols.begin(), vols.end()) - vols.begin());
    const auto labels = bl.labels();
    const std::int64_t mid = L0_ / 2, lo = L0_ / 3, hi = 2 * L0_ / 3;
    if (mid < lo || mid >= hi) return false;
    for (int i = 0; i < d_; ++i) {
      bool hit = false;
      for (std::int64_t t = lo; t < hi && !hit; ++t) {
        std::size_t pos = 0;
        for (int a = 0; a < d_; ++a) pos = pos * static_cast<std::size_t>(L0_) + static_cast<std::size_t>(a == i ? t : mid);
        hit = labels[pos] == best;
      }
      if (!hit) return false;
    }
    return true;
  }

 private:
  std::size_t big_position(std::size_t e, std::uint32_t local) const {
    std::size_t pos = 0;
    std::size_t rem = local;
    std::array<std::size_t, kMaxDim> c{};
    for (int a = d_ - 1; a >= 0; --a) {
      c[static_cast<std::size_t>(a)] = rem % static_cast<std::size_t>(L0_);
      rem /= static_cast<std::size_t>(L0_);
    }
    for (int a = 0; a < d_; ++a) {
      const std::size_t ea = (e >> (d_ - 1 - a)) & 1;
      pos = pos * static_cast<std::size_t>(2 * L0_) + ea * static_cast<std::size_t>(L0_) + c[static_cast<std::size_t>(a)];
    }
    return pos;
  }

  const Config& c_;
  const Config& s_;
  std::int64_t L0_;
  int d_;
  double large_ = 0, cap_ = 0;
};

void check_level0_box(const Config& c, const Point& x, std::int64_t L0) {
  if (x.dim() != c.dim()) throw UsageError("event: dimension mismatch");
  if (L0 < 1 || !on_grid(x, L0)) throw UsageError("event: x must lie in G_0");
  if (!c.window().covers(Box{x, 2 * L0})) throw UsageError("event: box x + [0, 2 L0)^d outside window");
}

std::vector<const TileInfo*> tiles_at(const Config& c, const Point& x, std::int64_t L0, BoxLabeler& bl,
                                      const Level0Evaluator& ev, std::vector<TileInfo>& store) {
  store.clear();
  for_each_point(Box{Point(c.dim()), 2}, [&](const Point& e) { store.push_back(ev.tile(x + e * L0, bl)); });
  std::vector<const TileInfo*> out;
  for (const auto& t : store) out.push_back(&t);
  return out;
}

std::string witness_str(const LevelGrid& child, std::pair<std::size_t, std::size_t> w) {
  return child.box(w.first).str() + " " + child.box(w.second).str();
}

}  // namespace

ScaleLadder build_scale_ladder(std::int64_t l0, std::int64_t r0, std::int64_t L0, int theta_sc, int k_max) {
  if (l0 < 1 || r0 < 1 || L0 < 1) throw ParameterError("ladder: l0, r0, L0 must be positive");
  if (theta_sc < 1) throw ParameterError("ladder: theta_sc must be a positive integer");
  if (k_max < 0) throw ParameterError("ladder: k_max must be non-negative");
  if (4 * r0 >= l0) throw ParameterError("ladder: 4 r0 < l0 required");
  ScaleLadder lad;
  lad.l0 = l0;
  lad.r0 = r0;
  lad.L0 = L0;
  lad.theta_sc = theta_sc;
  lad.l.push_back(l0);
  lad.r.push_back(r0);
  lad.L.push_back(L0);
  for (int k = 1; k <= k_max; ++k) {
    std::int64_t e = 0, p4 = 0, p2 = 0, lk = 0, rk = 0, Lk = 0;
    const bool ok = checked_pow(k, theta_sc, e) && e < 62 && checked_pow(4, e, p4) && checked_pow(2, e, p2) &&
                    checked_mul(l0, p4, lk) && checked_mul(r0, p2, rk) && checked_mul(lad.l.back(), lad.L.back(), Lk);
    if (!ok) {
      lad.overflow = true;
      break;
    }
    lad.l.push_back(lk);
    lad.r.push_back(rk);
    lad.L.push_back(Lk);
  }
  return lad;
}

ScaleLadder ladder_from_levels(std::int64_t L0, const std::vector<std::pair<std::int64_t, std::int64_t>>& lr) {
  if (L0 < 1 || lr.empty()) throw ParameterError("ladder override: L0 and at least one level required");
  ScaleLadder lad;
  lad.canonical = false;
  lad.L0 = L0;
  lad.l0 = lr[0].first;
  lad.r0 = lr[0].second;
  lad.L.push_back(L0);
  for (std::size_t k = 0; k < lr.size(); ++k) {
    const auto [lk, rk] = lr[k];
    if (lk < 1 || rk < 1 || 4 * rk > lk) throw ParameterError("ladder override: need 1 <= 4 r_k <= l_k at every level");
    lad.l.push_back(lk);
    lad.r.push_back(rk);
    if (k + 1 < lr.size()) {
      std::int64_t next = 0;
      if (!checked_mul(lk, lad.L.back(), next)) throw ParameterError("ladder override: overflow");
      lad.L.push_back(next);
    }
  }
  return lad;
}

bool event_A(const Config& c, const Point& x, std::int64_t L0, double eta) {
  check_level0_box(c, x, L0);
  const Config s = restrict_s_r(c, static_cast<double>(L0));
  const Level0Evaluator ev(c, s, L0, eta);
  BoxLabeler bl;
  std::vector<TileInfo> store;
  const auto tiles = tiles_at(c, x, L0, bl, ev, store);
  return ev.A(x, tiles, bl);
}

bool event_B(const Config& c, const Point& x, std::int64_t L0, double eta) {
  check_level0_box(c, x, L0);
  const Config s = restrict_s_r(c, static_cast<double>(L0));
  const Level0Evaluator ev(c, s, L0, eta);
  BoxLabeler bl;
  std::vector<TileInfo> store;
  return ev.B(tiles_at(c, x, L0, bl, ev, store));
}

bool event_A_line(const Config& c, const Point& x, std::int64_t L0, double eta) {
  check_level0_box(c, x, L0);
  const Config s = restrict_s_r(c, static_cast<double>(L0));
  const Level0Evaluator ev(c, s, L0, eta);
  BoxLabeler bl;
  std::vector<TileInfo> store;
  const auto tiles = tiles_at(c, x, L0, bl, ev, store);
  return ev.A(x, tiles, bl) && ev.line_condition(x, bl);
}

std::size_t LevelGrid::index(const Point& x) const {
  std::size_t idx = 0;
  for (int a = 0; a < x.dim(); ++a) {
    const std::int64_t off = x[a] - corner[a];
    if (off < 0 || off % side != 0 || off / side >= count) return kNoSite;
    idx = idx * static_cast<std::size_t>(count) + static_cast<std::size_t>(off / side);
  }
  return idx;
}

Point LevelGrid::box(std::size_t i) const {
  Point p = corner;
  for (int a = corner.dim() - 1; a >= 0; --a) {
    p[a] += static_cast<std::int64_t>(i % static_cast<std::size_t>(count)) * side;
    i /= static_cast<std::size_t>(count);
  }
  return p;
}

bool GoodnessField::good(int k, const Point& x) const {
  if (k < 0 || k >= static_cast<int>(levels.size())) return false;
  const auto i = levels[static_cast<std::size_t>(k)].index(x);
  return i != kNoSite && !levels[static_cast<std::size_t>(k)].bad(i);
}

GoodnessField classify_from_level0(const ScaleLadder& ladder, int k_max, const Box& region,
                                   std::vector<std::uint8_t> a_bad0, std::vector<std::uint8_t> b_bad0) {
  if (k_max < 0 || k_max > ladder.max_level()) throw UsageError("classify: k_max beyond the ladder");
  const int d = region.dim();
  const std::int64_t Lk = ladder.L[static_cast<std::size_t>(k_max)];
  if (region.side % Lk != 0 || !on_grid(region.corner, Lk))
    throw UsageError("classify: region must be aligned to the top-level grid");
  GoodnessField g;
  LevelGrid base;
  base.corner = region.corner;
  base.side = ladder.L0;
  base.count = region.side / ladder.L0;
  if (a_bad0.size() != static_cast<std::size_t>(ipow(base.count, d)) || b_bad0.size() != a_bad0.size())
    throw UsageError("classify: level-0 flag arrays do not match the region");
  base.a_bad = std::move(a_bad0);
  base.b_bad = std::move(b_bad0);
  base.a_witness.assign(base.size(), {kNoSite, kNoSite});
  base.b_witness = base.a_witness;
  g.levels.push_back(std::move(base));
  for (int k = 1; k <= k_max; ++k) {
    const LevelGrid& child = g.levels.back();
    const std::int64_t lk = ladder.l[static_cast<std::size_t>(k - 1)];
    const std::int64_t rk = ladder.r[static_cast<std::size_t>(k - 1)];
    LevelGrid lev;
    lev.corner = region.corner;
    lev.side = ladder.L[static_cast<std::size_t>(k)];
    lev.count = region.side / lev.side;
    const std::size_t n = static_cast<std::size_t>(ipow(lev.count, d));
    lev.a_bad.assign(n, 0);
    lev.b_bad.assign(n, 0);
    lev.a_witness.assign(n, {kNoSite, kNoSite});
    lev.b_witness = lev.a_witness;
    for (std::size_t i = 0; i < n; ++i) {
      const Point parent = lev.box(i);
      // Two bad children at l-infinity distance >= r_{k-1} exist iff the bad
      // children spread over >= r_{k-1} grid steps along some axis.
      for (int which = 0; which < 2; ++which) {
        const auto& flags = which == 0 ? child.a_bad : child.b_bad;
        std::array<std::int64_t, kMaxDim> lo{}, hi{};
        std::array<std::size_t, kMaxDim> lo_i{}, hi_i{};
        lo.fill(INT64_MAX);
        hi.fill(INT64_MIN);
        bool any = false;
        for_each_point(Box{Point(d), lk}, [&](const Point& t) {
          const auto ci = child.index(parent + t * child.side);
          if (!flags[ci]) return;
          any = true;
          for (int a = 0; a < d; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            if (t[a] < lo[ua]) { lo[ua] = t[a]; lo_i[ua] = ci; }
            if (t[a] > hi[ua]) { hi[ua] = t[a]; hi_i[ua] = ci; }
          }
        });
        if (!any) continue;
        for (int a = 0; a < d; ++a) {
          const auto ua = static_cast<std::size_t>(a);
          if (hi[ua] - lo[ua] >= rk) {
            (which == 0 ? lev.a_bad : lev.b_bad)[i] = 1;
            (which == 0 ? lev.a_witness : lev.b_witness)[i] = {lo_i[ua], hi_i[ua]};
            break;
          }
        }
      }
    }
    g.levels.push_back(std::move(lev));
  }
  return g;
}

GoodnessField classify_good(const Config& c, const ScaleLadder& ladder, double eta, int k_max,
                            bool use_line_variant, const Box& region, int threads) {
  const int d = c.dim();
  if (region.dim() != d) throw UsageError("classify: dimension mismatch");
  const std::int64_t L0 = ladder.L0;
  const std::int64_t n0 = region.side / L0;
  const Window& w = c.window();
  const bool covered = w.wrap() ? (region.side <= w.side() && 2 * L0 <= w.side())
                                : w.covers(Box{region.corner, region.side + L0});
  if (!covered) throw UsageError("classify: window does not cover the region plus an L0 margin");
  const Config s = restrict_s_r(c, static_cast<double>(L0));
  const Level0Evaluator ev(c, s, L0, eta);

  // Tiles over the region plus one extra layer along each axis.
  const std::int64_t nt = n0 + 1;
  const auto ntiles = static_cast<std::size_t>(ipow(nt, d));
  std::vector<TileInfo> tiles(ntiles);
  const auto tile_corner = [&](std::size_t i) {
    Point p = region.corner;
    for (int a = d - 1; a >= 0; --a) {
      p[a] += static_cast<std::int64_t>(i % static_cast<std::size_t>(nt)) * L0;
      i /= static_cast<std::size_t>(nt);
    }
    return p;
  };
  const std::size_t chunks = static_cast<std::size_t>(std::max(1, threads)) * 4;
  parallel_for(chunks, threads, [&](std::size_t ch) {
    BoxLabeler bl;
    for (std::size_t i = ch; i < ntiles; i += chunks) tiles[i] = ev.tile(tile_corner(i), bl);
  });

  const auto n = static_cast<std::size_t>(ipow(n0, d));
  std::vector<std::uint8_t> a_bad(n, 0), b_bad(n, 0);
  parallel_for(chunks, threads, [&](std::size_t ch) {
    BoxLabeler bl;
    std::vector<const TileInfo*> local(static_cast<std::size_t>(1) << d);
    for (std::size_t i = ch; i < n; i += chunks) {
      std::array<std::int64_t, kMaxDim> t{};
      std::size_t rem = i;
      for (int a = d - 1; a >= 0; --a) {
        t[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(n0));
        rem /= static_cast<std::size_t>(n0);
      }
      for (std::size_t e = 0; e < local.size(); ++e) {
        std::size_t ti = 0;
        for (int a = 0; a < d; ++a) {
          const auto ea = static_cast<std::int64_t>((e >> (d - 1 - a)) & 1);
          ti = ti * static_cast<std::size_t>(nt) + static_cast<std::size_t>(t[static_cast<std::size_t>(a)] + ea);
        }
        local[e] = &tiles[ti];
      }
      Point x = region.corner;
      for (int a = 0; a < d; ++a) x[a] += t[static_cast<std::size_t>(a)] * L0;
      bool a_ok = ev.A(x, local, bl);
      if (a_ok && use_line_variant) a_ok = ev.line_condition(x, bl);
      a_bad[i] = !a_ok;
      b_bad[i] = !ev.B(local);
    }
  });
  GoodnessField g = classify_from_level0(ladder, k_max, region, std::move(a_bad), std::move(b_bad));
  g.eta = eta;
  g.line_variant = use_line_variant;
  return g;
}

void write_goodness(std::ostream& os, const GoodnessField& g) {
  os << "cpl-goodness 1 levels=" << g.levels.size() << " eta=" << g.eta << " line=" << (g.line_variant ? 1 : 0)
     << '\n';
  os << "# level corner flag(0 good, A, B, AB) [witness pairs]\n";
  for (std::size_t k = 0; k < g.levels.size(); ++k) {
    const auto& lev = g.levels[k];
    for (std::size_t i = 0; i < lev.size(); ++i) {
      const char* flag = lev.a_bad[i] ? (lev.b_bad[i] ? "AB" : "A") : (lev.b_bad[i] ? "B" : "0");
      os << k << ' ' << lev.box(i).str() << ' ' << flag;
      if (k > 0 && lev.a_bad[i]) os << " A:" << witness_str(g.levels[k - 1], lev.a_witness[i]);
      if (k > 0 && lev.b_bad[i]) os << " B:" << witness_str(g.levels[k - 1], lev.b_witness[i]);
      os << '\n';
    }
  }
}

std::vector<BadEstimate> estimate_bad_probability(const ModelSpec& spec, const ScaleLadder& ladder, double eta,
                                                  int k_max, int replicas, int threads) {
  if (replicas < 1) throw UsageError("estimate_bad_probability: replicas must be positive");
  if (k_max > ladder.max_level()) throw UsageError("estimate_bad_probability: k beyond the ladder");
  const int d = spec.dim();
  const Box region{Point(d), ladder.L[static_cast<std::size_t>(k_max)]};
  std::vector<std::vector<std::uint8_t>> bad(static_cast<std::size_t>(replicas));
  parallel_for(bad.size(), threads, [&](std::size_t j) {
    ModelSpec r = spec;
    r.seed = rng::derive(spec.seed, rng::kReplica, j);
    const Config c = sample(r);
    const auto g = classify_good(c, ladder, eta, k_max, false, region, 1);
    for (int k = 0; k <= k_max; ++k) bad[j].push_back(!g.good(k, Point(d)));
  });
  std::vector<BadEstimate> out;
  for (int k = 0; k <= k_max; ++k) {
    BadEstimate e;
    e.k = k;
    e.replicas = replicas;
    int hits = 0;
    for (const auto& b : bad) hits += b[static_cast<std::size_t>(k)];
    e.value = static_cast<double>(hits) / replicas;
    e.std_error = std::sqrt(e.value * (1 - e.value) / replicas);
    e.envelope = 2.0 * std::pow(2.0, -std::pow(2.0, k));
    out.push_back(e);
  }
  return out;
}

Levels compute_levels(const ScaleLadder& ladder, std::int64_t R, double theta_iso, int d) {
  if (R < 1 || !(theta_iso > 0)) throw ParameterError("levels: R >= 1 and theta_iso > 0 required");
  const long double rhs = static_cast<long double>(theta_iso) * std::log(static_cast<long double>(R));
  const long double tol = 1e-12L * std::max<long double>(1, std::fabs(rhs));
  const auto fits = [&](int k) {
    return 3.0L * d * d * std::log(static_cast<long double>(ladder.L[static_cast<std::size_t>(k)])) <= rhs + tol;
  };
  if (!fits(0)) throw ParameterError("levels: s undefined, R must be at least L0^(3 d^2 / theta_iso)");
  int s = 0;
  while (s + 1 < ladder.levels() && fits(s + 1)) ++s;
  if (s + 1 >= ladder.levels()) throw ParameterError("levels: ladder too short to certify maximality of s");
  Levels lv;
  lv.s = s;
  lv.r = s / 2;
  const long double Lr = static_cast<long double>(ladder.L[static_cast<std::size_t>(lv.r)]);
  if (Lr * Lr > static_cast<long double>(ladder.L0) * static_cast<long double>(ladder.L[static_cast<std::size_t>(s)]))
    throw ContractViolation("levels: L_r^2 <= L0 L_s fails");
  return lv;
}

Box h_region(const ScaleLadder& ladder, const Levels& lv, std::int64_t R, int d) {
  if (lv.r < 0 || lv.r > lv.s || lv.s > ladder.max_level()) throw UsageError("levels outside the ladder");
  const std::int64_t Lr = ladder.L[static_cast<std::size_t>(lv.r)];
  const std::int64_t m = floor_div(3 * R, Lr);
  Point corner(d);
  for (int a = 0; a < d; ++a) corner[a] = -m * Lr;
  return Box{corner, (2 * m + 1) * Lr};
}

EventHResult check_event_H(const Config& c, const ScaleLadder& ladder, const Levels& lv, std::int64_t R,
                           const GoodnessField& field) {
  const int d = c.dim();
  const Window& w = c.window();
  EventHResult res;
  const auto fail = [&](std::string msg) {
    ++res.failure_count;
    if (res.failures.size() < 64) res.failures.push_back(std::move(msg));
  };
  if (static_cast<int>(field.levels.size()) <= lv.r) throw UsageError("event H: goodness field lacks level r");
  const auto& lev = field.levels[static_cast<std::size_t>(lv.r)];
  const std::int64_t Lr = ladder.L[static_cast<std::size_t>(lv.r)];
  const std::int64_t m = floor_div(3 * R, Lr);
  for_each_point(Box{Point(d), 2 * m + 1}, [&](const Point& t) {
    Point z = t * Lr;
    for (int a = 0; a < d; ++a) z[a] -= m * Lr;
    const auto i = lev.index(z);
    if (i == kNoSite) throw UsageError("event H: goodness field does not cover G_r in B(0, 3R)");
    if (lev.bad(i)) {
      res.clause_a = false;
      std::ostringstream os;
      os << "a: z=" << z.str() << " is " << lv.r << "-bad" << (lev.a_bad[i] ? " A" : "") << (lev.b_bad[i] ? " B" : "");
      if (lv.r > 0) {
        const auto& child = field.levels[static_cast<std::size_t>(lv.r - 1)];
        if (lev.a_bad[i]) os << " A-witness " << witness_str(child, lev.a_witness[i]);
        if (lev.b_bad[i]) os << " B-witness " << witness_str(child, lev.b_witness[i]);
      }
      fail(os.str());
    }
  });

  const std::int64_t Ls = ladder.L[static_cast<std::size_t>(lv.s)];
  const std::int64_t q = floor_div(2 * R, Ls);
  const Config sls = restrict_s_r(c, static_cast<double>(Ls));
  BoxLabeler bl;
  for_each_point(Box{Point(d), 2 * q + 1}, [&](const Point& t) {
    Point z = t * Ls;
    for (int a = 0; a < d; ++a) z[a] -= q * Ls;
    Point outer_corner = z, inner_off(d);
    for (int a = 0; a < d; ++a) {
      outer_corner[a] -= 4 * Ls;
      inner_off[a] = 2 * Ls;
    }
    const Box outer{outer_corner, 8 * Ls};
    if (!w.covers(outer)) throw UsageError("event H: window does not cover z + [-4 L_s, 4 L_s)^d");
    bl.run(c.occupancy(), w, outer);
    const auto labels = bl.labels();
    const auto sites = bl.sites();
    std::int32_t seen = -1;
    bool ok = true;
    for_each_point(Box{inner_off, 4 * Ls}, [&](const Point& p) {
      if (!ok) return;
      std::size_t pos = 0;
      for (int a = 0; a < d; ++a) pos = pos * static_cast<std::size_t>(8 * Ls) + static_cast<std::size_t>(p[a]);
      if (!sls.occupied(sites[pos])) return;
      if (seen < 0) seen = labels[pos];
      else if (labels[pos] != seen) ok = false;
    });
    if (!ok) {
      res.clause_b = false;
      fail("b: z=" + z.str() + " has disconnected S_{L_s} sites");
    }
  });
  res.holds = res.clause_a && res.clause_b;
  return res;
}

double compute_f_j(double ratio, int j, int theta_sc) {
  if (!(ratio >= 0) || j < 2) throw UsageError("f_j: ratio >= 0 and j >= 2 required");
  double prod = 1.0;
  for (int i = 0;; ++i) {
    const double ri = ratio * std::pow(2.0, -std::pow(static_cast<double>(i), theta_sc));
    const double term = 3.0 * std::pow(ri, j);
    if (1.0 - term <= 0.0) return 0.0;
    if (1.0 - term > 1.0 - 1e-12) break;
    prod *= 1.0 - term;
  }
  return prod;
}

}  // namespace cpl
