#include "cpl/iso.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/parallel.hpp"
#include "cpl/rng.hpp"

namespace cpl {

namespace {

constexpr std::uint64_t kConnectedLimit = 200'000'000;

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

SiteSet normalized(const Config& c, std::span<const std::size_t> a) {
  SiteSet s(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  for (auto v : s) {
    if (v >= c.size() || !c.occupied(v)) throw UsageError("site set: site outside S");
  }
  return s;
}

// Ground-set graph: local indices, ground neighbours, S-degree in the whole window.
struct Ground {
  int d = 0;
  std::vector<std::size_t> sites;
  std::vector<std::int32_t> nbr;  // 2d slots per site, -1 when not a ground site
  std::vector<std::int32_t> deg_s;

  Ground(const Config& c, std::span<const std::size_t> ground) : d(c.dim()), sites(normalized(c, ground)) {
    const Window& w = c.window();
    std::vector<std::int32_t> pos(w.size(), -1);
    for (std::size_t i = 0; i < sites.size(); ++i) pos[sites[i]] = static_cast<std::int32_t>(i);
    nbr.assign(sites.size() * static_cast<std::size_t>(2 * d), -1);
    deg_s.assign(sites.size(), 0);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      for (int a = 0; a < d; ++a) {
        for (int s = 0; s < 2; ++s) {
          const auto y = w.neighbor(sites[i], a, s ? 1 : -1);
          if (y == kNoSite || !c.occupied(y)) continue;
          ++deg_s[i];
          nbr[i * static_cast<std::size_t>(2 * d) + static_cast<std::size_t>(2 * a + s)] = pos[y];
        }
      }
    }
  }
  std::size_t size() const { return sites.size(); }
  std::span<const std::int32_t> nbrs(std::size_t i) const {
    return std::span(nbr).subspan(i * static_cast<std::size_t>(2 * d), static_cast<std::size_t>(2 * d));
  }
};

// A subset of the ground set with incremental boundary bookkeeping.
class Subset {
 public:
  explicit Subset(const Ground& g) : g_(g), in_(g.size(), 0), nin_(g.size(), 0) {}

  std::int64_t add_delta(std::size_t v) const { return g_.deg_s[v] - 2 * nin_[v]; }
  std::int64_t remove_delta(std::size_t v) const { return 2 * nin_[v] - g_.deg_s[v]; }
  void add(std::size_t v) {
    b_ += add_delta(v);
    in_[v] = 1;
    ++k_;
    for (auto u : g_.nbrs(v)) {
      if (u >= 0) ++nin_[static_cast<std::size_t>(u)];
    }
  }
  void remove(std::size_t v) {
    b_ += remove_delta(v);
    in_[v] = 0;
    --k_;
    for (auto u : g_.nbrs(v)) {
      if (u >= 0) --nin_[static_cast<std::size_t>(u)];
    }
  }
  bool in(std::size_t v) const { return in_[v] != 0; }
  std::int32_t nin(std::size_t v) const { return nin_[v]; }
  std::int64_t boundary() const { return b_; }
  std::int64_t size() const { return k_; }
  SiteSet sites() const {
    SiteSet s;
    for (std::size_t i = 0; i < in_.size(); ++i) {
      if (in_[i]) s.push_back(g_.sites[i]);
    }
    return s;
  }

 private:
  const Ground& g_;
  std::vector<std::uint8_t> in_;
  std::vector<std::int32_t> nin_;
  std::int64_t b_ = 0, k_ = 0;
};

// BFS order inside the ground set from `start`; layer_end[t] = sites within distance t.
void ground_bfs(const Ground& g, std::size_t start, std::vector<std::size_t>& order, std::vector<std::size_t>& layer_end) {
  std::vector<std::int32_t> dist(g.size(), -1);
  order.assign(1, start);
  layer_end.clear();
  dist[start] = 0;
  for (std::size_t h = 0; h < order.size(); ++h) {
    const auto v = order[h];
    for (auto u : g.nbrs(v)) {
      if (u >= 0 && dist[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = dist[v] + 1;
        order.push_back(static_cast<std::size_t>(u));
      }
    }
  }
  for (std::size_t h = 0; h < order.size(); ++h) {
    if (h + 1 == order.size() || dist[order[h + 1]] != dist[order[h]]) layer_end.push_back(h + 1);
  }
}

// Second eigenvector of (I + P) / 2 for the walk operator P restricted to the ground set.
std::vector<double> fiedler(const Ground& g, std::uint64_t seed, bool& converged) {
  const std::size_t n = g.size();
  const double inv = 1.0 / (2.0 * g.d);
  std::vector<std::uint32_t> start(n + 1, 0), adj;
  std::vector<double> hold(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto u : g.nbrs(i)) {
      if (u >= 0) adj.push_back(static_cast<std::uint32_t>(u));
    }
    start[i + 1] = static_cast<std::uint32_t>(adj.size());
    hold[i] = 0.5 + 0.5 * (1.0 - (start[i + 1] - start[i]) * inv);
  }
  std::vector<double> v(n), next(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng::uniform(seed, rng::kIsoSeed, i) - 0.5;
  const auto project = [&](std::vector<double>& x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double norm = 0;
    for (auto& e : x) {
      e -= mean;
      norm += e * e;
    }
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (auto& e : x) e /= norm;
    }
  };
  project(v);
  converged = false;
  for (int it = 0; it < 10000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (auto k = start[i]; k < start[i + 1]; ++k) acc += v[adj[k]];
      next[i] = hold[i] * v[i] + 0.5 * inv * acc;
    }
    project(next);
    double diff = 0;
    for (std::size_t i = 0; i < n; ++i) diff += (next[i] - v[i]) * (next[i] - v[i]);
    v.swap(next);
    if (std::sqrt(diff) < 1e-8) {
      converged = true;
      break;
    }
  }
  return v;
}

// Pieces cut off by a single ground edge: the subtree side of every DFS-tree bridge,
// as (ratio, root) pairs sorted by ratio, admissible sizes only.
struct BridgePieces {
  std::vector<std::size_t> preorder, tin, size;
  std::vector<std::pair<double, std::size_t>> ranked;
};

BridgePieces bridge_pieces(const Ground& g, std::int64_t floor, std::int64_t cap) {
  const std::size_t n = g.size();
  BridgePieces bp;
  bp.tin.assign(n, kNoSite);
  bp.size.assign(n, 1);
  std::vector<std::size_t> low(n), parent(n, kNoSite), next_slot(n, 0);
  std::vector<std::int64_t> extra(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t gdeg = 0;
    for (auto u : g.nbrs(i)) gdeg += u >= 0;
    extra[i] = g.deg_s[i] - gdeg;
  }
  const auto slots = static_cast<std::size_t>(2 * g.d);
  std::vector<std::size_t> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (bp.tin[root] != kNoSite) continue;
    stack.push_back(root);
    bp.tin[root] = low[root] = bp.preorder.size();
    bp.preorder.push_back(root);
    while (!stack.empty()) {
      const auto v = stack.back();
      if (next_slot[v] < slots) {
        const auto u = g.nbrs(v)[next_slot[v]++];
        if (u < 0) continue;
        const auto w = static_cast<std::size_t>(u);
        if (bp.tin[w] == kNoSite) {
          parent[w] = v;
          bp.tin[w] = low[w] = bp.preorder.size();
          bp.preorder.push_back(w);
          stack.push_back(w);
        } else if (w != parent[v]) {
          low[v] = std::min(low[v], bp.tin[w]);
        }
        continue;
      }
      stack.pop_back();
      const auto p = parent[v];
      if (p == kNoSite) continue;
      low[p] = std::min(low[p], low[v]);
      bp.size[p] += bp.size[v];
      extra[p] += extra[v];
      const auto k = static_cast<std::int64_t>(bp.size[v]);
      if (low[v] > bp.tin[p] && k >= floor && k <= cap) bp.ranked.emplace_back(iso_ratio(1 + extra[v], k, g.d), v);
    }
  }
  std::sort(bp.ranked.begin(), bp.ranked.end());
  return bp;
}

// Steepest descent on the ratio with single-site add/remove moves.
void local_search(const Ground& g, Subset& s, std::int64_t floor, std::int64_t cap) {
  const int d = g.d;
  std::vector<std::uint8_t> listed(g.size(), 0);
  std::vector<std::size_t> cand;
  const auto list = [&](std::size_t v) {
    if (!listed[v]) {
      listed[v] = 1;
      cand.push_back(v);
    }
  };
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (s.in(v) || s.nin(v) > 0) list(v);
  }
  const std::size_t max_steps = 10 * g.size() + 10;
  for (std::size_t step = 0; step < max_steps; ++step) {
    double best = iso_ratio(s.boundary(), s.size(), d);
    std::size_t best_v = kNoSite;
    std::size_t keep = 0;
    for (std::size_t idx = 0; idx < cand.size(); ++idx) {
      const auto v = cand[idx];
      if (!s.in(v) && s.nin(v) == 0) {
        listed[v] = 0;
        continue;
      }
      cand[keep++] = v;
      double r = kNoRatio;
      if (s.in(v)) {
        if (s.size() - 1 >= floor) r = iso_ratio(s.boundary() + s.remove_delta(v), s.size() - 1, d);
      } else if (s.size() + 1 <= cap) {
        r = iso_ratio(s.boundary() + s.add_delta(v), s.size() + 1, d);
      }
      if (r < best - 1e-12) {
        best = r;
        best_v = v;
      }
    }
    cand.resize(keep);
    if (best_v == kNoSite) return;
    if (s.in(best_v)) {
      s.remove(best_v);
    } else {
      s.add(best_v);
    }
    for (auto u : g.nbrs(best_v)) {
      if (u >= 0) list(static_cast<std::size_t>(u));
    }
  }
}

// Inclusion-exclusion box sums over a d-dimensional 0/1 field.
class PrefixTable {
 public:
  PrefixTable(const Box& box, const std::function<bool(const Point&)>& value) : box_(box), d_(box.dim()) {
    n1_ = box.side + 1;
    table_.assign(static_cast<std::size_t>(ipow(n1_, d_)), 0);
    for_each_point(Box{Point(d_), box.side}, [&](const Point& t) {
      if (value(box.corner + t)) {
        Point s = t;
        for (int a = 0; a < d_; ++a) s[a] += 1;
        table_[offset(s)] = 1;
      }
    });
    std::size_t stride = 1;
    for (int a = d_ - 1; a >= 0; --a) {
      for (std::size_t i = 0; i < table_.size(); ++i) {
        if ((i / stride) % static_cast<std::size_t>(n1_) != 0) table_[i] += table_[i - stride];
      }
      stride *= static_cast<std::size_t>(n1_);
    }
  }

  // Sum over the cube lo + [0, side)^d intersected with the table box.
  std::int64_t sum(const Point& lo, std::int64_t side) const {
    Point a(d_), b(d_);
    for (int k = 0; k < d_; ++k) {
      a[k] = std::clamp<std::int64_t>(lo[k] - box_.corner[k], 0, box_.side);
      b[k] = std::clamp<std::int64_t>(lo[k] + side - box_.corner[k], 0, box_.side);
      if (b[k] <= a[k]) return 0;
    }
    std::int64_t total = 0;
    for (unsigned m = 0; m < (1u << d_); ++m) {
      Point q(d_);
      for (int k = 0; k < d_; ++k) q[k] = (m >> k) & 1 ? a[k] : b[k];
      total += (std::popcount(m) % 2 ? -1 : 1) * table_[offset(q)];
    }
    return total;
  }

 private:
  std::size_t offset(const Point& t) const {
    std::size_t o = 0;
    for (int a = 0; a < d_; ++a) o = o * static_cast<std::size_t>(n1_) + static_cast<std::size_t>(t[a]);
    return o;
  }
  Box box_;
  int d_;
  std::int64_t n1_ = 0;
  std::vector<std::int64_t> table_;
};

}  // namespace

SiteSet make_site_set(const Config& c, const std::vector<Point>& pts) {
  SiteSet s;
  for (const auto& p : pts) {
    const auto i = c.window().index(p);
    if (i == kNoSite) throw UsageError("site set: point outside the window");
    s.push_back(i);
  }
  return normalized(c, s);
}

std::int64_t edge_boundary(const Config& c, std::span<const std::size_t> a) {
  return static_cast<std::int64_t>(boundary_edges(c, a).size());
}

std::vector<std::pair<std::size_t, std::size_t>> boundary_edges(const Config& c, std::span<const std::size_t> a) {
  const SiteSet s = normalized(c, a);
  const Window& w = c.window();
  std::vector<std::uint8_t> in(w.size(), 0);
  for (auto v : s) in[v] = 1;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto v : s) {
    for (int ax = 0; ax < w.dim(); ++ax) {
      for (int sg : {-1, 1}) {
        const auto y = w.neighbor(v, ax, sg);
        if (y != kNoSite && c.occupied(y) && !in[y]) out.emplace_back(v, y);
      }
    }
  }
  return out;
}

double iso_ratio(std::int64_t boundary, std::int64_t size, int d) {
  if (size <= 0) return kNoRatio;
  return static_cast<double>(boundary) / std::pow(static_cast<double>(size), static_cast<double>(d - 1) / d);
}

std::int64_t size_floor(std::int64_t R, double theta_iso) {
  const double v = std::pow(static_cast<double>(R), theta_iso);
  const auto f = static_cast<std::int64_t>(std::ceil(v - 1e-9 * std::max(1.0, v)));
  return std::max<std::int64_t>(1, f);
}

SiteSet ball_component(const Config& c, std::int64_t R) {
  return largest_component(c, linf_ball(Point(c.dim()), static_cast<double>(R))).sites;
}

ExactResult exact_min_ratio(const Config& c, const Box& region, std::int64_t floor, std::int64_t cap) {
  const Window& w = c.window();
  if (!w.covers(region)) throw UsageError("exact_min_ratio: region outside the window");
  std::vector<std::size_t> ground;
  for_each_point(region, [&](const Point& p) {
    const auto i = w.index(p);
    if (c.occupied(i)) ground.push_back(i);
  });
  std::sort(ground.begin(), ground.end());
  ground.erase(std::unique(ground.begin(), ground.end()), ground.end());
  const std::size_t n = ground.size();
  if (n > 64) throw UsageError("exact_min_ratio: more than 64 occupied sites in the region");
  ExactResult res;
  res.ground = n;
  if (cap < 0) cap = static_cast<std::int64_t>(n / 2);
  cap = std::min<std::int64_t>(cap, static_cast<std::int64_t>(n));
  floor = std::max<std::int64_t>(floor, 1);
  if (floor > cap) return res;

  const int d = c.dim();
  std::vector<std::uint64_t> adj(n, 0);
  std::vector<std::int64_t> deg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      for (int sg : {-1, 1}) {
        const auto y = w.neighbor(ground[i], a, sg);
        if (y == kNoSite || !c.occupied(y)) continue;
        ++deg[i];
        const auto it = std::lower_bound(ground.begin(), ground.end(), y);
        if (it != ground.end() && *it == y) adj[i] |= std::uint64_t{1} << (it - ground.begin());
      }
    }
  }
  std::vector<double> denom(static_cast<std::size_t>(n + 1), 0.0);
  for (std::size_t k = 1; k <= n; ++k) denom[k] = std::pow(static_cast<double>(k), static_cast<double>(d - 1) / d);
  std::uint64_t best_mask = 0;
  const auto consider = [&](std::uint64_t mask, std::int64_t k, std::int64_t b) {
    ++res.subsets;
    if (k < floor || k > cap) return;
    const double r = static_cast<double>(b) / denom[static_cast<std::size_t>(k)];
    if (!res.found || r < res.ratio - 1e-12) {
      res.found = true;
      res.ratio = r;
      res.boundary = b;
      best_mask = mask;
    }
  };

  if (n <= 24) {
    std::uint64_t mask = 0;
    std::int64_t k = 0, b = 0;
    for (std::uint64_t g = 1; g < (std::uint64_t{1} << n); ++g) {
      const int v = std::countr_zero(g);
      const std::uint64_t bit = std::uint64_t{1} << v;
      if (mask & bit) {
        mask ^= bit;
        b -= deg[static_cast<std::size_t>(v)] - 2 * std::popcount(adj[static_cast<std::size_t>(v)] & mask);
        --k;
      } else {
        b += deg[static_cast<std::size_t>(v)] - 2 * std::popcount(adj[static_cast<std::size_t>(v)] & mask);
        mask |= bit;
        ++k;
      }
      consider(mask, k, b);
    }
  } else {
    res.connected_only = true;
    // Each connected set is generated once, from its smallest vertex.
    std::function<void(std::uint64_t, std::uint64_t, std::uint64_t, std::int64_t, std::int64_t, int)> extend;
    extend = [&](std::uint64_t sub, std::uint64_t ext, std::uint64_t closed, std::int64_t k, std::int64_t b, int v) {
      consider(sub, k, b);
      if (res.subsets > kConnectedLimit) throw UsageError("exact_min_ratio: connected-subset enumeration limit exceeded");
      if (k == cap) return;
      while (ext) {
        const int u = std::countr_zero(ext);
        const std::uint64_t ubit = std::uint64_t{1} << u;
        ext ^= ubit;
        const std::uint64_t above = v == 63 ? 0 : ~((std::uint64_t{2} << v) - 1);
        const std::uint64_t fresh = adj[static_cast<std::size_t>(u)] & ~closed & above;
        const std::int64_t nb = b + deg[static_cast<std::size_t>(u)] - 2 * std::popcount(adj[static_cast<std::size_t>(u)] & sub);
        extend(sub | ubit, ext | fresh, closed | fresh | ubit, k + 1, nb, v);
      }
    };
    for (std::size_t v = 0; v < n; ++v) {
      const std::uint64_t vbit = std::uint64_t{1} << v;
      const std::uint64_t above = v == 63 ? 0 : ~((std::uint64_t{2} << v) - 1);
      const std::uint64_t ext = adj[v] & above;
      extend(vbit, ext, ext | vbit | (above ? ~above : ~std::uint64_t{0}), 1, deg[v], static_cast<int>(v));
    }
  }
  if (res.found) {
    for (std::size_t i = 0; i < n; ++i) {
      if (best_mask >> i & 1) res.witness.push_back(ground[i]);
    }
  }
  return res;
}

IsoperimetryReport heuristic_profile(const Config& c, std::span<const std::size_t> ground_sites,
                                     const ProfileOptions& opt) {
  const Ground g(c, ground_sites);
  const int d = g.d;
  const auto n = static_cast<std::int64_t>(g.size());
  IsoperimetryReport rep;
  rep.floor = std::max<std::int64_t>(1, opt.floor);
  rep.cap = std::min(opt.cap < 0 ? n / 2 : opt.cap, n);
  if (opt.budget == 0 || n == 0 || rep.floor > rep.cap) return rep;

  const std::size_t n_sweep = opt.budget / 3, n_greedy = opt.budget / 3;
  const std::size_t n_ball = opt.budget - n_sweep - n_greedy;
  const std::uint64_t seed = opt.seed;
  const auto record = [&](const char* method, std::int64_t k, std::int64_t b, const auto& make_set) {
    IsoCandidate cand{method, k, b, iso_ratio(b, k, d)};
    if (cand.ratio < rep.min_ratio - 1e-12 || rep.candidates == 0) {
      rep.min_ratio = cand.ratio;
      rep.best = cand;
      rep.argmin = make_set();
    }
    rep.records.push_back(std::move(cand));
    ++rep.candidates;
  };

  // Chemical balls around seeded centres, one candidate per admissible radius.
  std::vector<std::size_t> order, layers;
  // Centres are a seeded permutation prefix, so small ground sets are covered fully.
  std::vector<std::size_t> centres(g.size());
  std::iota(centres.begin(), centres.end(), std::size_t{0});
  std::size_t balls = 0;
  for (std::size_t i = 0; balls < n_ball && i < centres.size(); ++i) {
    std::swap(centres[i], centres[i + static_cast<std::size_t>(rng::below(seed, rng::kIsoSeed, i, centres.size() - i))]);
    const auto centre = centres[i];
    ground_bfs(g, centre, order, layers);
    Subset s(g);
    std::size_t pos = 0;
    for (auto end : layers) {
      if (static_cast<std::int64_t>(end) > rep.cap || balls >= n_ball) break;
      for (; pos < end; ++pos) s.add(order[pos]);
      if (s.size() >= rep.floor) {
        record("ball", s.size(), s.boundary(), [&] { return s.sites(); });
        ++balls;
      }
    }
  }

  // Sweeps over prefixes of the second eigenvector order, both directions.
  std::vector<std::size_t> sweep_order(g.size());
  if (n_sweep > 0) {
    const auto vec = fiedler(g, rng::derive(seed, rng::kIsoSeed, 1'000'003), rep.fiedler_converged);
    std::iota(sweep_order.begin(), sweep_order.end(), std::size_t{0});
    std::stable_sort(sweep_order.begin(), sweep_order.end(), [&](auto a, auto b) { return vec[a] < vec[b]; });
    const std::size_t per_dir = std::max<std::size_t>(1, n_sweep / 2);
    const auto range = static_cast<std::size_t>(rep.cap - rep.floor + 1);
    const std::size_t stride = std::max<std::size_t>(1, (range + per_dir - 1) / per_dir);
    std::size_t used = 0;
    for (int dir = 0; dir < 2; ++dir) {
      Subset s(g);
      for (std::int64_t k = 1; k <= rep.cap && used < n_sweep; ++k) {
        const auto idx = static_cast<std::size_t>(dir == 0 ? k - 1 : n - k);
        s.add(sweep_order[idx]);
        if (k >= rep.floor && static_cast<std::size_t>(k - rep.floor) % stride == 0) {
          record("sweep", s.size(), s.boundary(), [&] { return s.sites(); });
          ++used;
        }
      }
    }
  }

  // Local search from single-edge pieces, balls, sweep prefixes and random subsets.
  // The first third of the starts are the best pieces hanging off a single edge.
  const BridgePieces bp = bridge_pieces(g, rep.floor, rep.cap);
  const std::size_t n_bridge = std::min(bp.ranked.size(), n_greedy / 3);
  std::vector<SiteSet> finals(n_greedy);
  std::vector<std::pair<std::int64_t, std::int64_t>> stats(n_greedy);
  parallel_for(n_greedy, opt.threads, [&](std::size_t j) {
    const std::uint64_t sj = rng::derive(seed, rng::kSubset, j);
    const auto target = rep.floor + static_cast<std::int64_t>(
                                        rng::below(sj, rng::kSubset, 0, static_cast<std::uint64_t>(rep.cap - rep.floor + 1)));
    Subset s(g);
    if (j < n_bridge) {
      const auto root = bp.ranked[j].second;
      for (std::size_t t = bp.tin[root]; t < bp.tin[root] + bp.size[root]; ++t) s.add(bp.preorder[t]);
    } else switch (j % 3) {
      case 0: {
        std::vector<std::size_t> o, l;
        ground_bfs(g, static_cast<std::size_t>(rng::below(sj, rng::kSubset, 1, static_cast<std::uint64_t>(n))), o, l);
        for (std::size_t p = 0; p < o.size() && s.size() < target; ++p) s.add(o[p]);
        break;
      }
      case 1: {
        const bool rev = rng::below(sj, rng::kSubset, 2, 2) == 1;
        for (std::int64_t k = 0; k < target; ++k) s.add(sweep_order[static_cast<std::size_t>(rev ? n - 1 - k : k)]);
        break;
      }
      default: {
        std::vector<std::size_t> perm(g.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = perm.size(); i > 1; --i) {
          std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng::below(sj, rng::kSubset, 10 + i, i))]);
        }
        for (std::int64_t k = 0; k < target; ++k) s.add(perm[static_cast<std::size_t>(k)]);
      }
    }
    if (s.size() < rep.floor) {
      for (std::size_t v = 0; v < g.size() && s.size() < rep.floor; ++v) {
        if (!s.in(v)) s.add(v);
      }
    }
    local_search(g, s, rep.floor, rep.cap);
    stats[j] = {s.size(), s.boundary()};
    finals[j] = s.sites();
  });
  for (std::size_t j = 0; j < n_greedy; ++j) record("greedy", stats[j].first, stats[j].second, [&] { return finals[j]; });
  return rep;
}

ReductionContext::ReductionContext(const Config& c, const FatSet& f, double eta)
    : c_(c), f_(f), special_(special_components(c, f, f.L0, eta)) {
  c_r_ = ball_component(c, f.R);
  c_2r_ = ball_component(c, 2 * f.R);
  owner_.assign(c.size(), -1);
  for (std::size_t i = 0; i < special_.sites.size(); ++i) {
    for (auto s : special_.sites[i]) owner_[s] = static_cast<std::int32_t>(i);
  }
  in_c2r_.assign(c.size(), 0);
  for (auto s : c_2r_) in_c2r_[s] = 1;
  table_box_ = linf_ball(Point(c.dim()), static_cast<double>(2 * f.R));
}

Reduction ReductionContext::map(std::span<const std::size_t> a) const {
  const SiteSet s = normalized(c_, a);
  for (auto v : s) {
    if (!std::binary_search(c_r_.begin(), c_r_.end(), v)) throw UsageError("reduction: A must be a subset of C_R");
  }
  Reduction red;
  std::vector<std::uint8_t> hit(special_.members.size(), 0);
  for (auto v : s) {
    if (owner_[v] >= 0) hit[static_cast<std::size_t>(owner_[v])] = 1;
  }
  for (std::size_t i = 0; i < hit.size(); ++i) {
    if (hit[i]) red.M.push_back(special_.members[i]);
  }
  if (s.empty()) return red;
  const Window& w = c_.window();
  std::vector<std::uint8_t> in_a(c_.size(), 0);
  for (auto v : s) in_a[v] = 1;
  const PrefixTable table(table_box_, [&](const Point& p) {
    const auto i = w.index(p);
    return i != kNoSite && in_c2r_[i] && !in_a[i];
  });
  const std::int64_t rad = 2 * f_.Ls;
  for (auto v : s) {
    Point lo = w.point(v);
    for (int k = 0; k < lo.dim(); ++k) lo[k] -= rad;
    if (table.sum(lo, 2 * rad + 1) > 0) red.D.push_back(v);
  }
  return red;
}

std::int64_t ReductionContext::coarse_boundary(const std::vector<Point>& m) const {
  std::vector<std::uint8_t> in(f_.member.size(), 0);
  for (const auto& x : m) {
    const auto i = f_.index(x);
    if (i == kNoSite || !f_.member[i]) throw UsageError("coarse boundary: point outside the fat set");
    in[i] = 1;
  }
  std::int64_t b = 0;
  const int d = f_.dim();
  for (std::size_t i = 0; i < f_.member.size(); ++i) {
    if (!f_.member[i]) continue;
    const Point x = f_.box(i);
    for (int a = 0; a < d; ++a) {
      const auto j = f_.index(x + Point::unit(d, a) * f_.L0);
      if (j != kNoSite && f_.member[j] && in[i] != in[j]) ++b;
    }
  }
  return b;
}

ReductionReport ReductionContext::check(std::span<const std::size_t> a, bool h_verified) const {
  const Reduction red = map(a);
  const int d = c_.dim();
  ReductionReport rep;
  rep.conditioned = h_verified;
  rep.size = static_cast<std::int64_t>(normalized(c_, a).size());
  rep.boundary = edge_boundary(c_, a);
  rep.m_size = static_cast<std::int64_t>(red.M.size());
  rep.m_boundary = coarse_boundary(red.M);
  rep.d_size = static_cast<std::int64_t>(red.D.size());
  rep.lower_bound = std::max(static_cast<double>(rep.m_boundary) / (d * static_cast<double>(1 << d)),
                             static_cast<double>(rep.d_size) / std::pow(11.0 * static_cast<double>(f_.Ls), d));
  rep.volume_bound = std::pow(6.0, d) * std::pow(static_cast<double>(f_.L0), d) * static_cast<double>(rep.m_size) +
                     static_cast<double>(rep.d_size);
  rep.boundary_ok = static_cast<double>(rep.boundary) >= rep.lower_bound;
  rep.volume_ok = static_cast<double>(rep.size) <= rep.volume_bound;
  rep.coarse_gamma = iso_ratio(rep.m_boundary, rep.m_size, d);
  return rep;
}

Reduction map_MA_DA(const Config& c, const FatSet& f, std::span<const std::size_t> a, double eta) {
  if (f.member.empty()) throw UsageError("reduction: missing fat set");
  return ReductionContext(c, f, eta).map(a);
}

ReductionReport check_reduction_inequalities(const Config& c, const FatSet& f, std::span<const std::size_t> a,
                                             double eta, bool h_verified) {
  if (f.member.empty()) throw UsageError("reduction: missing fat set");
  return ReductionContext(c, f, eta).check(a, h_verified);
}

std::vector<Point> coarse_density_boxes(const FatSet& f, const std::vector<Point>& a_coarse) {
  const int d = f.dim();
  const std::int64_t n = f.Ls / f.L0;
  std::vector<Point> out;
  std::vector<std::int64_t> counts(f.top_boxes.size(), 0);
  for (const auto& x : a_coarse) {
    if (!f.contains(x)) throw UsageError("coarse density: point outside the fat set");
    Point t(d);
    for (int a = 0; a < d; ++a) t[a] = floor_div(x[a] - f.region.corner[a], f.Ls);
    std::size_t idx = 0;
    const std::int64_t m = f.region.side / f.Ls;
    for (int a = 0; a < d; ++a) idx = idx * static_cast<std::size_t>(m) + static_cast<std::size_t>(t[a]);
    ++counts[idx];
  }
  const double half = 0.5 * static_cast<double>(ipow(n, d));
  for (std::size_t i = 0; i < f.top_boxes.size(); ++i) {
    if (static_cast<double>(counts[i]) >= half) out.push_back(f.top_boxes[i]);
  }
  return out;
}

SliceBoxProfile slice_box_profile(const FatSet& f, std::uint64_t seed, std::size_t balls_per_box) {
  const int d = f.dim();
  const std::int64_t n = f.Ls / f.L0, n3 = 3 * n;
  const double lo_size = 0.5 * static_cast<double>(ipow(n, d));
  const double hi_size = (static_cast<double>(ipow(3, d)) - 0.5) * static_cast<double>(ipow(n, d));
  const double scale = static_cast<double>(ipow(n, d - 1));
  SliceBoxProfile prof;
  const std::int64_t mc = floor_div(2 * f.R - 3 * f.Ls, f.Ls);
  if (mc < 0) return prof;
  const auto cells = static_cast<std::size_t>(ipow(n3, d));
  std::vector<std::uint8_t> g(cells), a(cells);
  std::array<std::size_t, kMaxDim> stride{};
  stride[static_cast<std::size_t>(d - 1)] = 1;
  for (int k = d - 2; k >= 0; --k) stride[static_cast<std::size_t>(k)] = stride[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(n3);
  const auto coord = [&](std::size_t i, int k) {
    return static_cast<std::int64_t>((i / stride[static_cast<std::size_t>(k)]) % static_cast<std::size_t>(n3));
  };
  const auto evaluate = [&] {
    const auto size = static_cast<double>(std::count(a.begin(), a.end(), 1));
    if (size < lo_size || size > hi_size) return;
    std::int64_t b = 0;
    for (std::size_t i = 0; i < cells; ++i) {
      if (!g[i]) continue;
      for (int k = 0; k < d; ++k) {
        if (coord(i, k) + 1 < n3 && g[i + stride[static_cast<std::size_t>(k)]] && a[i] != a[i + stride[static_cast<std::size_t>(k)]]) ++b;
      }
    }
    ++prof.subsets;
    prof.min_scaled_boundary = std::min(prof.min_scaled_boundary, static_cast<double>(b) / scale);
  };
  std::uint64_t counter = 0;
  for_each_point(Box{Point(d), 2 * mc + 1}, [&](const Point& t) {
    Point corner = t * f.Ls;
    for (int k = 0; k < d; ++k) corner[k] -= mc * f.Ls + f.Ls;
    for (std::size_t i = 0; i < cells; ++i) {
      Point p = corner;
      for (int k = 0; k < d; ++k) p[k] += coord(i, k) * f.L0;
      g[i] = f.contains(p);
    }
    ++prof.boxes;
    // Half-space cuts.
    for (int k = 0; k < d; ++k) {
      for (std::int64_t cut = 1; cut < n3; ++cut) {
        for (std::size_t i = 0; i < cells; ++i) a[i] = g[i] && coord(i, k) < cut;
        evaluate();
      }
    }
    // Coarse BFS balls in g from seeded centres, every admissible radius.
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cells; ++i) {
      if (g[i]) members.push_back(i);
    }
    if (members.empty()) return;
    for (std::size_t bi = 0; bi < balls_per_box; ++bi) {
      const auto centre = members[static_cast<std::size_t>(rng::below(seed, rng::kIsoSeed, counter++, members.size()))];
      std::vector<std::int32_t> dist(cells, -1);
      std::vector<std::size_t> q{centre};
      dist[centre] = 0;
      std::fill(a.begin(), a.end(), 0);
      for (std::size_t h = 0; h < q.size(); ++h) {
        const auto v = q[h];
        a[v] = 1;
        if (h + 1 == q.size() || dist[q[h + 1]] != dist[v]) evaluate();
        for (int k = 0; k < d; ++k) {
          const auto st = stride[static_cast<std::size_t>(k)];
          if (coord(v, k) > 0 && g[v - st] && dist[v - st] < 0) {
            dist[v - st] = dist[v] + 1;
            q.push_back(v - st);
          }
          if (coord(v, k) + 1 < n3 && g[v + st] && dist[v + st] < 0) {
            dist[v + st] = dist[v] + 1;
            q.push_back(v + st);
          }
        }
      }
    }
  });
  return prof;
}

}  // namespace cpl
