#include "cpl/cluster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "cpl/errors.hpp"

namespace cpl {

namespace {

constexpr std::size_t kExactDiameterLimit = 4096;

std::uint32_t find(std::vector<std::uint32_t>& parent, std::uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

void unite(std::vector<std::uint32_t>& parent, std::uint32_t a, std::uint32_t b) {
  a = find(parent, a);
  b = find(parent, b);
  if (a == b) return;
  // Keep the smaller index as root so roots are canonical ids.
  if (a < b) parent[b] = a; else parent[a] = b;
}

std::int64_t eccentricity(const Window& w, std::span<const std::uint32_t> sites, std::uint32_t from,
                          std::uint32_t* argmax) {
  const Point p = w.point(from);
  std::int64_t best = -1;
  for (auto s : sites) {
    const auto dist = w.l1_dist(p, w.point(s));
    if (dist > best) {
      best = dist;
      if (argmax) *argmax = s;
    }
  }
  return best;
}

void fill_diameter(const Window& w, std::span<const std::uint32_t> sites, ComponentStats& st) {
  if (sites.size() <= kExactDiameterLimit) {
    st.diameter = st.diameter_upper = pairwise_l1_diameter(w, sites);
    st.diameter_exact = true;
    return;
  }
  std::uint32_t far = sites.front(), far2 = far;
  eccentricity(w, sites, sites.front(), &far);
  const auto lower = eccentricity(w, sites, far, &far2);
  const auto volume_bound = static_cast<std::int64_t>(
      std::ceil((std::pow(static_cast<double>(sites.size()), 1.0 / w.dim()) - 1.0) / 2.0));
  st.diameter = std::max(lower, volume_bound);
  st.diameter_upper = std::min<std::int64_t>(2 * lower, w.dim() * (w.side() / 2));
  st.diameter_exact = st.diameter == st.diameter_upper;
}

}  // namespace

std::int64_t pairwise_l1_diameter(const Window& w, std::span<const std::uint32_t> sites) {
  std::vector<Point> pts;
  pts.reserve(sites.size());
  for (auto s : sites) pts.push_back(w.point(s));
  std::int64_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, w.l1_dist(pts[i], pts[j]));
  }
  return best;
}

ClusterLabeling label_components(const Config& c, bool with_diameters) {
  const Window& w = c.window();
  const int d = w.dim();
  const auto du = static_cast<std::size_t>(d);
  const std::size_t n = w.size();
  const auto side = w.side();
  const auto occ = c.occupancy();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  // Coordinates advance with the row-major index, last axis fastest.
  const auto advance = [&](std::array<std::int64_t, kMaxDim>& x) {
    for (std::size_t a = du; a-- > 0;) {
      if (++x[a] < side) return;
      x[a] = 0;
    }
  };
  std::array<std::int64_t, kMaxDim> x{};
  for (std::size_t i = 0; i < n; ++i, advance(x)) {
    if (!occ[i]) continue;
    for (std::size_t a = 0; a < du; ++a) {
      const std::size_t st = w.stride(static_cast<int>(a));
      std::size_t j = i + st;
      if (x[a] + 1 == side) {
        if (!w.wrap()) continue;
        j = i - static_cast<std::size_t>(side - 1) * st;
      }
      if (occ[j]) unite(parent, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  }
  ClusterLabeling lab;
  lab.comp.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!occ[i]) continue;
    const auto r = find(parent, static_cast<std::uint32_t>(i));
    if (r == i) {
      lab.comp[i] = static_cast<std::int32_t>(lab.components.size());
      lab.components.push_back(ComponentStats{i, 0, 0, 0, true});
    } else {
      lab.comp[i] = lab.comp[r];
    }
    ++lab.components[static_cast<std::size_t>(lab.comp[i])].volume;
  }
  const std::size_t k = lab.components.size();
  lab.offsets_.assign(k + 1, 0);
  for (std::size_t ci = 0; ci < k; ++ci) lab.offsets_[ci + 1] = lab.offsets_[ci] + lab.components[ci].volume;
  lab.sites_.resize(lab.offsets_[k]);
  std::vector<std::size_t> fill(lab.offsets_.begin(), lab.offsets_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (lab.comp[i] >= 0) lab.sites_[fill[static_cast<std::size_t>(lab.comp[i])]++] = static_cast<std::uint32_t>(i);
  }
  if (!with_diameters) return lab;
  if (w.wrap()) {
    for (std::size_t ci = 0; ci < k; ++ci) fill_diameter(w, lab.members(ci), lab.components[ci]);
    return lab;
  }
  // Hard window: extremes of sum_a s_a x_a per component in one pass.
  const std::size_t masks = std::size_t{1} << (du - 1);
  std::vector<std::int64_t> lo(k * masks, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> hi(k * masks, std::numeric_limits<std::int64_t>::min());
  x = {};
  for (std::size_t i = 0; i < n; ++i, advance(x)) {
    if (lab.comp[i] < 0) continue;
    const auto base = static_cast<std::size_t>(lab.comp[i]) * masks;
    for (std::size_t mask = 0; mask < masks; ++mask) {
      std::int64_t v = x[0];
      for (std::size_t a = 1; a < du; ++a) v += (mask >> (a - 1) & 1) ? -x[a] : x[a];
      lo[base + mask] = std::min(lo[base + mask], v);
      hi[base + mask] = std::max(hi[base + mask], v);
    }
  }
  for (std::size_t ci = 0; ci < k; ++ci) {
    std::int64_t best = 0;
    for (std::size_t mask = 0; mask < masks; ++mask) best = std::max(best, hi[ci * masks + mask] - lo[ci * masks + mask]);
    auto& st = lab.components[ci];
    st.diameter = st.diameter_upper = best;
    st.diameter_exact = true;
  }
  return lab;
}

Config restrict_s_r(const Config& c, const ClusterLabeling& lab, double r) {
  if (!(r >= 0)) throw UsageError("restrict_s_r: r must be non-negative");
  std::vector<std::uint8_t> keep_comp(lab.components.size(), 0);
  for (std::size_t ci = 0; ci < lab.components.size(); ++ci) {
    const auto& st = lab.components[ci];
    if (static_cast<double>(st.diameter) >= r) {
      keep_comp[ci] = 1;
    } else if (static_cast<double>(st.diameter_upper) >= r) {
      keep_comp[ci] = static_cast<double>(pairwise_l1_diameter(c.window(), lab.members(ci))) >= r;
    }
  }
  std::vector<std::uint8_t> occ(c.size(), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (lab.comp[i] >= 0) occ[i] = keep_comp[static_cast<std::size_t>(lab.comp[i])];
  }
  return Config(c.window(), std::move(occ), c.provenance());
}

Config restrict_s_r(const Config& c, double r) { return restrict_s_r(c, label_components(c), r); }

bool LargestComponent::contains(std::size_t site) const {
  return std::binary_search(sites.begin(), sites.end(), site);
}

LargestComponent largest_component(const Config& c, const std::optional<Box>& region) {
  const Window& w = c.window();
  const Config* src = &c;
  Config masked;
  if (region) {
    if (!w.covers(*region)) throw UsageError("largest_component: region outside window");
    masked = Config(w, c.provenance());
    for_each_point(*region, [&](const Point& p) {
      const auto i = w.index(p);
      if (c.occupied(i)) masked.set(i, true);
    });
    src = &masked;
  }
  const auto lab = label_components(*src, false);
  LargestComponent out;
  std::size_t best = 0;
  for (std::size_t ci = 0; ci < lab.components.size(); ++ci) {
    const auto v = lab.components[ci].volume;
    if (out.empty || v > out.volume) {
      out.empty = false;
      out.volume = v;
      out.id = lab.components[ci].id;
      out.unique = true;
      best = ci;
    } else if (v == out.volume) {
      out.unique = false;
    }
  }
  if (!out.empty) {
    const auto m = lab.members(best);
    out.sites.assign(m.begin(), m.end());
  }
  return out;
}

std::vector<std::int64_t> bfs_distances(const Config& c, std::size_t source, std::span<const std::uint8_t> mask) {
  const Window& w = c.window();
  std::vector<std::int64_t> dist(w.size(), -1);
  auto allowed = [&](std::size_t i) { return c.occupied(i) && (mask.empty() || mask[i]); };
  if (source == kNoSite || !allowed(source)) return dist;
  std::vector<std::size_t> queue{source};
  dist[source] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const auto x = queue[h];
    for (int a = 0; a < w.dim(); ++a) {
      for (int s : {-1, 1}) {
        const auto y = w.neighbor(x, a, s);
        if (y != kNoSite && dist[y] < 0 && allowed(y)) {
          dist[y] = dist[x] + 1;
          queue.push_back(y);
        }
      }
    }
  }
  return dist;
}

ChemicalDistance chemical_distance(const Config& c, const Point& x, const Point& y) {
  const auto ix = c.window().index(x), iy = c.window().index(y);
  if (!c.occupied(ix) || !c.occupied(iy)) throw UsageError("chemical_distance: endpoint not occupied");
  const auto dist = bfs_distances(c, ix);
  if (dist[iy] < 0) return {};
  return {dist[iy]};
}

std::vector<bool> check_A3(const Config& c, std::int64_t R) {
  const Window& w = c.window();
  const auto lc = largest_component(c, std::nullopt);
  std::vector<bool> out;
  for (int a = 0; a < w.dim(); ++a) {
    for (int s : {1, -1}) {
      bool hit = false;
      for (std::int64_t k = 0; k <= R && !hit && !lc.empty; ++k) {
        const auto i = w.index(Point::unit(w.dim(), a, s * k));
        hit = i != kNoSite && lc.contains(i);
      }
      out.push_back(hit);
    }
  }
  return out;
}

A4Result check_A4(const Config& c, std::int64_t R, double C) {
  if (!(C >= 1)) throw UsageError("check_A4: C must be at least 1");
  const Window& w = c.window();
  const auto lc = largest_component(c, std::nullopt);
  std::vector<std::size_t> targets;
  const Box ball = linf_ball(Point(w.dim()), static_cast<double>(R));
  for (auto s : lc.sites) {
    if (ball.contains(w.point(s))) targets.push_back(s);
  }
  A4Result res;
  // Exact target diameter by eccentricity bounds; each BFS stops once every target is reached.
  const std::size_t n = targets.size();
  std::vector<std::size_t> slot(w.size(), kNoSite);
  for (std::size_t i = 0; i < n; ++i) slot[targets[i]] = i;
  std::vector<std::int64_t> lo(n, 0), hi(n, std::numeric_limits<std::int64_t>::max());
  std::vector<std::uint8_t> open(n, 1);
  std::vector<std::int64_t> dist(w.size(), -1), dt(n);
  std::vector<std::size_t> queue;
  std::int64_t worst = 0;
  bool pick_high = true;
  for (std::size_t left = n; left > 0;) {
    std::size_t v = kNoSite;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      if (v == kNoSite || (pick_high ? hi[i] > hi[v] : lo[i] < lo[v])) v = i;
    }
    pick_high = !pick_high;
    queue.assign(1, targets[v]);
    dist[targets[v]] = 0;
    std::size_t found = 0;
    for (std::size_t h = 0; h < queue.size() && found < n; ++h) {
      const auto x = queue[h];
      if (slot[x] != kNoSite) {
        dt[slot[x]] = dist[x];
        ++found;
      }
      for (int a = 0; a < w.dim(); ++a) {
        for (int s : {-1, 1}) {
          const auto y = w.neighbor(x, a, s);
          if (y != kNoSite && dist[y] < 0 && c.occupied(y)) {
            dist[y] = dist[x] + 1;
            queue.push_back(y);
          }
        }
      }
    }
    for (auto x : queue) dist[x] = -1;
    const std::int64_t ecc = dt[std::max_element(dt.begin(), dt.end()) - dt.begin()];
    worst = std::max(worst, ecc);
    open[v] = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      lo[i] = std::max({lo[i], ecc - dt[i], dt[i]});
      hi[i] = std::min(hi[i], ecc + dt[i]);
      if (hi[i] <= worst || lo[i] == hi[i]) {
        worst = std::max(worst, lo[i]);
        open[i] = 0;
      }
    }
    left = static_cast<std::size_t>(std::count(open.begin(), open.end(), 1));
  }
  res.max_ratio = R > 0 ? static_cast<double>(worst) / static_cast<double>(R) : 0.0;
  res.holds = static_cast<double>(worst) <= C * static_cast<double>(R);
  return res;
}

LocalUniqueness check_local_uniqueness(const Config& c, std::int64_t R) {
  const Window& w = c.window();
  const Point origin(w.dim());
  const Box outer = linf_ball(origin, static_cast<double>(2 * R));
  if (!w.covers(outer)) throw UsageError("check_local_uniqueness: window smaller than B(0, 2R)");
  const Box inner = linf_ball(origin, static_cast<double>(R));
  const auto lab = label_components(c);
  const Config sr = restrict_s_r(c, lab, static_cast<double>(R));
  const Config sr10 = restrict_s_r(c, lab, static_cast<double>(R) / 10.0);
  LocalUniqueness out;
  std::vector<std::uint8_t> mask(w.size(), 0);
  for_each_point(outer, [&](const Point& p) { mask[w.index(p)] = 1; });
  std::vector<std::int64_t> dist;
  for_each_point(inner, [&](const Point& p) {
    const auto i = w.index(p);
    if (sr.occupied(i)) out.exists = true;
    if (!sr10.occupied(i) || !out.unique) return;
    if (dist.empty()) {
      dist = bfs_distances(c, i, mask);
    } else if (dist[i] < 0) {
      out.unique = false;
    }
  });
  return out;
}

int BoxLabeler::run(std::span<const std::uint8_t> occ, const Window& w, const Box& b) {
  const int d = w.dim();
  const std::size_t m = b.volume();
  const auto side = static_cast<std::size_t>(b.side);
  labels_.assign(m, -1);
  volumes_.clear();
  sites_.resize(m);
  // Occupancy on a grid padded by one empty layer, so neighbours need no bounds checks.
  std::array<std::size_t, kMaxDim> pstride{};
  std::size_t ps = 1;
  for (int a = d - 1; a >= 0; --a) {
    pstride[static_cast<std::size_t>(a)] = ps;
    ps *= side + 2;
  }
  std::size_t pad0 = 0;
  for (int a = 0; a < d; ++a) pad0 += pstride[static_cast<std::size_t>(a)];
  padded_.assign(ps, -2);
  box_pos_.resize(m);
  // Boxes inside the window map to sites by strides; others go through Window::index.
  bool inside = true;
  for (int a = 0; a < d; ++a) inside = inside && b.corner[a] >= w.low() && b.corner[a] + b.side <= w.low() + w.side();
  if (inside) {
    std::array<std::size_t, kMaxDim> off{};
    std::size_t site = w.index(b.corner), q = pad0;
    for (std::size_t k = 0; k < m; ++k) {
      sites_[k] = site;
      box_pos_[k] = q;
      if (occ[site]) padded_[q] = -1;
      for (int a = d - 1; a >= 0; --a) {
        const auto ua = static_cast<std::size_t>(a);
        if (++off[ua] < side) {
          site += w.stride(a);
          q += pstride[ua];
          break;
        }
        off[ua] = 0;
        site -= (side - 1) * w.stride(a);
        q -= (side - 1) * pstride[ua];
      }
    }
  } else {
    std::size_t k = 0;
    std::array<std::size_t, kMaxDim> off{};
    for_each_point(b, [&](const Point& p) {
      const auto site = w.index(p);
      sites_[k] = site;
      std::size_t q = pad0;
      for (int a = 0; a < d; ++a) q += off[static_cast<std::size_t>(a)] * pstride[static_cast<std::size_t>(a)];
      box_pos_[k] = q;
      if (site != kNoSite && occ[site]) padded_[q] = -1;
      ++k;
      for (int a = d - 1; a >= 0; --a) {
        if (++off[static_cast<std::size_t>(a)] < side) break;
        off[static_cast<std::size_t>(a)] = 0;
      }
    });
  }
  for (std::size_t start = 0; start < m; ++start) {
    const auto q0 = box_pos_[start];
    if (padded_[q0] != -1) continue;
    const auto label = static_cast<std::int32_t>(volumes_.size());
    queue_.clear();
    queue_.push_back(q0);
    padded_[q0] = label;
    for (std::size_t h = 0; h < queue_.size(); ++h) {
      const auto x = queue_[h];
      for (int a = 0; a < d; ++a) {
        const auto st = pstride[static_cast<std::size_t>(a)];
        if (padded_[x - st] == -1) {
          padded_[x - st] = label;
          queue_.push_back(x - st);
        }
        if (padded_[x + st] == -1) {
          padded_[x + st] = label;
          queue_.push_back(x + st);
        }
      }
    }
    volumes_.push_back(static_cast<std::int32_t>(queue_.size()));
  }
  for (std::size_t i = 0; i < m; ++i) labels_[i] = std::max(padded_[box_pos_[i]], -1);
  return static_cast<int>(volumes_.size());
}

}  // namespace cpl
