#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/renorm.hpp"

namespace cpl {

namespace {

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

// Row-major offset of t within the cube [0, n)^dims.
std::size_t offset(const Point& t, std::int64_t n) {
  std::size_t o = 0;
  for (int a = 0; a < t.dim(); ++a) o = o * static_cast<std::size_t>(n) + static_cast<std::size_t>(t[a]);
  return o;
}

// Nearest-neighbour connectivity of the set bits of a cube [0, n)^dims.
// An empty set counts as connected.
bool cube_connected(std::span<const std::uint8_t> mask, int dims, std::int64_t n, std::vector<std::size_t>& queue,
                    std::vector<std::uint8_t>& seen) {
  const auto start = std::find(mask.begin(), mask.end(), 1);
  if (start == mask.end()) return true;
  seen.assign(mask.size(), 0);
  queue.clear();
  const auto s0 = static_cast<std::size_t>(start - mask.begin());
  queue.push_back(s0);
  seen[s0] = 1;
  std::array<std::size_t, kMaxDim> stride{};
  stride[static_cast<std::size_t>(dims - 1)] = 1;
  for (int a = dims - 2; a >= 0; --a)
    stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(n);
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const std::size_t p = queue[h];
    for (int a = 0; a < dims; ++a) {
      const std::size_t st = stride[static_cast<std::size_t>(a)];
      const auto c = static_cast<std::int64_t>((p / st) % static_cast<std::size_t>(n));
      if (c > 0 && mask[p - st] && !seen[p - st]) {
        seen[p - st] = 1;
        queue.push_back(p - st);
      }
      if (c + 1 < n && mask[p + st] && !seen[p + st]) {
        seen[p + st] = 1;
        queue.push_back(p + st);
      }
    }
  }
  const auto total = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  return queue.size() == total;
}

// Every axis subset of the given size, in lexicographic order.
std::vector<std::vector<int>> axis_subsets(int d, int j) {
  std::vector<std::vector<int>> out;
  for (unsigned m = 0; m < (1u << d); ++m) {
    if (std::popcount(m) != j) continue;
    std::vector<int> s;
    for (int a = 0; a < d; ++a) {
      if (m & (1u << a)) s.push_back(a);
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Whole-cube connectivity plus connectivity of every axis-parallel 2-d slice.
class PerforationCheck {
 public:
  PerforationCheck(int d, std::int64_t l) : d_(d), l_(l), pairs_(axis_subsets(d, 2)) {}

  bool ok(std::span<const std::uint8_t> alive) {
    if (!cube_connected(alive, d_, l_, queue_, seen_)) return false;
    if (d_ == 2) return true;
    for (const auto& ax : pairs_) {
      std::vector<int> rest;
      for (int a = 0; a < d_; ++a) {
        if (a != ax[0] && a != ax[1]) rest.push_back(a);
      }
      bool good = true;
      for_each_point(Box{Point(static_cast<int>(rest.size())), l_}, [&](const Point& fixed) {
        if (!good) return;
        slice_.assign(static_cast<std::size_t>(l_ * l_), 0);
        Point t(d_);
        for (std::size_t k = 0; k < rest.size(); ++k) t[rest[k]] = fixed[static_cast<int>(k)];
        for (std::int64_t u = 0; u < l_; ++u) {
          for (std::int64_t v = 0; v < l_; ++v) {
            t[ax[0]] = u;
            t[ax[1]] = v;
            slice_[static_cast<std::size_t>(u * l_ + v)] = alive[offset(t, l_)];
          }
        }
        good = cube_connected(slice_, 2, l_, queue_, seen_);
      });
      if (!good) return false;
    }
    return true;
  }

 private:
  int d_;
  std::int64_t l_;
  std::vector<std::vector<int>> pairs_;
  std::vector<std::uint8_t> slice_, seen_;
  std::vector<std::size_t> queue_;
};

void delete_box(std::vector<std::uint8_t>& alive, const Point& corner, std::int64_t side, std::int64_t l) {
  for_each_point(Box{corner, side}, [&](const Point& t) { alive[offset(t, l)] = 0; });
}

}  // namespace

double fat_set_bound(const ScaleLadder& ladder, const Levels& lv, int j) {
  if (j < 2) throw UsageError("fat set bound: j >= 2 required");
  if (ladder.canonical) {
    return compute_f_j(static_cast<double>(ladder.r0) / static_cast<double>(ladder.l0), j, ladder.theta_sc);
  }
  double prod = 1.0;
  for (int i = 0; i < lv.r; ++i) {
    const double q = static_cast<double>(ladder.r[static_cast<std::size_t>(i)]) /
                     static_cast<double>(ladder.l[static_cast<std::size_t>(i)]);
    prod *= std::max(0.0, 1.0 - 3.0 * std::pow(q, j));
  }
  return prod;
}

std::size_t FatSet::index(const Point& x) const {
  if (x.dim() != dim()) return kNoSite;
  std::size_t idx = 0;
  for (int a = 0; a < x.dim(); ++a) {
    const std::int64_t off = x[a] - region.corner[a];
    if (off < 0 || off % L0 != 0 || off / L0 >= count) return kNoSite;
    idx = idx * static_cast<std::size_t>(count) + static_cast<std::size_t>(off / L0);
  }
  return idx;
}

bool FatSet::contains(const Point& x) const {
  const auto i = index(x);
  return i != kNoSite && member[i];
}

Point FatSet::box(std::size_t i) const {
  Point p = region.corner;
  for (int a = dim() - 1; a >= 0; --a) {
    p[a] += static_cast<std::int64_t>(i % static_cast<std::size_t>(count)) * L0;
    i /= static_cast<std::size_t>(count);
  }
  return p;
}

std::vector<Point> FatSet::members() const {
  std::vector<Point> out;
  for (std::size_t i = 0; i < member.size(); ++i) {
    if (member[i]) out.push_back(box(i));
  }
  return out;
}

std::size_t FatSet::size() const { return static_cast<std::size_t>(std::count(member.begin(), member.end(), 1)); }

FatSet build_fat_set(const GoodnessField& g, const ScaleLadder& ladder, const Levels& lv, std::int64_t R) {
  if (g.levels.empty()) throw UsageError("fat set: empty goodness field");
  if (lv.r < 0 || lv.r > lv.s || lv.s > ladder.max_level()) throw UsageError("fat set: levels outside the ladder");
  if (static_cast<int>(g.levels.size()) <= lv.r) throw UsageError("fat set: goodness field lacks level r");
  const int d = g.levels[0].corner.dim();
  const auto Lv = [&](int k) { return ladder.L[static_cast<std::size_t>(k)]; };
  const std::int64_t Ls = Lv(lv.s);
  const std::int64_t m = floor_div(2 * R - 2 * Ls, Ls);
  if (m < 0) throw UsageError("fat set: no L_s-box fits in B(0, 2R - 2 L_s)");

  FatSet f;
  f.levels = lv;
  f.R = R;
  f.L0 = ladder.L0;
  f.Ls = Ls;
  Point corner(d);
  for (int a = 0; a < d; ++a) corner[a] = -m * Ls;
  f.region = Box{corner, (2 * m + 1) * Ls};
  f.count = f.region.side / ladder.L0;
  f.member.assign(static_cast<std::size_t>(ipow(f.count, d)), 0);
  for_each_point(Box{Point(d), 2 * m + 1}, [&](const Point& t) { f.top_boxes.push_back(corner + t * Ls); });

  // Copy down from level s to level r.
  std::vector<Point> current = f.top_boxes;
  for (int i = lv.s; i > lv.r; --i) {
    std::vector<Point> next;
    const std::int64_t li = ladder.l[static_cast<std::size_t>(i - 1)];
    for (const auto& z : current) {
      for_each_point(Box{Point(d), li}, [&](const Point& t) { next.push_back(z + t * Lv(i - 1)); });
    }
    current.swap(next);
  }
  const auto& top = g.levels[static_cast<std::size_t>(lv.r)];
  for (const auto& z : current) {
    const auto idx = top.index(z);
    if (idx == kNoSite) throw UsageError("fat set: goodness field does not cover level r");
    if (top.bad(idx)) throw UsageError("fat set: event H clause (a) fails at " + z.str());
  }

  // Perforate levels r .. 1.
  for (int i = lv.r; i >= 1; --i) {
    const auto& child = g.levels[static_cast<std::size_t>(i - 1)];
    const std::int64_t l = ladder.l[static_cast<std::size_t>(i - 1)];
    const std::int64_t r = ladder.r[static_cast<std::size_t>(i - 1)];
    const std::int64_t Lc = Lv(i - 1);
    const auto cells = static_cast<std::size_t>(ipow(l, d));
    PerforationCheck check(d, l);
    std::vector<Point> next;
    for (const auto& z : current) {
      std::vector<std::uint8_t> alive(cells, 1), a_bad(cells, 0), b_bad(cells, 0);
      std::array<std::array<std::int64_t, kMaxDim>, 2> lo{}, hi{};
      for (auto& v : lo) v.fill(INT64_MAX);
      for (auto& v : hi) v.fill(INT64_MIN);
      std::array<bool, 2> any{false, false};
      for_each_point(Box{Point(d), l}, [&](const Point& t) {
        const auto ci = child.index(z + t * Lc);
        if (ci == kNoSite) throw UsageError("fat set: goodness field does not cover level " + std::to_string(i - 1));
        const std::array<bool, 2> flag{child.a_bad[ci] != 0, child.b_bad[ci] != 0};
        a_bad[offset(t, l)] = flag[0];
        b_bad[offset(t, l)] = flag[1];
        for (std::size_t w = 0; w < 2; ++w) {
          if (!flag[w]) continue;
          any[w] = true;
          for (int a = 0; a < d; ++a) {
            lo[w][static_cast<std::size_t>(a)] = std::min(lo[w][static_cast<std::size_t>(a)], t[a]);
            hi[w][static_cast<std::size_t>(a)] = std::max(hi[w][static_cast<std::size_t>(a)], t[a]);
          }
        }
      });
      std::vector<Point> deleted;
      for (std::size_t w = 0; w < 2; ++w) {
        if (!any[w]) continue;
        Point p(d);
        for (int a = 0; a < d; ++a) {
          const auto ua = static_cast<std::size_t>(a);
          if (hi[w][ua] - lo[w][ua] >= r) throw ContractViolation("fat set: " + z.str() + " is not good");
          p[a] = std::max<std::int64_t>(0, hi[w][ua] - (r - 1));
        }
        if (w == 1) {
          // Skip b when a already covers every B-bad child.
          bool covered = true;
          for_each_point(Box{Point(d), l}, [&](const Point& t) {
            if (b_bad[offset(t, l)] && alive[offset(t, l)]) covered = false;
          });
          if (covered) continue;
        }
        delete_box(alive, p, r, l);
        deleted.push_back(p);
        f.log.push_back(Deletion{i, z, w == 0 ? 'a' : 'b', z + p * Lc, r * Lc});
      }
      if (!deleted.empty() && !check.ok(alive)) {
        bool found = false;
        for_each_point(Box{Point(d), l - r + 1}, [&](const Point& p) {
          if (found) return;
          bool near = false;
          for (const auto& q : deleted) near = near || linf_dist(p, q) <= 2 * r;
          if (!near) return;
          std::vector<std::uint8_t> trial = alive;
          delete_box(trial, p, r, l);
          if (!check.ok(trial)) return;
          alive.swap(trial);
          f.log.push_back(Deletion{i, z, 'c', z + p * Lc, r * Lc});
          found = true;
        });
        if (!found) throw ContractViolation("fat set: no connectivity-restoring box c in " + z.str());
      }
      for_each_point(Box{Point(d), l}, [&](const Point& t) {
        if (alive[offset(t, l)]) next.push_back(z + t * Lc);
      });
    }
    current.swap(next);
  }
  for (const auto& x : current) f.member[f.index(x)] = 1;
  return f;
}

void write_fat_set(std::ostream& os, const FatSet& f) {
  os << "cpl-fatset 1 d=" << f.dim() << " R=" << f.R << " L0=" << f.L0 << " Ls=" << f.Ls << " s=" << f.levels.s
     << " r=" << f.levels.r << " top=" << f.top_boxes.size() << " deletions=" << f.log.size()
     << " members=" << f.size() << '\n';
  os << "# top <corner> | del <level> <parent> <kind> <corner> <side> | member <corner>\n";
  for (const auto& z : f.top_boxes) os << "top " << z.str() << '\n';
  for (const auto& e : f.log) {
    os << "del " << e.level << ' ' << e.parent.str() << ' ' << e.kind << ' ' << e.corner.str() << ' ' << e.side
       << '\n';
  }
  for (std::size_t i = 0; i < f.member.size(); ++i) {
    if (f.member[i]) os << "member " << f.box(i).str() << '\n';
  }
}

FatSetReport verify_fat_set(const FatSet& f, const ScaleLadder& ladder, const GoodnessField& g,
                            std::size_t max_slices_per_box) {
  FatSetReport rep;
  const int d = f.dim();
  const auto violate = [&](bool& clause, std::string msg) {
    clause = false;
    ++rep.violation_count;
    if (rep.violations.size() < 64) rep.violations.push_back(std::move(msg));
  };
  rep.f_bound.assign(static_cast<std::size_t>(d + 1), 0.0);
  rep.min_density_c.assign(static_cast<std::size_t>(d + 1), 1.0);
  for (int j = 2; j <= d; ++j) rep.f_bound[static_cast<std::size_t>(j)] = fat_set_bound(ladder, f.levels, j);

  // Deletion-log contract: at most three boxes per parent.
  std::map<std::pair<int, Point>, int> per_parent;
  for (const auto& e : f.log) {
    if (++per_parent[{e.level, e.parent}] == 4)
      violate(rep.log_ok, "log: more than 3 deletions in level-" + std::to_string(e.level) + " box " + e.parent.str());
  }

  // (a) members are 0-good and lie in B(0, 2R - L_s).
  for (std::size_t i = 0; i < f.member.size(); ++i) {
    if (!f.member[i]) continue;
    const Point x = f.box(i);
    if (!g.good(0, x)) violate(rep.clause_a, "a: member " + x.str() + " is not 0-good");
    Point far = x;
    for (int a = 0; a < d; ++a) far[a] += f.L0 - 1;
    if (std::max(linf_norm(x), linf_norm(far)) > 2 * f.R - f.Ls)
      violate(rep.clause_a, "a: member " + x.str() + " outside B(0, 2R - L_s)");
  }

  const std::int64_t n = f.Ls / f.L0;
  std::vector<std::size_t> queue;
  std::vector<std::uint8_t> seen, mask;
  const auto gather = [&](const Point& corner, std::int64_t side) {
    mask.assign(static_cast<std::size_t>(ipow(side, d)), 0);
    for_each_point(Box{Point(d), side}, [&](const Point& t) { mask[offset(t, side)] = f.contains(corner + t * f.L0); });
  };

  // (b) each top box: connected, volume ratio at least the bound.
  const double vol_b = static_cast<double>(ipow(n, d));
  for (const auto& z : f.top_boxes) {
    ++rep.boxes_checked;
    gather(z, n);
    const auto cnt = static_cast<double>(std::count(mask.begin(), mask.end(), 1));
    rep.min_density_b = std::min(rep.min_density_b, cnt / vol_b);
    if (!cube_connected(mask, d, n, queue, seen)) violate(rep.clause_b, "b: members in " + z.str() + " disconnected");
    if (cnt < vol_b * rep.f_bound[static_cast<std::size_t>(d)] - 1e-9)
      violate(rep.clause_b, "b: density " + std::to_string(cnt / vol_b) + " in " + z.str() + " below bound");
  }

  // (c) j-slices of x_s + [-L_s, 2 L_s)^d for x_s in B(0, 2R - 3 L_s).
  const std::int64_t mc = floor_div(2 * f.R - 3 * f.Ls, f.Ls);
  if (mc >= 0) {
    const std::int64_t n3 = 3 * n;
    for_each_point(Box{Point(d), 2 * mc + 1}, [&](const Point& t) {
      Point xs = t * f.Ls, lo = t * f.Ls;
      for (int a = 0; a < d; ++a) {
        xs[a] -= mc * f.Ls;
        lo[a] = xs[a] - f.Ls;
      }
      gather(lo, n3);
      const std::vector<std::uint8_t> big = mask;
      for (int j = 2; j <= d; ++j) {
        const double vol = static_cast<double>(ipow(n3, j));
        const double bound = rep.f_bound[static_cast<std::size_t>(j)];
        for (const auto& axes : axis_subsets(d, j)) {
          std::vector<int> rest;
          for (int a = 0; a < d; ++a) {
            if (std::find(axes.begin(), axes.end(), a) == axes.end()) rest.push_back(a);
          }
          const auto total = static_cast<std::size_t>(ipow(n3, d - j));
          const std::size_t want = max_slices_per_box == 0 ? total : std::min(total, max_slices_per_box);
          for (std::size_t k = 0; k < want; ++k) {
            std::size_t si = want == total ? k : k * total / want;
            Point u(d);
            for (auto it = rest.rbegin(); it != rest.rend(); ++it) {
              u[*it] = static_cast<std::int64_t>(si % static_cast<std::size_t>(n3));
              si /= static_cast<std::size_t>(n3);
            }
            std::vector<std::uint8_t> sl(static_cast<std::size_t>(ipow(n3, j)), 0);
            for_each_point(Box{Point(j), n3}, [&](const Point& v) {
              Point q = u;
              for (int b = 0; b < j; ++b) q[axes[static_cast<std::size_t>(b)]] = v[b];
              sl[offset(v, n3)] = big[offset(q, n3)];
            });
            ++rep.slices_checked;
            const auto cnt = static_cast<double>(std::count(sl.begin(), sl.end(), 1));
            auto& mind = rep.min_density_c[static_cast<std::size_t>(j)];
            mind = std::min(mind, cnt / vol);
            const auto where = [&] {
              std::ostringstream os;
              os << "c: x_s=" << xs.str() << " j=" << j << " offset=" << u.str();
              return os.str();
            };
            if (!cube_connected(sl, j, n3, queue, seen)) violate(rep.clause_c, where() + " disconnected");
            if (cnt < vol * bound - 1e-9) violate(rep.clause_c, where() + " below density bound");
          }
        }
      }
    });
  }
  return rep;
}

SpecialComponents special_components(const Config& c, const FatSet& f, std::int64_t L0, double eta) {
  if (L0 != f.L0) throw UsageError("special components: L0 differs from the fat set");
  const int d = c.dim();
  const Window& w = c.window();
  const Config s = restrict_s_r(c, static_cast<double>(L0));
  const double large = 0.75 * eta * static_cast<double>(ipow(L0, d));
  SpecialComponents out;
  out.members = f.members();
  BoxLabeler bl;
  for (const auto& x : out.members) {
    if (!w.covers(Box{x, 3 * L0})) throw UsageError("special components: window does not cover " + x.str() + " + [0, 3 L0)^d");
    const int k = bl.run(s.occupancy(), w, Box{x, L0});
    const auto vols = bl.volumes();
    int chosen = -1;
    for (int lab = 0; lab < k; ++lab) {
      if (static_cast<double>(vols[static_cast<std::size_t>(lab)]) < large) continue;
      if (chosen >= 0) throw ContractViolation("special components: two large components in " + x.str());
      chosen = lab;
    }
    if (chosen < 0) throw ContractViolation("special components: no large component in " + x.str());
    std::vector<std::size_t> sites;
    const auto labels = bl.labels();
    const auto where = bl.sites();
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (labels[p] == chosen) sites.push_back(where[p]);
    }
    std::sort(sites.begin(), sites.end());
    out.sites.push_back(std::move(sites));
  }

  // Adjacent members x, y = x + L0 e_a: C_x and C_y connect inside
  // S cap ((x + [0, 2 L0)^d) cup (y + [0, 2 L0)^d)), a subset of x + [0, 3 L0)^d.
  const std::int64_t side = 3 * L0;
  std::vector<std::uint8_t> mask, seen;
  std::vector<std::size_t> queue;
  std::map<Point, std::size_t> pos;
  for (std::size_t i = 0; i < out.members.size(); ++i) pos[out.members[i]] = i;
  for (std::size_t i = 0; i < out.members.size(); ++i) {
    const Point& x = out.members[i];
    for (int ax = 0; ax < d; ++ax) {
      const auto it = pos.find(x + Point::unit(d, ax) * L0);
      if (it == pos.end()) continue;
      mask.assign(static_cast<std::size_t>(ipow(side, d)), 0);
      for_each_point(Box{Point(d), side}, [&](const Point& t) {
        bool in_x = true, in_y = true;
        for (int a = 0; a < d; ++a) {
          in_x = in_x && t[a] < 2 * L0;
          in_y = in_y && (a == ax ? t[a] >= L0 : t[a] < 2 * L0);
        }
        if ((in_x || in_y) && c.occupied(x + t)) mask[offset(t, side)] = 1;
      });
      // Keep only the component of one C_x site, then test one C_y site.
      const Point px = w.point(out.sites[i].front()), py = w.point(out.sites[it->second].front());
      const auto local = [&](const Point& p) {
        Point t = p - x;
        for (int a = 0; a < d; ++a) {
          if (w.wrap()) t[a] = ((t[a] % w.side()) + w.side()) % w.side();
        }
        return offset(t, side);
      };
      const std::size_t sx = local(px), sy = local(py);
      seen.assign(mask.size(), 0);
      queue.assign(1, sx);
      seen[sx] = 1;
      for (std::size_t h = 0; h < queue.size() && !seen[sy]; ++h) {
        const std::size_t p = queue[h];
        std::size_t st = 1;
        for (int a = d - 1; a >= 0; --a) {
          const auto coord = static_cast<std::int64_t>((p / st) % static_cast<std::size_t>(side));
          if (coord > 0 && mask[p - st] && !seen[p - st]) {
            seen[p - st] = 1;
            queue.push_back(p - st);
          }
          if (coord + 1 < side && mask[p + st] && !seen[p + st]) {
            seen[p + st] = 1;
            queue.push_back(p + st);
          }
          st *= static_cast<std::size_t>(side);
        }
      }
      if (!seen[sy]) {
        out.adjacency_ok = false;
        if (out.failures.size() < 64) out.failures.push_back("C_" + x.str() + " and C_" + it->first.str() + " not connected");
      }
    }
  }
  return out;
}

}  // namespace cpl
