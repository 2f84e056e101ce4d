#include "cpl/walk.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "cpl/errors.hpp"
#include "cpl/parallel.hpp"
#include "cpl/rng.hpp"

namespace cpl {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::size_t occupied_index(const Config& c, const Point& x, const char* what) {
  const auto i = c.window().index(x);
  if (!c.occupied(i)) throw UsageError(std::string(what) + ": start site is not occupied");
  return i;
}

// Walker on window indices with the unwrapped displacement.
struct Walker {
  const Config& c;
  int d;
  std::size_t site;
  std::array<std::int64_t, kMaxDim> disp{};

  void step(std::uint64_t seed, std::uint64_t k) {
    const auto dir = static_cast<int>(rng::below(seed, rng::kWalkStep, k, static_cast<std::uint64_t>(2 * d)));
    const int axis = dir / 2, sign = dir % 2 ? 1 : -1;
    const auto y = c.window().neighbor(site, axis, sign);
    if (c.occupied(y)) {
      site = y;
      disp[static_cast<std::size_t>(axis)] += sign;
    }
  }
  double sq() const {
    double s = 0;
    for (int a = 0; a < d; ++a) s += static_cast<double>(disp[static_cast<std::size_t>(a)] * disp[static_cast<std::size_t>(a)]);
    return s;
  }
};

std::vector<double> second_moment(std::span<const double> ends, int d, std::size_t from, std::size_t to,
                                  std::size_t skip_from, std::size_t skip_to) {
  std::vector<double> m(static_cast<std::size_t>(d * d), 0.0);
  std::size_t count = 0;
  for (std::size_t r = from; r < to; ++r) {
    if (r >= skip_from && r < skip_to) continue;
    ++count;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        m[static_cast<std::size_t>(i * d + j)] += ends[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] *
                                                  ends[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
      }
    }
  }
  if (count > 0) {
    for (auto& e : m) e /= static_cast<double>(count);
  }
  return m;
}

Eigen::VectorXd sym_eigenvalues(const std::vector<double>& m, int d) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = m[static_cast<std::size_t>(i * d + j)];
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace

StepDistribution step_distribution(const Config& c, const Point& y) {
  const auto i = occupied_index(c, y, "step_distribution");
  const int d = c.dim();
  StepDistribution dist;
  dist.denominator = 2 * d;
  dist.entries.push_back(StepEntry{y, 2 * d, 0.0});
  for (int a = 0; a < d; ++a) {
    for (int s : {-1, 1}) {
      if (!c.occupied(c.window().neighbor(i, a, s))) continue;
      dist.entries.push_back(StepEntry{y + Point::unit(d, a, s), 1, 0.0});
      --dist.entries[0].numerator;
    }
  }
  for (auto& e : dist.entries) e.probability = static_cast<double>(e.numerator) / dist.denominator;
  return dist;
}

WalkPath simulate_walk(const Config& c, const Point& x0, std::int64_t n, std::uint64_t seed) {
  if (n < 0) throw UsageError("simulate_walk: negative step count");
  Walker w{c, c.dim(), occupied_index(c, x0, "simulate_walk")};
  WalkPath path;
  path.x0 = x0;
  path.seed = seed;
  path.sites.reserve(static_cast<std::size_t>(n + 1));
  path.sites.push_back(x0);
  for (std::int64_t k = 0; k < n; ++k) {
    w.step(seed, static_cast<std::uint64_t>(k));
    Point p = x0;
    for (int a = 0; a < w.d; ++a) p[a] += w.disp[static_cast<std::size_t>(a)];
    path.sites.push_back(p);
  }
  return path;
}

std::vector<double> interpolate(const WalkPath& path, std::int64_t n, double t) {
  if (n <= 0 || t < 0) throw UsageError("interpolate: need n > 0 and t >= 0");
  const double tn = t * static_cast<double>(n);
  const auto k = static_cast<std::int64_t>(std::floor(tn));
  const double frac = tn - static_cast<double>(k);
  if (k > path.steps() || (frac > 0 && k + 1 > path.steps())) throw UsageError("interpolate: t beyond the path");
  const Point& a = path.sites[static_cast<std::size_t>(k)];
  const int d = a.dim();
  std::vector<double> out(static_cast<std::size_t>(d));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < d; ++i) {
    double v = static_cast<double>(a[i]);
    if (frac > 0) v += frac * static_cast<double>(path.sites[static_cast<std::size_t>(k + 1)][i] - a[i]);
    out[static_cast<std::size_t>(i)] = v * scale;
  }
  return out;
}

WalkStats estimate_msd(const Config& c, const Point& x0, std::span<const std::int64_t> times, int replicas,
                       std::uint64_t seed, int threads) {
  if (replicas < 1) throw UsageError("estimate_msd: need at least one replica");
  if (times.empty() || !std::is_sorted(times.begin(), times.end()) || times.front() < 0) {
    throw UsageError("estimate_msd: times must be non-empty, non-negative and increasing");
  }
  const auto start = occupied_index(c, x0, "estimate_msd");
  const std::size_t nt = times.size();
  const auto nr = static_cast<std::size_t>(replicas);
  std::vector<double> sq(nr * nt);
  parallel_for(nr, threads, [&](std::size_t r) {
    const auto s = rng::derive(seed, rng::kReplica, r);
    Walker w{c, c.dim(), start};
    std::int64_t k = 0;
    for (std::size_t t = 0; t < nt; ++t) {
      for (; k < times[t]; ++k) w.step(s, static_cast<std::uint64_t>(k));
      sq[r * nt + t] = w.sq();
    }
  });
  WalkStats st;
  st.d = c.dim();
  st.replicas = replicas;
  st.times.assign(times.begin(), times.end());
  st.msd.assign(nt, 0.0);
  st.msd_stderr.assign(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t) {
    double sum = 0, sum2 = 0;
    for (std::size_t r = 0; r < nr; ++r) {
      sum += sq[r * nt + t];
      sum2 += sq[r * nt + t] * sq[r * nt + t];
    }
    const double mean = sum / static_cast<double>(nr);
    st.msd[t] = mean;
    if (nr > 1) {
      const double var = std::max(0.0, (sum2 - static_cast<double>(nr) * mean * mean) / static_cast<double>(nr - 1));
      st.msd_stderr[t] = std::sqrt(var / static_cast<double>(nr));
    }
  }
  return st;
}

WalkStats estimate_covariance(const Config& c, const Point& x0, std::int64_t n, double T, int replicas,
                              std::uint64_t seed, int threads) {
  if (replicas < 1 || n < 1 || T < 0) throw UsageError("estimate_covariance: need replicas >= 1, n >= 1, T >= 0");
  const auto start = occupied_index(c, x0, "estimate_covariance");
  const int d = c.dim();
  const double tn = T * static_cast<double>(n);
  const auto m = static_cast<std::int64_t>(std::floor(tn));
  const double frac = tn - static_cast<double>(m);
  const auto nr = static_cast<std::size_t>(replicas);
  const auto du = static_cast<std::size_t>(d);
  std::vector<double> ends(nr * du);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  parallel_for(nr, threads, [&](std::size_t r) {
    const auto s = rng::derive(seed, rng::kReplica, r);
    Walker w{c, d, start};
    for (std::int64_t k = 0; k < m; ++k) w.step(s, static_cast<std::uint64_t>(k));
    const auto at_m = w.disp;
    if (frac > 0) w.step(s, static_cast<std::uint64_t>(m));
    for (std::size_t a = 0; a < du; ++a) {
      const double v = static_cast<double>(at_m[a]) + frac * static_cast<double>(w.disp[a] - at_m[a]);
      ends[r * du + a] = v * scale;
    }
  });
  WalkStats st;
  st.d = d;
  st.replicas = replicas;
  st.covariance = second_moment(ends, d, 0, nr, 0, 0);
  st.cov_halfwidth.assign(du * du, 0.0);
  if (nr > 1) {
    for (std::size_t i = 0; i < du; ++i) {
      for (std::size_t j = 0; j < du; ++j) {
        const double mean = st.covariance[i * du + j];
        double var = 0;
        for (std::size_t r = 0; r < nr; ++r) {
          const double e = ends[r * du + i] * ends[r * du + j] - mean;
          var += e * e;
        }
        var /= static_cast<double>(nr - 1);
        st.cov_halfwidth[i * du + j] = kZ95 * std::sqrt(var / static_cast<double>(nr));
      }
    }
  }
  const auto ev = sym_eigenvalues(st.covariance, d);
  st.eigenvalues.assign(ev.data(), ev.data() + d);
  st.min_eigen = ev(0);
  const std::size_t groups = std::min<std::size_t>(20, nr);
  if (groups > 1) {
    std::vector<double> lam(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      lam[g] = sym_eigenvalues(second_moment(ends, d, 0, nr, g * nr / groups, (g + 1) * nr / groups), d)(0);
    }
    const double mean = std::accumulate(lam.begin(), lam.end(), 0.0) / static_cast<double>(groups);
    double var = 0;
    for (double l : lam) var += (l - mean) * (l - mean);
    var *= static_cast<double>(groups - 1) / static_cast<double>(groups);
    st.min_eigen_halfwidth = kZ95 * std::sqrt(var);
  }
  return st;
}

ReturnProfile return_probability(const Config& c, const Point& x, std::int64_t n_max) {
  if (n_max < 0) throw UsageError("return_probability: negative horizon");
  const auto start = occupied_index(c, x, "return_probability");
  const Window& w = c.window();
  const int d = c.dim();
  ReturnProfile rp;
  rp.requested = n_max;
  const std::int64_t half = w.side() / 2;
  const std::int64_t limit = half * half;
  rp.truncated = n_max > limit;
  rp.horizon = std::min(n_max, limit);

  // Cluster of x as a compact graph.
  std::vector<std::int32_t> local(w.size(), -1);
  std::vector<std::size_t> sites{start};
  local[start] = 0;
  for (std::size_t h = 0; h < sites.size(); ++h) {
    for (int a = 0; a < d; ++a) {
      for (int s : {-1, 1}) {
        const auto y = w.neighbor(sites[h], a, s);
        if (c.occupied(y) && local[y] < 0) {
          local[y] = static_cast<std::int32_t>(sites.size());
          sites.push_back(y);
        }
      }
    }
  }
  const std::size_t n = sites.size();
  std::vector<std::uint32_t> first(n + 1, 0), adj;
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      for (int s : {-1, 1}) {
        const auto y = w.neighbor(sites[i], a, s);
        if (c.occupied(y)) adj.push_back(static_cast<std::uint32_t>(local[y]));
      }
    }
    first[i + 1] = static_cast<std::uint32_t>(adj.size());
  }
  const double q = 1.0 / (2.0 * d);
  std::vector<double> cur(n, 0.0), next(n);
  cur[0] = 1.0;
  rp.p.reserve(static_cast<std::size_t>(rp.horizon + 1));
  rp.p.push_back(1.0);
  for (std::int64_t k = 1; k <= rp.horizon; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (auto e = first[i]; e < first[i + 1]; ++e) acc += cur[adj[e]];
      next[i] = cur[i] * (1.0 - (first[i + 1] - first[i]) * q) + acc * q;
    }
    cur.swap(next);
    rp.p.push_back(cur[0]);
  }
  return rp;
}

HeatKernelRange scaled_return_range(const ReturnProfile& r, int d, std::int64_t n_lo, std::int64_t n_hi) {
  if (n_lo < 1 || n_hi < n_lo || 2 * n_hi > r.horizon) throw UsageError("scaled_return_range: range beyond the horizon");
  HeatKernelRange out{std::numeric_limits<double>::infinity(), 0.0};
  for (std::int64_t n = n_lo; n <= n_hi; ++n) {
    const double v = std::pow(static_cast<double>(n), d / 2.0) * r.p[static_cast<std::size_t>(2 * n)];
    out.lo = std::min(out.lo, v);
    out.hi = std::max(out.hi, v);
  }
  return out;
}

}  // namespace cpl
