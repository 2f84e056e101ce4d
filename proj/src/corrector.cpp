#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>

#include "cpl/errors.hpp"
#include "cpl/walk.hpp"

namespace cpl {

double CorrectorField::norm(std::size_t i) const {
  double s = 0;
  for (int a = 0; a < d; ++a) s += chi[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] *
                                   chi[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
  return std::sqrt(s);
}

double CorrectorField::max_norm() const {
  double m = 0;
  for (std::size_t i = 0; i < sites.size(); ++i) m = std::max(m, norm(i));
  return m;
}

std::size_t CorrectorField::find(const Point& x) const {
  const auto it = std::lower_bound(sites.begin(), sites.end(), x);
  return it != sites.end() && *it == x ? static_cast<std::size_t>(it - sites.begin()) : kNoSite;
}

CorrectorField estimate_corrector(const Config& c, const Box& sub_window, const Point& anchor, double tolerance) {
  const Window& w = c.window();
  const int d = c.dim();
  if (!w.covers(sub_window) || !sub_window.contains(anchor)) throw UsageError("corrector: sub-window outside the window");
  if (!c.occupied(anchor)) throw UsageError("corrector: anchor is not occupied");
  if (!(tolerance > 0)) throw UsageError("corrector: tolerance must be positive");

  CorrectorField f;
  f.sub_window = sub_window;
  f.anchor = anchor;
  f.d = d;
  // Cluster of the anchor inside the sub-window, in sub-window coordinates.
  std::vector<Point> queue{anchor};
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(sub_window.volume()), 0);
  const auto local = [&](const Point& p) {
    std::size_t o = 0;
    for (int a = 0; a < d; ++a) o = o * static_cast<std::size_t>(sub_window.side) + static_cast<std::size_t>(p[a] - sub_window.corner[a]);
    return o;
  };
  seen[local(anchor)] = 1;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    for (int a = 0; a < d; ++a) {
      for (int s : {-1, 1}) {
        const Point y = queue[h] + Point::unit(d, a, s);
        if (!sub_window.contains(y) || seen[local(y)] || !c.occupied(y)) continue;
        seen[local(y)] = 1;
        queue.push_back(y);
      }
    }
  }
  f.sites = std::move(queue);
  std::sort(f.sites.begin(), f.sites.end());
  const std::size_t n = f.sites.size();
  f.on_face.assign(n, 0);
  std::vector<std::int32_t> unknown(n, -1);
  std::int32_t n_int = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      const auto v = f.sites[i][a] - sub_window.corner[a];
      if (v == 0 || v == sub_window.side - 1) f.on_face[i] = 1;
    }
    if (!f.on_face[i]) unknown[i] = n_int++;
  }

  // Interior rows: deg(x) chi(x) - sum_z chi(z) = sum_z (z - x), chi = 0 on faces.
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_int, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (unknown[i] < 0) continue;
    int deg = 0;
    for (int a = 0; a < d; ++a) {
      for (int s : {-1, 1}) {
        const auto j = f.find(f.sites[i] + Point::unit(d, a, s));
        if (j == kNoSite) continue;
        ++deg;
        rhs(unknown[i], a) += s;
        if (unknown[j] >= 0) trip.emplace_back(unknown[i], unknown[j], -1.0);
      }
    }
    trip.emplace_back(unknown[i], unknown[i], static_cast<double>(deg));
  }
  Eigen::SparseMatrix<double> A(n_int, n_int);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::MatrixXd sol = Eigen::MatrixXd::Zero(n_int, d);
  if (n_int > 0) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * static_cast<Eigen::Index>(n_int)));
    cg.compute(A);
    for (int a = 0; a < d; ++a) {
      const double bnorm = rhs.col(a).norm();
      if (bnorm == 0) continue;
      cg.setTolerance(std::max(1e-15, 0.05 * tolerance / bnorm));
      sol.col(a) = cg.solve(rhs.col(a));
      f.iterations = std::max(f.iterations, static_cast<int>(cg.iterations()));
    }
  }

  f.chi.assign(n * static_cast<std::size_t>(d), 0.0);
  const auto du = static_cast<std::size_t>(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (unknown[i] >= 0) {
      for (std::size_t a = 0; a < du; ++a) f.chi[i * du + a] = sol(unknown[i], static_cast<Eigen::Index>(a));
    }
  }
  // Harmonicity residual of phi = x + chi under the kernel, before the anchor shift.
  const double q = 1.0 / (2.0 * d);
  for (std::size_t i = 0; i < n; ++i) {
    if (unknown[i] < 0) continue;
    for (int a = 0; a < d; ++a) {
      double r = 0;
      for (int b = 0; b < d; ++b) {
        for (int s : {-1, 1}) {
          const auto j = f.find(f.sites[i] + Point::unit(d, b, s));
          if (j == kNoSite) continue;
          r += q * ((b == a ? s : 0) + f.chi[j * du + static_cast<std::size_t>(a)] - f.chi[i * du + static_cast<std::size_t>(a)]);
        }
      }
      f.residual = std::max(f.residual, std::abs(r));
    }
  }
  if (f.residual > tolerance) throw SolverError("corrector: harmonicity residual above tolerance", f.residual);
  const auto ia = f.find(anchor);
  std::vector<double> shift(f.chi.begin() + static_cast<std::ptrdiff_t>(ia * du),
                            f.chi.begin() + static_cast<std::ptrdiff_t>((ia + 1) * du));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < du; ++a) f.chi[i * du + a] -= shift[a];
  }
  return f;
}

SublinearityReport check_corrector_sublinearity(std::span<const CorrectorField> fields) {
  if (fields.size() < 3) throw UsageError("sublinearity: need at least three nested radii");
  std::vector<const CorrectorField*> order;
  for (const auto& f : fields) order.push_back(&f);
  std::sort(order.begin(), order.end(), [](auto a, auto b) { return a->sub_window.side < b->sub_window.side; });
  SublinearityReport rep;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i]->anchor != order[0]->anchor) throw UsageError("sublinearity: fields must share one anchor");
    if (i > 0 && order[i]->sub_window.side == order[i - 1]->sub_window.side) throw UsageError("sublinearity: repeated radius");
    const std::int64_t k = (order[i]->sub_window.side - 1) / 2;
    rep.radii.push_back(k);
    rep.m.push_back(order[i]->max_norm() / static_cast<double>(std::max<std::int64_t>(k, 1)));
  }
  for (std::size_t i = 1; i < rep.m.size(); ++i) rep.decreasing_pairs += rep.m[i] <= rep.m[i - 1];
  rep.top_doubling_decreases = rep.m.back() <= rep.m[rep.m.size() - 2];
  if (std::all_of(rep.m.begin(), rep.m.end(), [](double v) { return v > 0; })) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(rep.m.size());
    for (std::size_t i = 0; i < rep.m.size(); ++i) {
      const double x = std::log(static_cast<double>(rep.radii[i])), y = std::log(rep.m[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    rep.log_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return rep;
}

double corrector_shift_consistency(const Config& c, const Point& anchor, const Point& y, std::int64_t k,
                                   double tolerance) {
  const auto fa = estimate_corrector(c, linf_ball(anchor, static_cast<double>(k)), anchor, tolerance);
  const auto fy = estimate_corrector(c, linf_ball(y, static_cast<double>(k)), y, tolerance);
  const auto iy = fa.find(y);
  if (iy == kNoSite) throw UsageError("shift consistency: y is not in the anchor's cluster");
  const auto d = static_cast<std::size_t>(c.dim());
  const Box near = linf_ball(y, static_cast<double>(std::max<std::int64_t>(1, k / 4)));
  double worst = 0;
  for (std::size_t j = 0; j < fy.sites.size(); ++j) {
    if (!near.contains(fy.sites[j])) continue;
    const auto i = fa.find(fy.sites[j]);
    if (i == kNoSite) continue;
    double s = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const double diff = fa.chi[i * d + a] - fa.chi[iy * d + a] - fy.chi[j * d + a];
      s += diff * diff;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst / static_cast<double>(k);
}

}  // namespace cpl
