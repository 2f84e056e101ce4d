#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpl/config.hpp"

namespace cpl {

// Lazy walk kernel at y: each occupied neighbour gets 1/(2d), y keeps
// 1 - deg(y)/(2d). Probabilities are numerator / denominator exactly.
struct StepEntry {
  Point site;
  int numerator = 0;
  double probability = 0;
};

struct StepDistribution {
  int denominator = 0;             // 2d
  std::vector<StepEntry> entries;  // entries[0] is y itself, then occupied neighbours
};

StepDistribution step_distribution(const Config& c, const Point& y);

// Sites X_0..X_n. On wrapped windows coordinates are lifted to Z^d, so
// displacements are unwrapped; window.reduce(site) is the occupied site.
struct WalkPath {
  std::vector<Point> sites;
  Point x0;
  std::uint64_t seed = 0;

  std::int64_t steps() const { return static_cast<std::int64_t>(sites.size()) - 1; }
};

WalkPath simulate_walk(const Config& c, const Point& x0, std::int64_t n, std::uint64_t seed);

// (1/sqrt n) (X_[tn] + (tn - [tn]) (X_[tn]+1 - X_[tn])).
std::vector<double> interpolate(const WalkPath& path, std::int64_t n, double t);

struct WalkStats {
  int d = 0;
  int replicas = 0;
  std::vector<std::int64_t> times;
  std::vector<double> msd, msd_stderr;
  // Second moment of B_n(T), row-major d x d, with 95% half-widths.
  std::vector<double> covariance, cov_halfwidth;
  std::vector<double> eigenvalues;  // ascending
  double min_eigen = 0, min_eigen_halfwidth = 0;
};

// Mean squared displacement at the given (increasing) times.
WalkStats estimate_msd(const Config& c, const Point& x0, std::span<const std::int64_t> times, int replicas,
                       std::uint64_t seed, int threads = 1);

// E[B_n(T) B_n(T)^T] over replicas; the smallest eigenvalue half-width comes from a
// 20-group jackknife.
WalkStats estimate_covariance(const Config& c, const Point& x0, std::int64_t n, double T, int replicas,
                              std::uint64_t seed, int threads = 1);

struct ReturnProfile {
  std::vector<double> p;    // p[k] = P_x[X_k = x], k = 0..horizon
  std::int64_t requested = 0;
  std::int64_t horizon = 0;  // last computed k
  bool truncated = false;    // requested beyond (N/2)^2, where diffusive spread reaches the window scale
};

// Exact forward convolution of the kernel on the window.
ReturnProfile return_probability(const Config& c, const Point& x, std::int64_t n_max);

struct HeatKernelRange {
  double lo = 0, hi = 0;  // min / max of n^(d/2) p_2n over [n_lo, n_hi]
  double ratio() const { return lo > 0 ? hi / lo : 0.0; }
};

HeatKernelRange scaled_return_range(const ReturnProfile& r, int d, std::int64_t n_lo, std::int64_t n_hi);

// phi = x + chi harmonic for the kernel at interior sites of the anchor's cluster
// inside the sub-window, phi = x on cluster sites lying on the sub-window faces;
// chi is then shifted so chi(anchor) = 0.
struct CorrectorField {
  Box sub_window;
  Point anchor;
  int d = 0;
  std::vector<Point> sites;          // sorted
  std::vector<std::uint8_t> on_face;  // Dirichlet sites
  std::vector<double> chi;            // sites.size() x d, row-major
  double residual = 0;                // max interior |sum_z P(x,z)(phi(z) - phi(x))|
  int iterations = 0;
  std::string boundary_condition = "phi = x on the sub-window faces";

  double norm(std::size_t i) const;  // Euclidean |chi(sites[i])|
  double max_norm() const;
  std::size_t find(const Point& x) const;  // kNoSite when absent
};

CorrectorField estimate_corrector(const Config& c, const Box& sub_window, const Point& anchor, double tolerance);

struct SublinearityReport {
  std::vector<std::int64_t> radii;
  std::vector<double> m;  // max |chi| / k
  std::size_t decreasing_pairs = 0;
  bool top_doubling_decreases = false;
  double log_slope = 0;  // least-squares slope of log m_k against log k
};

// Fields on nested boxes around one anchor; k is each sub-window's half-width.
SublinearityReport check_corrector_sublinearity(std::span<const CorrectorField> fields);

// max over x near y of |chi_a(x) - chi_a(y) - chi_y(x)| / k, where chi_a is anchored at
// `anchor` on B(anchor, k) and chi_y at y on B(y, k).
double corrector_shift_consistency(const Config& c, const Point& anchor, const Point& y, std::int64_t k,
                                   double tolerance);

}  // namespace cpl
