#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpl/config.hpp"
#include "cpl/renorm.hpp"

namespace cpl {

// Sorted, deduplicated window indices of occupied sites of one Config.
using SiteSet = std::vector<std::size_t>;

inline constexpr double kNoRatio = std::numeric_limits<double>::infinity();

SiteSet make_site_set(const Config& c, const std::vector<Point>& pts);

// Lattice edges between A and S \ A; throws UsageError unless A is a subset of S.
std::int64_t edge_boundary(const Config& c, std::span<const std::size_t> a);
std::vector<std::pair<std::size_t, std::size_t>> boundary_edges(const Config& c, std::span<const std::size_t> a);

// |boundary| / |A|^((d-1)/d).
double iso_ratio(std::int64_t boundary, std::int64_t size, int d);
// ceil(R^theta_iso).
std::int64_t size_floor(std::int64_t R, double theta_iso);

// C_R: the largest component of S inside B(0, R).
SiteSet ball_component(const Config& c, std::int64_t R);

struct ExactResult {
  bool found = false;
  double ratio = kNoRatio;
  std::int64_t boundary = 0;
  SiteSet witness;
  std::size_t ground = 0;
  bool connected_only = false;  // minimum over connected subsets only
  std::uint64_t subsets = 0;
};

// Minimum ratio over subsets A of S cap region with floor <= |A| <= cap (cap < 0:
// half the ground set). Exhaustive up to 24 sites, connected subsets up to 64.
ExactResult exact_min_ratio(const Config& c, const Box& region, std::int64_t floor, std::int64_t cap = -1);

struct IsoCandidate {
  std::string method;  // ball, sweep, greedy
  std::int64_t size = 0;
  std::int64_t boundary = 0;
  double ratio = kNoRatio;
};

struct ProfileOptions {
  std::int64_t floor = 1;
  std::int64_t cap = -1;  // < 0: half the ground set
  std::size_t budget = 300;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct IsoperimetryReport {
  std::size_t candidates = 0;
  double min_ratio = kNoRatio;
  IsoCandidate best;
  SiteSet argmin;
  std::int64_t floor = 0;
  std::int64_t cap = 0;
  bool fiedler_converged = false;
  std::vector<IsoCandidate> records;  // every examined candidate, in a fixed order
};

// Candidate families: chemical balls, sweeps of the second eigenvector of the
// walk operator on the ground set, steepest-descent add/remove local search.
IsoperimetryReport heuristic_profile(const Config& c, std::span<const std::size_t> ground, const ProfileOptions& opt);

// Coarse reduction of a subset A of C_R to the fat set.
struct Reduction {
  std::vector<Point> M;  // members x with C_x meeting A
  SiteSet D;             // x in A with some y in C_2R \ A, |x - y|_inf <= 2 L_s
};

struct ReductionReport {
  std::int64_t size = 0, boundary = 0;
  std::int64_t m_size = 0, m_boundary = 0, d_size = 0;
  double lower_bound = 0;      // max(|bd_G M| / (d 2^d), |D| / (11 L_s)^d)
  double volume_bound = 0;     // 6^d L0^d |M| + |D|
  bool boundary_ok = true;     // |bd_S A| >= lower_bound
  bool volume_ok = true;       // |A| <= volume_bound
  double coarse_gamma = kNoRatio;  // |bd_G M| / |M|^((d-1)/d)
  bool conditioned = false;    // event H was verified for the configuration
};

class ReductionContext {
 public:
  ReductionContext(const Config& c, const FatSet& f, double eta);

  const SiteSet& c_R() const { return c_r_; }
  const SiteSet& c_2R() const { return c_2r_; }
  const SpecialComponents& special() const { return special_; }
  const FatSet& fat_set() const { return f_; }

  Reduction map(std::span<const std::size_t> a) const;
  ReductionReport check(std::span<const std::size_t> a, bool h_verified) const;
  // Edges of G_0 with both ends in G and exactly one in m.
  std::int64_t coarse_boundary(const std::vector<Point>& m) const;

 private:
  const Config& c_;
  const FatSet& f_;
  SpecialComponents special_;
  SiteSet c_r_, c_2r_;
  std::vector<std::int32_t> owner_;  // window site -> member index of its C_x, or -1
  Box table_box_;
  std::vector<std::uint8_t> in_c2r_;
};

Reduction map_MA_DA(const Config& c, const FatSet& f, std::span<const std::size_t> a, double eta);
ReductionReport check_reduction_inequalities(const Config& c, const FatSet& f, std::span<const std::size_t> a,
                                             double eta, bool h_verified);

// L_s-boxes of the top-level grid where the coarse set fills at least half of (L_s/L0)^d.
std::vector<Point> coarse_density_boxes(const FatSet& f, const std::vector<Point>& a_coarse);

struct SliceBoxProfile {
  std::size_t boxes = 0, subsets = 0;
  double min_scaled_boundary = kNoRatio;  // min |bd_g a| / (L_s/L0)^(d-1)
};

// Coarse boundaries inside g = G cap (x + [-L_s, 2 L_s)^d) for admissible subsets a with
// |a| in [(1/2) n^d, (3^d - 1/2) n^d], n = L_s/L0: half-space cuts and coarse balls.
SliceBoxProfile slice_box_profile(const FatSet& f, std::uint64_t seed, std::size_t balls_per_box = 8);

}  // namespace cpl
