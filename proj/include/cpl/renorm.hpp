#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cpl/config.hpp"

namespace cpl {

// Scales l_k, r_k, L_k. Canonical ladders follow l_k = l0 4^(k^theta),
// r_k = r0 2^(k^theta), L_k = l_{k-1} L_{k-1}; an explicit per-level (l_k, r_k)
// list gives a non-canonical ladder, which only needs 4 r_k <= l_k.
struct ScaleLadder {
  std::int64_t l0 = 0, r0 = 0, L0 = 0;
  int theta_sc = 1;
  std::vector<std::int64_t> l, r, L;
  bool canonical = true;
  bool overflow = false;  // truncated before the requested k_max

  int levels() const { return static_cast<int>(L.size()); }
  int max_level() const { return levels() - 1; }
};

ScaleLadder build_scale_ladder(std::int64_t l0, std::int64_t r0, std::int64_t L0, int theta_sc, int k_max);
ScaleLadder ladder_from_levels(std::int64_t L0, const std::vector<std::pair<std::int64_t, std::int64_t>>& lr);

// Level-0 events at x in G_0 (S_{L0} is computed from the whole window).
bool event_A(const Config& c, const Point& x, std::int64_t L0, double eta);
bool event_B(const Config& c, const Point& x, std::int64_t L0, double eta);
bool event_A_line(const Config& c, const Point& x, std::int64_t L0, double eta);

// One level of the goodness field: boxes corner + L_k t, t in [0, count)^d.
struct LevelGrid {
  Point corner;
  std::int64_t side = 0;
  std::int64_t count = 0;
  std::vector<std::uint8_t> a_bad, b_bad;
  // For bad boxes at level >= 1: child grid indices of the witnessing pair.
  std::vector<std::pair<std::size_t, std::size_t>> a_witness, b_witness;

  std::size_t size() const { return a_bad.size(); }
  bool bad(std::size_t i) const { return a_bad[i] || b_bad[i]; }
  std::size_t index(const Point& box_corner) const;  // kNoSite when not a box of this grid
  Point box(std::size_t i) const;
};

struct GoodnessField {
  std::vector<LevelGrid> levels;
  double eta = 0;
  bool line_variant = false;

  Box region() const { return Box{levels[0].corner, levels[0].side * levels[0].count}; }
  // True when x is a level-k box of the region and it is k-good.
  bool good(int k, const Point& x) const;
};

// region.corner must lie in G_{k_max} and region.side be a multiple of L_{k_max};
// the window must also hold the extra L0 margin the level-0 events read.
GoodnessField classify_good(const Config& c, const ScaleLadder& ladder, double eta, int k_max,
                            bool use_line_variant, const Box& region, int threads = 1);
// Recursion only, from explicit level-0 flags over the region's G_0 grid.
GoodnessField classify_from_level0(const ScaleLadder& ladder, int k_max, const Box& region,
                                   std::vector<std::uint8_t> a_bad0, std::vector<std::uint8_t> b_bad0);

void write_goodness(std::ostream& os, const GoodnessField& g);

struct BadEstimate {
  int k = 0;
  double value = 0;
  double std_error = 0;
  int replicas = 0;
  double envelope = 0;  // reference bound 2 * 2^(-2^k)
};

// P[0 is k-bad] for k = 0..k_max from one set of replicas on region [0, L_{k_max})^d.
std::vector<BadEstimate> estimate_bad_probability(const ModelSpec& spec, const ScaleLadder& ladder, double eta,
                                                  int k_max, int replicas, int threads = 1);

struct Levels {
  int s = 0;
  int r = 0;
  bool canonical = true;
};

Levels compute_levels(const ScaleLadder& ladder, std::int64_t R, double theta_iso, int d);

// Region of G_r boxes with corners in B(0, 3R).
Box h_region(const ScaleLadder& ladder, const Levels& lv, std::int64_t R, int d);

struct EventHResult {
  bool holds = true;
  bool clause_a = true;
  bool clause_b = true;
  std::vector<std::string> failures;  // capped at 64 entries
  std::size_t failure_count = 0;
};

// `field` must come from classify_good on h_region(...) with k_max >= lv.r.
EventHResult check_event_H(const Config& c, const ScaleLadder& ladder, const Levels& lv, std::int64_t R,
                           const GoodnessField& field);

double compute_f_j(double ratio, int j, int theta_sc);

struct Deletion {
  int level = 0;   // i: the parent is a level-i box
  Point parent;    // corner of the level-i box
  char kind = 'a';
  Point corner;    // corner of the deleted box (a G_{i-1} point)
  std::int64_t side = 0;
};

struct FatSet {
  Levels levels;
  std::int64_t R = 0;
  std::int64_t L0 = 0;
  std::int64_t Ls = 0;
  Box region;               // union of the top-level boxes' bounding cube
  std::int64_t count = 0;   // G_0 boxes per axis of region
  std::vector<std::uint8_t> member;
  std::vector<Point> top_boxes;
  std::vector<Deletion> log;

  int dim() const { return region.dim(); }
  std::size_t index(const Point& x) const;  // kNoSite outside the region grid
  bool contains(const Point& x) const;
  Point box(std::size_t i) const;
  std::vector<Point> members() const;
  std::size_t size() const;
};

FatSet build_fat_set(const GoodnessField& g, const ScaleLadder& ladder, const Levels& lv, std::int64_t R);
void write_fat_set(std::ostream& os, const FatSet& f);

struct FatSetReport {
  bool clause_a = true, clause_b = true, clause_c = true, log_ok = true;
  std::vector<std::string> violations;  // capped at 64 entries
  std::size_t violation_count = 0;
  std::size_t boxes_checked = 0, slices_checked = 0;
  // Density bound per j (index j) and the smallest observed densities: the
  // L_s-box volume ratio for clause (b), the slice volume ratio per j for (c).
  std::vector<double> f_bound;
  double min_density_b = 1.0;
  std::vector<double> min_density_c;
  bool passed() const { return clause_a && clause_b && clause_c && log_ok; }
};

// f_j(r0/l0) on canonical ladders; the finite product over the perforated
// levels i < r of (1 - 3 (r_i/l_i)^j) otherwise.
double fat_set_bound(const ScaleLadder& ladder, const Levels& lv, int j);

// max_slices_per_box limits the slices examined per (box, j); 0 means all.
FatSetReport verify_fat_set(const FatSet& f, const ScaleLadder& ladder, const GoodnessField& g,
                            std::size_t max_slices_per_box = 0);

struct SpecialComponents {
  std::vector<Point> members;
  std::vector<std::vector<std::size_t>> sites;  // sorted window indices of C_x
  bool adjacency_ok = true;
  std::vector<std::string> failures;
};

SpecialComponents special_components(const Config& c, const FatSet& f, std::int64_t L0, double eta);

}  // namespace cpl
