#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpl/config.hpp"

namespace cpl {

struct ComponentStats {
  std::size_t id = 0;  // smallest member site index
  std::size_t volume = 0;
  std::int64_t diameter = 0;        // exact l1 diameter, or a lower bound
  std::int64_t diameter_upper = 0;  // equals `diameter` when exact
  bool diameter_exact = true;
};

class ClusterLabeling {
 public:
  // Component index per site (-1 when unoccupied); components are ordered by id.
  std::vector<std::int32_t> comp;
  std::vector<ComponentStats> components;

  std::int64_t label(std::size_t site) const {
    const auto c = comp[site];
    return c < 0 ? -1 : static_cast<std::int64_t>(components[static_cast<std::size_t>(c)].id);
  }
  std::span<const std::uint32_t> members(std::size_t c) const {
    return std::span(sites_).subspan(offsets_[c], offsets_[c + 1] - offsets_[c]);
  }

 private:
  friend ClusterLabeling label_components(const Config&, bool);
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> sites_;
};

// Union-find labeling of S; diameters are filled when requested.
ClusterLabeling label_components(const Config& c, bool with_diameters = true);

// Exact l1 diameter of a site set by pairwise scan (uses torus distances on wrapped windows).
std::int64_t pairwise_l1_diameter(const Window& w, std::span<const std::uint32_t> sites);

// Sites in components of l1 diameter >= r.
Config restrict_s_r(const Config& c, double r);
Config restrict_s_r(const Config& c, const ClusterLabeling& lab, double r);

struct LargestComponent {
  bool empty = true;
  std::size_t id = 0;
  std::size_t volume = 0;
  bool unique = true;
  std::vector<std::size_t> sites;  // sorted window indices

  bool contains(std::size_t site) const;
};

// Largest component of S within region (the whole window when region is empty);
// ties go to the smallest id.
LargestComponent largest_component(const Config& c, const std::optional<Box>& region);

struct ChemicalDistance {
  std::optional<std::int64_t> value;  // empty means infinity
  bool infinite() const { return !value.has_value(); }
};

ChemicalDistance chemical_distance(const Config& c, const Point& x, const Point& y);

// Graph distances in S (restricted to `mask` sites when given) from source; -1 unreachable.
std::vector<std::int64_t> bfs_distances(const Config& c, std::size_t source,
                                        std::span<const std::uint8_t> mask = {});

// For each unit direction (+e0, -e0, +e1, ...): some k e, 0 <= k <= R, lies in the
// largest component of the window.
std::vector<bool> check_A3(const Config& c, std::int64_t R);

struct A4Result {
  bool holds = true;
  double max_ratio = 0;  // max chemical distance / R over surrogate pairs in B(0, R)
};
A4Result check_A4(const Config& c, std::int64_t R, double C);

struct LocalUniqueness {
  bool exists = false;
  bool unique = true;
};
LocalUniqueness check_local_uniqueness(const Config& c, std::int64_t R);

// Labels occupied sites of a box using only edges inside the box. Buffers are
// reused between calls, so one instance per thread.
class BoxLabeler {
 public:
  // occ is indexed by window sites; returns the number of components.
  int run(std::span<const std::uint8_t> occ, const Window& w, const Box& b);
  // Per box position (row-major), component label or -1.
  std::span<const std::int32_t> labels() const { return labels_; }
  std::span<const std::int32_t> volumes() const { return volumes_; }
  // Window index of each box position.
  std::span<const std::size_t> sites() const { return sites_; }

 private:
  std::vector<std::int32_t> labels_;
  std::vector<std::int32_t> volumes_;
  std::vector<std::size_t> sites_;
  std::vector<std::size_t> queue_;
  std::vector<std::int32_t> padded_;
  std::vector<std::size_t> box_pos_;
};

}  // namespace cpl
