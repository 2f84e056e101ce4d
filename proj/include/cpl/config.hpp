#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpl/lattice.hpp"

namespace cpl {

// `full` and `empty` are deterministic reference models used by checks.
enum class ModelKind { bernoulli, gff_level, interlacement, vacant_interlacement, full, empty };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct ModelSpec {
  ModelKind kind = ModelKind::bernoulli;
  double u = 0.5;
  Window window;
  std::uint64_t seed = 0;
  // Allow the zero-mode-removed torus field in d = 2.
  bool gff_allow_low_dim = false;

  int dim() const { return window.dim(); }
};

// Occupancy field on a window; one byte per site (0 or 1), row-major.
class Config {
 public:
  Config() = default;
  Config(Window w, ModelSpec provenance);
  Config(Window w, std::vector<std::uint8_t> occupancy, ModelSpec provenance);

  const Window& window() const { return window_; }
  const ModelSpec& provenance() const { return provenance_; }
  int dim() const { return window_.dim(); }
  std::size_t size() const { return occ_.size(); }

  bool occupied(std::size_t idx) const { return idx != kNoSite && occ_[idx] != 0; }
  bool occupied(const Point& p) const { return occupied(window_.index(p)); }
  void set(std::size_t idx, bool v) { occ_[idx] = v ? 1 : 0; }
  void set(const Point& p, bool v);

  std::span<const std::uint8_t> occupancy() const { return occ_; }
  std::size_t count() const;
  // Occupied lattice neighbours of an occupied or unoccupied site.
  int degree(std::size_t idx) const;

  bool operator==(const Config& o) const { return window_ == o.window_ && occ_ == o.occ_; }

 private:
  Window window_;
  std::vector<std::uint8_t> occ_;
  ModelSpec provenance_;
};

// Text raster: one header line
//   cpl-config 1 d=<d> N=<N> wrap=<0|1> low=<low> kind=<kind> u=<u> seed=<seed>
// followed by N^(d-1) lines of N characters '0'/'1' in row-major order.
void write_config(std::ostream& os, const Config& c);
Config read_config(std::istream& is);
void save_config(const std::string& path, const Config& c);
Config load_config(const std::string& path);

}  // namespace cpl
