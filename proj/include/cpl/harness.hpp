#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cpl/config.hpp"

namespace cpl {

// Every field is a flat `key = value` entry of the config file.
struct ExperimentSpec {
  // model
  std::string model = "bernoulli";
  int d = 2;
  std::int64_t N = 128;
  bool wrap = false;
  std::int64_t low = -64;
  double u = 0.75;
  std::uint64_t seed = 1;
  // renormalization
  std::int64_t L0 = 4;
  std::int64_t l0 = 9;
  std::int64_t r0 = 2;
  int theta_sc = 1;
  std::string ladder;  // explicit "l:r,l:r,..." levels; empty = canonical
  double eta = 0.5;
  bool line_variant = false;
  int level_s = -1;  // < 0: compute from R and theta_iso
  int level_r = -1;
  int h_replicas = 0;  // extra configurations for the P[H] estimate
  int bad_replicas = 20;
  int bad_levels = 1;
  // isoperimetry
  std::int64_t R = 16;
  double theta_iso = 0.5;
  std::size_t iso_budget = 60;
  std::size_t reduction_subsets = 20;
  double a4_C = 4.0;
  // walks
  std::int64_t walk_n = 1000;
  double walk_T = 1.0;
  int walk_replicas = 100;
  std::vector<std::int64_t> msd_times{10, 100, 1000};
  std::int64_t return_n = 64;
  std::vector<std::int64_t> corrector_radii{4, 8, 16};
  double corrector_tol = 1e-8;
  // harness
  int threads = 1;
  std::string out;
  bool check_clusters = false;
  bool check_H = false;
  bool check_fatset = false;
  bool check_iso = false;
  bool check_bad = false;
  bool check_walk = false;
  bool check_return = false;
  bool check_corrector = false;

  ModelSpec model_spec() const;
};

// Rejects unknown keys and malformed values with UsageError.
void set_spec_key(ExperimentSpec& s, const std::string& key, const std::string& value);
std::vector<std::string> spec_keys();  // in write_spec order
ExperimentSpec parse_spec(std::istream& is);
ExperimentSpec load_spec(const std::string& path);
void write_spec(std::ostream& os, const ExperimentSpec& s);
std::string spec_hash(const ExperimentSpec& s);  // FNV-1a of write_spec output, hex

enum class CheckStatus { pass, fail, skipped };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  std::vector<std::pair<std::string, double>> measured;
  std::string note;
};

struct RunReport {
  std::string spec_hash;
  std::string version;
  std::vector<CheckResult> checks;  // one per enabled check, in pipeline order
  std::vector<std::pair<std::string, double>> timings_ms;
  std::string failed_stage;  // empty on success
  std::string error;

  bool passed() const;
  const CheckResult* find(const std::string& name) const;
  double measured(const std::string& check, const std::string& key) const;  // NaN when absent
};

// A module error, tagged with the pipeline stage that raised it.
struct StageError : std::runtime_error {
  enum class Kind { usage, contract, solver, other };
  StageError(std::string stage, Kind kind, const std::string& what);
  std::string stage;
  Kind kind;
};

// Runs sample -> clusters -> H -> fat set -> iso -> bad -> walk -> return -> corrector
// for the enabled checks. With spec.out set, writes CSVs, artifacts and report.txt;
// a failing stage leaves a FAILED marker next to the partial outputs.
RunReport run_experiment(const ExperimentSpec& spec);
void write_report(std::ostream& os, const RunReport& r);

using ParameterGrid = std::vector<std::pair<std::string, std::vector<std::string>>>;

// Cartesian product of the grid, first key slowest. Point i writes to out/point_<i>;
// the points run in parallel and a failing point yields a report with failed_stage set.
std::vector<RunReport> sweep(const ExperimentSpec& base, const ParameterGrid& grid, int threads = 1);
// One row per point: grid values, status, eta_hat, p_H and the minimum iso ratio.
void write_sweep_table(std::ostream& os, const ParameterGrid& grid, const std::vector<RunReport>& reports);

}  // namespace cpl
