#include "cpl/samplers.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/parallel.hpp"
#include "cpl/rng.hpp"

namespace cpl {

namespace {

std::mutex fftw_plan_mutex;

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_plan_mutex);
    fftw_destroy_plan(p);
  }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using FftwPlan = std::unique_ptr<fftw_plan_s, PlanDestroy>;

// Eigenvalue of I - P for the mode with integer frequencies of site idx.
double walk_eigenvalue(const Window& w, std::size_t idx) {
  double s = 0;
  for (int a = 0; a < w.dim(); ++a) {
    s += std::cos(2.0 * std::numbers::pi * static_cast<double>(w.coord(idx, a)) /
                  static_cast<double>(w.side()));
  }
  return 1.0 - s / w.dim();
}

void require_torus(const ModelSpec& spec, const char* what) {
  if (!spec.window.wrap()) throw UsageError(std::string(what) + " requires a wrapped window");
}

}  // namespace

Config sample(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::bernoulli: return sample_bernoulli(spec);
    case ModelKind::gff_level: return sample_gff_level_set(spec);
    case ModelKind::interlacement:
    case ModelKind::vacant_interlacement: return sample_interlacement(spec);
    case ModelKind::full: return Config(spec.window, std::vector<std::uint8_t>(spec.window.size(), 1), spec);
    case ModelKind::empty: return Config(spec.window, spec);
  }
  throw UsageError("unknown model");
}

Config sample_bernoulli(const ModelSpec& spec) {
  if (!(spec.u >= 0.0 && spec.u <= 1.0)) throw ParameterError("bernoulli: u must lie in [0, 1]");
  std::vector<std::uint8_t> occ(spec.window.size());
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = rng::uniform(spec.seed, rng::kBernoulli, i) < spec.u;
  return Config(spec.window, std::move(occ), spec);
}

std::vector<double> sample_gff_field(const ModelSpec& spec) {
  require_torus(spec, "gff-level");
  const Window& w = spec.window;
  if (w.dim() < 3 && !spec.gff_allow_low_dim)
    throw ParameterError("gff-level: d >= 3 required (set the low-dimension override for d = 2)");
  const std::size_t n = w.size();
  FftwBuffer buf(fftw_alloc_complex(n));
  std::vector<int> dims(static_cast<std::size_t>(w.dim()), static_cast<int>(w.side()));
  FftwPlan fwd, bwd;
  {
    std::lock_guard lock(fftw_plan_mutex);
    fwd.reset(fftw_plan_dft(w.dim(), dims.data(), buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    bwd.reset(fftw_plan_dft(w.dim(), dims.data(), buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = rng::normal(spec.seed, rng::kGff, i);
    buf[i][1] = 0.0;
  }
  fftw_execute(fwd.get());
  buf[0][0] = buf[0][1] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double s = 1.0 / std::sqrt(walk_eigenvalue(w, i));
    buf[i][0] *= s;
    buf[i][1] *= s;
  }
  fftw_execute(bwd.get());
  std::vector<double> field(n);
  const double norm = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) field[i] = buf[i][0] * norm;
  return field;
}

Config level_set(const std::vector<double>& field, const ModelSpec& spec, double h) {
  if (field.size() != spec.window.size()) throw UsageError("level_set: field size mismatch");
  std::vector<std::uint8_t> occ(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) occ[i] = field[i] >= h;
  ModelSpec p = spec;
  p.u = h;
  return Config(spec.window, std::move(occ), p);
}

Config sample_gff_level_set(const ModelSpec& spec) { return level_set(sample_gff_field(spec), spec, spec.u); }

Config sample_interlacement(const ModelSpec& spec) {
  require_torus(spec, "interlacement");
  const Window& w = spec.window;
  if (w.dim() < 3) throw ParameterError("interlacement: d >= 3 required");
  if (!(spec.u >= 0.0)) throw ParameterError("interlacement: u must be non-negative");
  const auto steps = static_cast<std::uint64_t>(std::floor(spec.u * static_cast<double>(w.size())));
  std::vector<std::uint8_t> occ(w.size(), 0);
  std::size_t pos = rng::below(spec.seed, rng::kInterlacementStart, 0, w.size());
  occ[pos] = 1;
  const auto dirs = static_cast<std::uint64_t>(2 * w.dim());
  for (std::uint64_t t = 0; t < steps; ++t) {
    const auto k = rng::below(spec.seed, rng::kInterlacementStep, t, dirs);
    pos = w.neighbor(pos, static_cast<int>(k / 2), k % 2 ? 1 : -1);
    occ[pos] = 1;
  }
  if (spec.kind == ModelKind::vacant_interlacement) {
    for (auto& b : occ) b ^= 1;
  }
  return Config(w, std::move(occ), spec);
}

std::pair<Config, Config> coupled_pair(const ModelSpec& spec, double u_low, double u_high) {
  if (!(u_low <= u_high)) throw UsageError("coupled_pair: u_low must not exceed u_high");
  ModelSpec lo = spec, hi = spec;
  lo.u = u_low;
  hi.u = u_high;
  if (spec.kind == ModelKind::gff_level) {
    const auto field = sample_gff_field(spec);
    return {level_set(field, spec, u_low), level_set(field, spec, u_high)};
  }
  return {sample(lo), sample(hi)};
}

EtaEstimate estimate_eta(const ModelSpec& spec, int replicas, int threads) {
  if (replicas < 1) throw UsageError("estimate_eta: replicas must be positive");
  const Point origin(spec.dim());
  if (!spec.window.contains(origin)) throw UsageError("estimate_eta: origin outside window");
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(replicas), 0);
  parallel_for(hit.size(), threads, [&](std::size_t j) {
    ModelSpec r = spec;
    r.seed = rng::derive(spec.seed, rng::kReplica, j);
    const Config c = sample(r);
    const auto lc = largest_component(c, std::nullopt);
    hit[j] = !lc.empty && lc.contains(spec.window.index(origin));
  });
  EtaEstimate e;
  e.replicas = replicas;
  std::size_t k = 0;
  for (auto h : hit) k += h;
  e.value = static_cast<double>(k) / replicas;
  e.std_error = std::sqrt(e.value * (1.0 - e.value) / replicas);
  return e;
}

double torus_green(const Window& w, const Point& x) {
  double s = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    double phase = 0;
    for (int a = 0; a < w.dim(); ++a)
      phase += static_cast<double>(w.coord(i, a)) * static_cast<double>(x[a]);
    s += std::cos(2.0 * std::numbers::pi * phase / static_cast<double>(w.side())) / walk_eigenvalue(w, i);
  }
  return s / static_cast<double>(w.size());
}

}  // namespace cpl
