#include "cpl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/iso.hpp"
#include "cpl/parallel.hpp"
#include "cpl/renorm.hpp"
#include "cpl/rng.hpp"
#include "cpl/samplers.hpp"
#include "cpl/walk.hpp"

#ifndef CPL_VERSION
#define CPL_VERSION "0.0.0"
#endif

namespace cpl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest round-trip text for doubles; plain decimal for integers.
std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_number(const std::string& key, std::string_view v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw UsageError("spec: bad value '" + std::string(v) + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw UsageError("spec: bad boolean '" + std::string(v) + "' for key '" + key + "'");
}

std::vector<std::int64_t> parse_list(const std::string& key, std::string_view v) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = std::min(v.find(',', pos), v.size());
    out.push_back(parse_number<std::int64_t>(key, trim(v.substr(pos, comma - pos))));
    pos = comma + 1;
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

template <class T>
Field field(const char* key, T ExperimentSpec::*m) {
  Field f;
  f.key = key;
  if constexpr (std::is_same_v<T, bool>) {
    f.set = [m, k = f.key](ExperimentSpec& s, const std::string& v) { s.*m = parse_bool(k, v); };
    f.get = [m](const ExperimentSpec& s) { return std::string(s.*m ? "1" : "0"); };
  } else if constexpr (std::is_same_v<T, std::string>) {
    f.set = [m](ExperimentSpec& s, const std::string& v) { s.*m = v; };
    f.get = [m](const ExperimentSpec& s) { return s.*m; };
  } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
    f.set = [m, k = f.key](ExperimentSpec& s, const std::string& v) { s.*m = parse_list(k, v); };
    f.get = [m](const ExperimentSpec& s) {
      std::string out;
      for (std::size_t i = 0; i < (s.*m).size(); ++i) out += (i ? "," : "") + std::to_string((s.*m)[i]);
      return out;
    };
  } else if constexpr (std::is_floating_point_v<T>) {
    f.set = [m, k = f.key](ExperimentSpec& s, const std::string& v) { s.*m = parse_number<T>(k, v); };
    f.get = [m](const ExperimentSpec& s) { return fmt(s.*m); };
  } else {
    f.set = [m, k = f.key](ExperimentSpec& s, const std::string& v) { s.*m = parse_number<T>(k, v); };
    f.get = [m](const ExperimentSpec& s) { return std::to_string(s.*m); };
  }
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all{
      field("model", &ExperimentSpec::model),
      field("d", &ExperimentSpec::d),
      field("N", &ExperimentSpec::N),
      field("wrap", &ExperimentSpec::wrap),
      field("low", &ExperimentSpec::low),
      field("u", &ExperimentSpec::u),
      field("seed", &ExperimentSpec::seed),
      field("L0", &ExperimentSpec::L0),
      field("l0", &ExperimentSpec::l0),
      field("r0", &ExperimentSpec::r0),
      field("theta_sc", &ExperimentSpec::theta_sc),
      field("ladder", &ExperimentSpec::ladder),
      field("eta", &ExperimentSpec::eta),
      field("line_variant", &ExperimentSpec::line_variant),
      field("level_s", &ExperimentSpec::level_s),
      field("level_r", &ExperimentSpec::level_r),
      field("h_replicas", &ExperimentSpec::h_replicas),
      field("bad_replicas", &ExperimentSpec::bad_replicas),
      field("bad_levels", &ExperimentSpec::bad_levels),
      field("R", &ExperimentSpec::R),
      field("theta_iso", &ExperimentSpec::theta_iso),
      field("iso_budget", &ExperimentSpec::iso_budget),
      field("reduction_subsets", &ExperimentSpec::reduction_subsets),
      field("a4_C", &ExperimentSpec::a4_C),
      field("walk_n", &ExperimentSpec::walk_n),
      field("walk_T", &ExperimentSpec::walk_T),
      field("walk_replicas", &ExperimentSpec::walk_replicas),
      field("msd_times", &ExperimentSpec::msd_times),
      field("return_n", &ExperimentSpec::return_n),
      field("corrector_radii", &ExperimentSpec::corrector_radii),
      field("corrector_tol", &ExperimentSpec::corrector_tol),
      field("threads", &ExperimentSpec::threads),
      field("out", &ExperimentSpec::out),
      field("check_clusters", &ExperimentSpec::check_clusters),
      field("check_H", &ExperimentSpec::check_H),
      field("check_fatset", &ExperimentSpec::check_fatset),
      field("check_iso", &ExperimentSpec::check_iso),
      field("check_bad", &ExperimentSpec::check_bad),
      field("check_walk", &ExperimentSpec::check_walk),
      field("check_return", &ExperimentSpec::check_return),
      field("check_corrector", &ExperimentSpec::check_corrector),
  };
  return all;
}

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    default: return "SKIP";
  }
}

ScaleLadder make_ladder(const ExperimentSpec& s, int k_max) {
  if (s.ladder.empty()) return build_scale_ladder(s.l0, s.r0, s.L0, s.theta_sc, k_max);
  std::vector<std::pair<std::int64_t, std::int64_t>> lr;
  std::stringstream ss(s.ladder);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("spec: ladder entries are l:r pairs");
    lr.emplace_back(parse_number<std::int64_t>("ladder", trim(item.substr(0, colon))),
                    parse_number<std::int64_t>("ladder", trim(item.substr(colon + 1))));
  }
  return ladder_from_levels(s.L0, lr);
}

// Output sink that is a no-op without an output directory.
class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  bool enabled() const { return !dir_.empty(); }
  void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    if (dir_.empty()) return;
    std::ofstream os(std::filesystem::path(dir_) / name, std::ios::binary);
    if (!os) throw UsageError("cannot write " + (std::filesystem::path(dir_) / name).string());
    body(os);
  }
  void remove(const std::string& name) const {
    if (!dir_.empty()) std::filesystem::remove(std::filesystem::path(dir_) / name);
  }

 private:
  std::string dir_;
};

// Site of the largest cluster of B(0, R) closest to the origin (l1, then index).
Point walk_start(const Config& c, const SiteSet& cr) {
  if (cr.empty()) throw UsageError("no occupied cluster in B(0, R)");
  const Window& w = c.window();
  return w.point(*std::min_element(cr.begin(), cr.end(), [&](auto a, auto b) {
    const auto na = l1_norm(w.point(a)), nb = l1_norm(w.point(b));
    return na != nb ? na < nb : a < b;
  }));
}

// Sites of cr within chemical distance t of centre, computed inside cr.
SiteSet chemical_ball(const Config& c, const SiteSet& cr, std::size_t centre, std::int64_t t) {
  std::vector<std::uint8_t> mask(c.size(), 0);
  for (auto s : cr) mask[s] = 1;
  const auto dist = bfs_distances(c, centre, mask);
  SiteSet out;
  for (auto s : cr) {
    if (dist[s] >= 0 && dist[s] <= t) out.push_back(s);
  }
  return out;
}

}  // namespace

ModelSpec ExperimentSpec::model_spec() const {
  ModelSpec m;
  m.kind = parse_model_kind(model);
  m.u = u;
  m.window = Window(d, N, wrap, low);
  m.seed = seed;
  return m;
}

void set_spec_key(ExperimentSpec& s, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(s, trim(value));
      return;
    }
  }
  throw UsageError("spec: unknown key '" + key + "'");
}

std::vector<std::string> spec_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

ExperimentSpec parse_spec(std::istream& is) {
  ExperimentSpec s;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError("spec line " + std::to_string(lineno) + ": expected key = value");
    set_spec_key(s, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open spec file " + path);
  return parse_spec(is);
}

void write_spec(std::ostream& os, const ExperimentSpec& s) {
  for (const auto& f : fields()) os << f.key << " = " << f.get(s) << '\n';
}

std::string spec_hash(const ExperimentSpec& s) {
  std::ostringstream os;
  write_spec(os, s);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool RunReport::passed() const {
  return failed_stage.empty() &&
         std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::fail; });
}

const CheckResult* RunReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

double RunReport::measured(const std::string& check, const std::string& key) const {
  if (const auto* c = find(check)) {
    for (const auto& [k, v] : c->measured) {
      if (k == key) return v;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

StageError::StageError(std::string stage_, Kind kind_, const std::string& what)
    : std::runtime_error(stage_ + ": " + what), stage(std::move(stage_)), kind(kind_) {}

void write_report(std::ostream& os, const RunReport& r) {
  os << "cpl-report 1\n";
  os << "version " << r.version << '\n';
  os << "spec_hash " << r.spec_hash << '\n';
  for (const auto& c : r.checks) {
    os << "check " << c.name << ' ' << status_name(c.status);
    for (const auto& [k, v] : c.measured) os << ' ' << k << '=' << fmt(v);
    if (!c.note.empty()) os << " note=\"" << c.note << '"';
    os << '\n';
  }
  if (!r.failed_stage.empty()) os << "failed " << r.failed_stage << " \"" << r.error << "\"\n";
  for (const auto& [k, v] : r.timings_ms) os << "timing " << k << ' ' << fmt(v) << " ms\n";
  os << "result " << (r.passed() ? "PASS" : "FAIL") << '\n';
}

RunReport run_experiment(const ExperimentSpec& spec) {
  RunReport rep;
  rep.spec_hash = spec_hash(spec);
  rep.version = std::string("cpl ") + CPL_VERSION;
  const Outputs out(spec.out);
  out.remove("FAILED");
  out.write("spec.txt", [&](std::ostream& os) { write_spec(os, spec); });

  const auto stage = [&](const char* name, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const UsageError& e) {
      throw StageError(name, StageError::Kind::usage, e.what());
    } catch (const ParameterError& e) {
      throw StageError(name, StageError::Kind::usage, e.what());
    } catch (const ContractViolation& e) {
      throw StageError(name, StageError::Kind::contract, e.what());
    } catch (const SolverError& e) {
      throw StageError(name, StageError::Kind::solver, e.what());
    } catch (const std::exception& e) {
      throw StageError(name, StageError::Kind::other, e.what());
    }
    rep.timings_ms.emplace_back(name, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  };

  try {
    Config c;
    SiteSet cr;
    stage("sample", [&] {
      if (spec.threads < 1) throw UsageError("spec: threads must be positive");
      c = sample(spec.model_spec());
      cr = ball_component(c, spec.R);
      out.write("config.txt", [&](std::ostream& os) { write_config(os, c); });
    });

    if (spec.check_clusters) {
      stage("clusters", [&] {
        CheckResult r;
        r.name = "clusters";
        const auto lc = largest_component(c, std::nullopt);
        const double eta_hat = static_cast<double>(lc.volume) / static_cast<double>(c.size());
        const auto a3 = check_A3(c, spec.R);
        const auto a4 = check_A4(c, spec.R, spec.a4_C);
        const auto lu = check_local_uniqueness(c, spec.R);
        const bool a3_ok = std::all_of(a3.begin(), a3.end(), [](bool b) { return b; });
        r.measured = {{"occupied", static_cast<double>(c.count())}, {"largest", static_cast<double>(lc.volume)},
                      {"eta_hat", eta_hat},                       {"C_R", static_cast<double>(cr.size())},
                      {"A3", a3_ok ? 1.0 : 0.0},                   {"A4", a4.holds ? 1.0 : 0.0},
                      {"A4_max_ratio", a4.max_ratio},              {"unique", lu.exists && lu.unique ? 1.0 : 0.0}};
        r.status = a3_ok && a4.holds && lu.exists && lu.unique ? CheckStatus::pass : CheckStatus::fail;
        out.write("clusters.csv", [&](std::ostream& os) {
          os << "metric,value\n";
          for (const auto& [k, v] : r.measured) os << k << ',' << fmt(v) << '\n';
        });
        rep.checks.push_back(std::move(r));
      });
    }

    // Renormalization state shared by H, fat set and reduction checks.
    ScaleLadder ladder;
    Levels lv;
    GoodnessField field;
    bool h_holds = false;
    FatSet fat;
    bool fat_ok = false;
    const bool need_h = spec.check_H || spec.check_fatset;
    if (need_h) {
      stage("H", [&] {
        CheckResult r;
        r.name = "H";
        if (spec.level_s >= 0) {
          ladder = make_ladder(spec, spec.level_s);
          if (spec.level_r < 0 || spec.level_r > spec.level_s || ladder.max_level() < spec.level_s) {
            throw UsageError("spec: level_r must lie in [0, level_s] within the ladder");
          }
          lv = Levels{spec.level_s, spec.level_r, false};
        } else {
          ladder = make_ladder(spec, 4);
          lv = compute_levels(ladder, spec.R, spec.theta_iso, spec.d);
        }
        const Box region = h_region(ladder, lv, spec.R, spec.d);
        field = classify_good(c, ladder, spec.eta, lv.r, spec.line_variant, region, spec.threads);
        const auto h = check_event_H(c, ladder, lv, spec.R, field);
        h_holds = h.holds;
        r.measured = {{"s", static_cast<double>(lv.s)},
                      {"r", static_cast<double>(lv.r)},
                      {"L_s", static_cast<double>(ladder.L[static_cast<std::size_t>(lv.s)])},
                      {"holds", h.holds ? 1.0 : 0.0},
                      {"clause_a", h.clause_a ? 1.0 : 0.0},
                      {"clause_b", h.clause_b ? 1.0 : 0.0},
                      {"failures", static_cast<double>(h.failure_count)}};
        if (spec.h_replicas > 0) {
          std::vector<std::uint8_t> holds(static_cast<std::size_t>(spec.h_replicas), 0);
          parallel_for(holds.size(), spec.threads, [&](std::size_t i) {
            ModelSpec ms = spec.model_spec();
            ms.seed = rng::derive(spec.seed, rng::kReplica, i);
            const Config ci = sample(ms);
            const auto fi = classify_good(ci, ladder, spec.eta, lv.r, spec.line_variant, region, 1);
            holds[i] = check_event_H(ci, ladder, lv, spec.R, fi).holds;
          });
          r.measured.emplace_back("p_H", static_cast<double>(std::count(holds.begin(), holds.end(), 1)) /
                                             static_cast<double>(holds.size()));
        }
        r.status = h.holds ? CheckStatus::pass : CheckStatus::fail;
        if (!lv.canonical) r.note = "levels overridden";
        out.write("goodness.txt", [&](std::ostream& os) { write_goodness(os, field); });
        out.write("H.csv", [&](std::ostream& os) {
          os << "metric,value\n";
          for (const auto& [k, v] : r.measured) os << k << ',' << fmt(v) << '\n';
          for (const auto& f : h.failures) os << "failure,\"" << f << "\"\n";
        });
        if (spec.check_H) rep.checks.push_back(std::move(r));
      });
    }

    if (spec.check_fatset) {
      stage("fatset", [&] {
        CheckResult r;
        r.name = "fatset";
        if (!h_holds) {
          r.status = CheckStatus::skipped;
          r.note = "event H does not hold";
          rep.checks.push_back(std::move(r));
          return;
        }
        fat = build_fat_set(field, ladder, lv, spec.R);
        const auto v = verify_fat_set(fat, ladder, field);
        const auto sc = special_components(c, fat, ladder.L0, spec.eta);
        fat_ok = v.passed() && sc.failures.empty();
        r.measured = {{"members", static_cast<double>(fat.size())},
                      {"deletions", static_cast<double>(fat.log.size())},
                      {"clause_a", v.clause_a ? 1.0 : 0.0},
                      {"clause_b", v.clause_b ? 1.0 : 0.0},
                      {"clause_c", v.clause_c ? 1.0 : 0.0},
                      {"log_ok", v.log_ok ? 1.0 : 0.0},
                      {"min_density_b", v.min_density_b},
                      {"bound_d", v.f_bound[static_cast<std::size_t>(spec.d)]},
                      {"special_ok", sc.failures.empty() ? 1.0 : 0.0},
                      {"adjacency_ok", sc.adjacency_ok ? 1.0 : 0.0}};
        r.status = fat_ok && sc.adjacency_ok ? CheckStatus::pass : CheckStatus::fail;
        out.write("fatset.txt", [&](std::ostream& os) { write_fat_set(os, fat); });
        out.write("fatset.csv", [&](std::ostream& os) {
          os << "metric,value\n";
          for (const auto& [k, val] : r.measured) os << k << ',' << fmt(val) << '\n';
          for (const auto& s : v.violations) os << "violation,\"" << s << "\"\n";
        });
        rep.checks.push_back(std::move(r));
      });
    }

    if (spec.check_iso) {
      stage("iso", [&] {
        CheckResult r;
        r.name = "iso";
        ProfileOptions po;
        po.floor = size_floor(spec.R, spec.theta_iso);
        po.budget = spec.iso_budget;
        po.seed = rng::derive(spec.seed, rng::kIsoSeed, 0);
        po.threads = spec.threads;
        const auto prof = heuristic_profile(c, cr, po);
        r.measured = {{"candidates", static_cast<double>(prof.candidates)},
                      {"min_ratio", prof.min_ratio},
                      {"argmin_size", static_cast<double>(prof.best.size)},
                      {"argmin_boundary", static_cast<double>(prof.best.boundary)},
                      {"floor", static_cast<double>(prof.floor)}};
        out.write("iso.csv", [&](std::ostream& os) {
          os << "seed,model,u,R,theta_iso,method,size,boundary,ratio\n";
          for (const auto& k : prof.records) {
            os << spec.seed << ',' << spec.model << ',' << fmt(spec.u) << ',' << spec.R << ',' << fmt(spec.theta_iso) << ','
               << k.method << ',' << k.size << ',' << k.boundary << ',' << fmt(k.ratio) << '\n';
          }
        });
        r.status = CheckStatus::pass;
        if (fat_ok) {
          const ReductionContext ctx(c, fat, spec.eta);
          std::vector<SiteSet> sets;
          if (!prof.argmin.empty()) sets.push_back(prof.argmin);
          const auto& cR = ctx.c_R();
          for (std::size_t i = 0; i < spec.reduction_subsets && !cR.empty(); ++i) {
            const auto centre = cR[static_cast<std::size_t>(rng::below(spec.seed, rng::kSubset, 2 * i, cR.size()))];
            const auto t = static_cast<std::int64_t>(rng::below(spec.seed, rng::kSubset, 2 * i + 1,
                                                                static_cast<std::uint64_t>(2 * spec.R))) + 1;
            sets.push_back(chemical_ball(c, cR, centre, t));
          }
          std::size_t violations = 0;
          std::vector<ReductionReport> rr;
          for (const auto& a : sets) {
            rr.push_back(ctx.check(a, h_holds));
            violations += !rr.back().boundary_ok + !rr.back().volume_ok;
          }
          r.measured.emplace_back("reduction_sets", static_cast<double>(sets.size()));
          r.measured.emplace_back("reduction_violations", static_cast<double>(violations));
          if (violations > 0) r.status = CheckStatus::fail;
          out.write("reduction.csv", [&](std::ostream& os) {
            os << "index,size,boundary,m_size,m_boundary,d_size,lower_bound,volume_bound,boundary_ok,volume_ok\n";
            for (std::size_t i = 0; i < rr.size(); ++i) {
              const auto& x = rr[i];
              os << i << ',' << x.size << ',' << x.boundary << ',' << x.m_size << ',' << x.m_boundary << ',' << x.d_size
                 << ',' << fmt(x.lower_bound) << ',' << fmt(x.volume_bound) << ',' << x.boundary_ok << ','
                 << x.volume_ok << '\n';
            }
          });
        } else {
          r.note = "no verified fat set: reduction inequalities not checked";
        }
        rep.checks.push_back(std::move(r));
      });
    }

    if (spec.check_bad) {
      stage("bad", [&] {
        CheckResult r;
        r.name = "bad";
        const auto lad = make_ladder(spec, spec.bad_levels);
        const auto est = estimate_bad_probability(spec.model_spec(), lad, spec.eta, spec.bad_levels, spec.bad_replicas,
                                                  spec.threads);
        bool monotone = true;
        for (std::size_t k = 0; k < est.size(); ++k) {
          r.measured.emplace_back("p_bad_" + std::to_string(k), est[k].value);
          if (k > 0 && est[k].value > est[k - 1].value) monotone = false;
        }
        r.status = monotone ? CheckStatus::pass : CheckStatus::fail;
        out.write("bad.csv", [&](std::ostream& os) {
          os << "k,p_bad,std_error,replicas,envelope\n";
          for (const auto& e : est) {
            os << e.k << ',' << fmt(e.value) << ',' << fmt(e.std_error) << ',' << e.replicas << ',' << fmt(e.envelope) << '\n';
          }
        });
        rep.checks.push_back(std::move(r));
      });
    }

    if (spec.check_walk) {
      stage("walk", [&] {
        CheckResult r;
        r.name = "walk";
        const Point x0 = walk_start(c, cr);
        const auto msd = estimate_msd(c, x0, spec.msd_times, spec.walk_replicas,
                                      rng::derive(spec.seed, rng::kWalkStart, 0), spec.threads);
        const auto cov = estimate_covariance(c, x0, spec.walk_n, spec.walk_T, spec.walk_replicas,
                                             rng::derive(spec.seed, rng::kWalkStart, 1), spec.threads);
        r.measured = {{"msd_last", msd.msd.back()},
                      {"min_eigen", cov.min_eigen},
                      {"min_eigen_halfwidth", cov.min_eigen_halfwidth}};
        r.status = cov.min_eigen > 0 ? CheckStatus::pass : CheckStatus::fail;
        out.write("msd.csv", [&](std::ostream& os) {
          os << "n,msd,stderr\n";
          for (std::size_t i = 0; i < msd.times.size(); ++i) {
            os << msd.times[i] << ',' << fmt(msd.msd[i]) << ',' << fmt(msd.msd_stderr[i]) << '\n';
          }
        });
        out.write("cov.csv", [&](std::ostream& os) {
          os << "i,j,cov,halfwidth\n";
          for (int i = 0; i < cov.d; ++i) {
            for (int j = 0; j < cov.d; ++j) {
              const auto k = static_cast<std::size_t>(i * cov.d + j);
              os << i << ',' << j << ',' << fmt(cov.covariance[k]) << ',' << fmt(cov.cov_halfwidth[k]) << '\n';
            }
          }
        });
        rep.checks.push_back(std::move(r));
      });
    }

    if (spec.check_return) {
      stage("return", [&] {
        CheckResult r;
        r.name = "return";
        const Point x0 = walk_start(c, cr);
        const auto rp = return_probability(c, x0, 2 * spec.return_n);
        const std::int64_t top = rp.horizon / 2;
        bool monotone = true;
        for (std::int64_t n = 1; n <= top; ++n) {
          if (rp.p[static_cast<std::size_t>(2 * n)] > rp.p[static_cast<std::size_t>(2 * n - 2)]) monotone = false;
        }
        r.measured = {{"horizon", static_cast<double>(rp.horizon)}, {"truncated", rp.truncated ? 1.0 : 0.0}};
        if (top >= 1) {
          const auto range = scaled_return_range(rp, spec.d, 1, top);
          r.measured.emplace_back("scaled_min", range.lo);
          r.measured.emplace_back("scaled_max", range.hi);
        }
        r.status = monotone ? CheckStatus::pass : CheckStatus::fail;
        out.write("returns.csv", [&](std::ostream& os) {
          os << "n,p_2n,scaled\n";
          for (std::int64_t n = 0; n <= top; ++n) {
            const double p = rp.p[static_cast<std::size_t>(2 * n)];
            os << n << ',' << fmt(p) << ',' << fmt(std::pow(static_cast<double>(n), spec.d / 2.0) * p) << '\n';
          }
        });
        rep.checks.push_back(std::move(r));
      });
    }

    if (spec.check_corrector) {
      stage("corrector", [&] {
        CheckResult r;
        r.name = "corrector";
        const Point x0 = walk_start(c, cr);
        std::vector<CorrectorField> fs;
        for (auto k : spec.corrector_radii) {
          fs.push_back(estimate_corrector(c, linf_ball(x0, static_cast<double>(k)), x0, spec.corrector_tol));
        }
        const auto sub = check_corrector_sublinearity(fs);
        r.measured = {{"m_top", sub.m.back()},
                      {"decreasing_pairs", static_cast<double>(sub.decreasing_pairs)},
                      {"log_slope", sub.log_slope}};
        r.status = sub.top_doubling_decreases ? CheckStatus::pass : CheckStatus::fail;
        out.write("corrector.csv", [&](std::ostream& os) {
          os << "k,m_k\n";
          for (std::size_t i = 0; i < sub.radii.size(); ++i) os << sub.radii[i] << ',' << fmt(sub.m[i]) << '\n';
        });
        rep.checks.push_back(std::move(r));
      });
    }
  } catch (const StageError& e) {
    rep.failed_stage = e.stage;
    rep.error = e.what();
    out.write("report.txt", [&](std::ostream& os) { write_report(os, rep); });
    out.write("FAILED", [&](std::ostream& os) { os << e.stage << '\n' << e.what() << '\n'; });
    throw;
  }
  out.write("report.txt", [&](std::ostream& os) { write_report(os, rep); });
  return rep;
}

std::vector<RunReport> sweep(const ExperimentSpec& base, const ParameterGrid& grid, int threads) {
  if (grid.empty()) throw UsageError("sweep: empty parameter grid");
  std::size_t points = 1;
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw UsageError("sweep: no values for key '" + key + "'");
    ExperimentSpec probe = base;
    set_spec_key(probe, key, values.front());
    points *= values.size();
  }
  std::vector<RunReport> reports(points);
  parallel_for(points, threads, [&](std::size_t i) {
    ExperimentSpec s = base;
    std::size_t rest = i;
    for (std::size_t g = grid.size(); g-- > 0;) {
      const auto& values = grid[g].second;
      set_spec_key(s, grid[g].first, values[rest % values.size()]);
      rest /= values.size();
    }
    if (!base.out.empty()) s.out = (std::filesystem::path(base.out) / ("point_" + std::to_string(i))).string();
    try {
      reports[i] = run_experiment(s);
    } catch (const StageError& e) {
      reports[i].spec_hash = spec_hash(s);
      reports[i].version = std::string("cpl ") + CPL_VERSION;
      reports[i].failed_stage = e.stage;
      reports[i].error = e.what();
    }
  });
  return reports;
}

void write_sweep_table(std::ostream& os, const ParameterGrid& grid, const std::vector<RunReport>& reports) {
  os << "point";
  for (const auto& [key, values] : grid) os << ',' << key;
  os << ",status,eta_hat,p_H,iso_min_ratio\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    os << i;
    std::size_t rest = i;
    std::vector<std::string> vals(grid.size());
    for (std::size_t g = grid.size(); g-- > 0;) {
      vals[g] = grid[g].second[rest % grid[g].second.size()];
      rest /= grid[g].second.size();
    }
    for (const auto& v : vals) os << ',' << v;
    const auto& r = reports[i];
    os << ',' << (!r.failed_stage.empty() ? "error" : r.passed() ? "pass" : "fail");
    for (const auto& [check, key] : {std::pair{"clusters", "eta_hat"}, std::pair{"H", "p_H"}, std::pair{"iso", "min_ratio"}}) {
      const double v = r.measured(check, key);
      os << ',' << (std::isnan(v) ? std::string() : fmt(v));
    }
    os << '\n';
  }
}

}  // namespace cpl
