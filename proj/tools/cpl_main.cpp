#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cpl/errors.hpp"
#include "cpl/harness.hpp"

namespace {

constexpr int kExitCheckFailure = 2;
constexpr int kExitUsage = 3;
constexpr int kExitInternal = 4;

std::string flag_name(std::string key) {
  for (auto& ch : key) {
    if (ch == '_') ch = '-';
  }
  return "--" + key;
}

// Options shared by every subcommand: config file, one flag per spec key, generic overrides.
struct CommonOptions {
  std::string config;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;
  std::string k_max;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "flat key = value spec file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override as key=value (repeatable)");
    for (const auto& key : cpl::spec_keys()) {
      app->add_option(flag_name(key), flags[key], "spec key " + key);
    }
  }

  cpl::ExperimentSpec build() const {
    cpl::ExperimentSpec s = config.empty() ? cpl::ExperimentSpec{} : cpl::load_spec(config);
    for (const auto& key : cpl::spec_keys()) {
      const auto it = flags.find(key);
      if (it != flags.end() && !it->second.empty()) cpl::set_spec_key(s, key, it->second);
    }
    if (!k_max.empty()) cpl::set_spec_key(s, "bad_levels", k_max);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw cpl::UsageError("--set expects key=value, got '" + kv + "'");
      cpl::set_spec_key(s, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return s;
  }
};

int exit_code(const cpl::RunReport& r) { return r.passed() ? 0 : kExitCheckFailure; }

int run_single(cpl::ExperimentSpec s, const std::vector<std::string>& enable) {
  for (const auto& key : enable) cpl::set_spec_key(s, key, "1");
  const auto r = cpl::run_experiment(s);
  cpl::write_report(std::cout, r);
  return exit_code(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Percolation cluster isoperimetry and random walk experiments"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    std::vector<std::string> enable;
  };
  const std::vector<Command> commands{
      {"sample", "sample a configuration and write config.txt", {}},
      {"classify", "largest cluster, A3/A4 and local uniqueness", {"check_clusters"}},
      {"renorm", "goodness field, event H, fat set and bad-box probabilities", {"check_H", "check_fatset", "check_bad"}},
      {"iso", "heuristic isoperimetric profile and reduction checks", {"check_iso"}},
      {"walk", "MSD, covariance, return probabilities and corrector", {"check_walk", "check_return", "check_corrector"}},
      {"run", "run the checks enabled in the spec", {}},
  };
  std::vector<CommonOptions> opts(commands.size() + 1);
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
    opts[i].attach(sub);
    if (std::string(commands[i].name) == "renorm") sub->add_option("--k-max", opts[i].k_max, "levels for P[k-bad]");
    subs.push_back(sub);
  }
  auto* sweep_cmd = app.add_subcommand("sweep", "cartesian parameter sweep");
  auto& sweep_opts = opts.back();
  sweep_opts.attach(sweep_cmd);
  std::vector<std::string> grid_args;
  int sweep_threads = 1;
  sweep_cmd->add_option("--grid", grid_args, "key=v1,v2,... (repeatable; first key slowest)")->required();
  sweep_cmd->add_option("--sweep-threads", sweep_threads, "points run in parallel")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (subs[i]->parsed()) return run_single(opts[i].build(), commands[i].enable);
    }
    const auto base = sweep_opts.build();
    cpl::ParameterGrid grid;
    for (const auto& g : grid_args) {
      const auto eq = g.find('=');
      if (eq == std::string::npos) throw cpl::UsageError("--grid expects key=v1,v2,..., got '" + g + "'");
      std::vector<std::string> values;
      std::stringstream ss(g.substr(eq + 1));
      for (std::string v; std::getline(ss, v, ',');) values.push_back(v);
      grid.emplace_back(g.substr(0, eq), values);
    }
    const auto reports = cpl::sweep(base, grid, sweep_threads);
    cpl::write_sweep_table(std::cout, grid, reports);
    if (!base.out.empty()) {
      std::filesystem::create_directories(base.out);
      std::ofstream os(std::filesystem::path(base.out) / "sweep.csv", std::ios::binary);
      cpl::write_sweep_table(os, grid, reports);
    }
    bool any_error = false, all_pass = true;
    for (const auto& r : reports) {
      any_error = any_error || !r.failed_stage.empty();
      all_pass = all_pass && r.passed();
    }
    if (any_error) return kExitInternal;
    return all_pass ? 0 : kExitCheckFailure;
  } catch (const cpl::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind == cpl::StageError::Kind::usage ? kExitUsage : kExitInternal;
  } catch (const cpl::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
