// ibw: experiments for networks with information-regularised weights.
//
//   ibw train            [--config F] [--out D] [--seed S] [--set key=value ...]
//   ibw sweep-beta-n     ...  [--jobs J]
//   ibw sweep-corruption ...  [--jobs J]
//   ibw verify-bounds    ...
//   ibw nuisance-mi      ...  [--jobs J]
//   ibw report           CSV... [--out D]
//
// Every subcommand accepts --dump-config, which prints the effective
// configuration (defaults plus file plus overrides) and exits.
//
// Exit codes: 0 ok, 1 failed cells or checks, 2 bad configuration or input,
// 3 training diverged.

#include <iostream>

#include <CLI11.hpp>

#include "ibw/errors.hpp"
#include "ibw/exp.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::vector<std::string> sets;
  bool dump = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "TOML-style key = value file")->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "base seed (u64)");
  app->add_option("--jobs", c.jobs, "cells to run concurrently");
  app->add_option("--set", c.sets, "override one key, e.g. --set train.beta=0.5");
  app->add_flag("--dump-config", c.dump, "print the effective configuration and exit");
}

ibw::exp::ExperimentConfig resolve(const Common& c) {
  ibw::exp::ExperimentConfig cfg;
  if (!c.config.empty()) cfg = ibw::exp::load_config(c.config);
  ibw::exp::KeyValues kv;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ibw::ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  cfg.apply(kv);
  if (!c.out.empty()) cfg.out = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Networks with multiplicative weight noise: training, sweeps, bounds and nuisance MI"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> report_inputs;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"train", "train one cell; writes history.csv, train.csv, model.ckpt, summary.json"},
      {"sweep-beta-n", "train every (beta, N) cell; writes sweep_beta_n.csv"},
      {"sweep-corruption", "train per corruption level until the CE plateaus; writes sweep_corruption.csv"},
      {"verify-bounds", "run the information-bound checks; writes verify_bounds.json"},
      {"nuisance-mi", "estimate I(z;n) on cluttered data per beta; writes nuisance_mi.csv"},
      {"report", "merge CSV outputs into report.json"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, common);
    subs[name] = sub;
  }
  subs["report"]->add_option("inputs", report_inputs, "CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto cfg = resolve(common);
    if (common.dump) {
      std::cout << cfg.dump();
      return 0;
    }
    namespace ex = ibw::exp;
    if (subs["train"]->parsed()) return ex::cmd_train(cfg);
    if (subs["sweep-beta-n"]->parsed()) return ex::cmd_sweep_beta_n(cfg);
    if (subs["sweep-corruption"]->parsed()) return ex::cmd_sweep_corruption(cfg);
    if (subs["verify-bounds"]->parsed()) return ex::cmd_verify_bounds(cfg);
    if (subs["nuisance-mi"]->parsed()) return ex::cmd_nuisance_mi(cfg);
    std::vector<std::filesystem::path> inputs(report_inputs.begin(), report_inputs.end());
    return ex::cmd_report(inputs, cfg.out);
  } catch (const ibw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ibw::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ibw::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ibw::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
