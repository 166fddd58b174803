// SPDX-License-Identifier: Apache-2.0
//
// aodlab: configuration-driven benchmark harness for angle-of-departure
// estimation experiments. Subcommands map to experiment kinds; results land
// as CSV (and optionally SVG) in the configured output directory.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aod/bench/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeFailure = 3;

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  bool plot = false;
  bool no_timing = false;
  bool print_defaults = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config file (key = value)");
  cmd->add_option("--seed", flags.seed, "override the config seed")
      ->each([&](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--out", flags.out_dir, "override the config output directory");
  cmd->add_flag("--plot", flags.plot, "also write an SVG line chart next to the CSV");
  cmd->add_flag("--no-timing", flags.no_timing,
                "leave the mean_runtime_s column empty (byte-stable CSV)");
  cmd->add_flag("--print-defaults", flags.print_defaults,
                "print the default config for this experiment and exit");
}

aod::bench::ExperimentConfig load_config(aod::bench::ExperimentKind kind,
                                         const CommonFlags& flags) {
  if (flags.config_path.empty())
    throw aod::bench::ConfigError("missing --config (or use --print-defaults)");
  aod::bench::ExperimentConfig cfg = aod::bench::parse_config_file(flags.config_path);
  if (cfg.kind != kind)
    throw aod::bench::ConfigError("config kind '" + aod::bench::kind_name(cfg.kind) +
                                  "' does not match subcommand '" + aod::bench::kind_name(kind) +
                                  "'");
  if (flags.seed_set) cfg.seed = flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  return cfg;
}

int run_sweep_command(aod::bench::ExperimentKind kind, const CommonFlags& flags) {
  if (flags.print_defaults) {
    std::cout << aod::bench::default_config_text(kind);
    return kExitOk;
  }
  const aod::bench::ExperimentConfig cfg = load_config(kind, flags);

  aod::bench::ExperimentResult result;
  std::string x_label;
  switch (kind) {
    case aod::bench::ExperimentKind::kMaeVsPower:
      result = aod::bench::run_mae_vs_power(cfg);
      x_label = "transmit power (dBm)";
      break;
    case aod::bench::ExperimentKind::kMaeVsSlots:
      result = aod::bench::run_mae_vs_slots(cfg);
      x_label = "slots per block L";
      break;
    case aod::bench::ExperimentKind::kRuntime:
      result = aod::bench::run_runtime_table(cfg);
      x_label = "median-of-k";
      break;
    case aod::bench::ExperimentKind::kScrlbCurve:
      result = aod::bench::run_scrlb_curve(cfg);
      x_label = "transmit power (dBm)";
      break;
    case aod::bench::ExperimentKind::kTrain:
      break;  // handled elsewhere
  }

  std::filesystem::create_directories(cfg.out_dir);
  const std::string stem =
      (std::filesystem::path(cfg.out_dir) / aod::bench::kind_name(kind)).string();
  aod::bench::write_csv_file(result, stem + ".csv", !flags.no_timing);
  std::cout << "wrote " << stem << ".csv\n";
  if (flags.plot) {
    aod::bench::write_svg_file(result, stem + ".svg", x_label);
    std::cout << "wrote " << stem << ".svg\n";
  }
  return kExitOk;
}

int run_train_command(const CommonFlags& flags) {
  if (flags.print_defaults) {
    std::cout << aod::bench::default_config_text(aod::bench::ExperimentKind::kTrain);
    return kExitOk;
  }
  const aod::bench::ExperimentConfig cfg =
      load_config(aod::bench::ExperimentKind::kTrain, flags);
  const aod::bench::TrainArtifacts artifacts = aod::bench::run_train(cfg);
  std::cout << "wrote " << artifacts.model_path << "\n";
  std::cout << "wrote " << artifacts.curve_path << "\n";
  std::printf("final train loss %.6g, test MAE %.4f deg\n", artifacts.final_train_loss,
              artifacts.test_mae_deg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aodlab: AoD estimation benchmark harness"};
  app.require_subcommand(1);

  CommonFlags mae_p, mae_l, runtime, scrlb, train;
  CLI::App* cmd_mae_p =
      app.add_subcommand("mae_vs_power", "MAE sweep over transmit power (Fig. 2 style)");
  add_common(cmd_mae_p, mae_p);
  CLI::App* cmd_mae_l =
      app.add_subcommand("mae_vs_slots", "MAE sweep over slots per block (Fig. 3 style)");
  add_common(cmd_mae_l, mae_l);
  CLI::App* cmd_runtime =
      app.add_subcommand("runtime", "median per-estimate wall-clock per method");
  add_common(cmd_runtime, runtime);
  CLI::App* cmd_scrlb = app.add_subcommand("scrlb_curve", "root-CRLB curve over the sweep");
  add_common(cmd_scrlb, scrlb);
  CLI::App* cmd_train = app.add_subcommand("train", "generate a dataset and train a model");
  add_common(cmd_train, train);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_mae_p->parsed())
      return run_sweep_command(aod::bench::ExperimentKind::kMaeVsPower, mae_p);
    if (cmd_mae_l->parsed())
      return run_sweep_command(aod::bench::ExperimentKind::kMaeVsSlots, mae_l);
    if (cmd_runtime->parsed())
      return run_sweep_command(aod::bench::ExperimentKind::kRuntime, runtime);
    if (cmd_scrlb->parsed())
      return run_sweep_command(aod::bench::ExperimentKind::kScrlbCurve, scrlb);
    if (cmd_train->parsed()) return run_train_command(train);
  } catch (const aod::bench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const aod::bench::RuntimeFailure& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntimeFailure;
  }
  return kExitOk;
}
