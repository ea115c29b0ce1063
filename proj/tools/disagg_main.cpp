// disagg: synthesize aggregated appliance datasets, train and evaluate
// multi-label classifiers on them.
//
//   disagg synth   --config C --out DIR
//   disagg train   --config C --data DIR --out DIR
//   disagg eval    --ckpt F --data DIR --split test --out DIR
//   disagg compare --reports R1 R2 ... --out DIR
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "disagg/errors.hpp"
#include "disagg/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
  std::string seed;
};

void add_config_flags(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config,-c", args.file, "Experiment config (flat JSON object)")->required();
  cmd->add_option("--set", args.overrides, "Override a config key: --set key=value (repeatable)");
  cmd->add_option("--seed", args.seed, "Override the master seed");
}

disagg::ExperimentConfig resolve(const ConfigArgs& args) {
  auto overrides = args.overrides;
  if (!args.seed.empty()) overrides.push_back("seed=" + args.seed);
  return disagg::load_config(args.file, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregated appliance signal synthesis and multi-label disaggregation"};
  app.require_subcommand(1);

  ConfigArgs synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a train/val/test aggregate archive");
  add_config_flags(synth, synth_cfg);
  synth->add_option("--out,-o", synth_out, "Output directory")->required();

  ConfigArgs train_cfg;
  std::string train_data, train_out;
  auto* train = app.add_subcommand("train", "Fit features and classifier on an archive");
  add_config_flags(train, train_cfg);
  train->add_option("--data,-d", train_data, "Dataset archive directory")->required();
  train->add_option("--out,-o", train_out, "Output directory")->required();

  std::string eval_ckpt, eval_data, eval_split = "test", eval_out;
  bool eval_force = false;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on one split");
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file (model.ckpt)")->required();
  eval->add_option("--data,-d", eval_data, "Dataset archive directory")->required();
  eval->add_option("--split", eval_split, "train | val | test")->capture_default_str();
  eval->add_option("--out,-o", eval_out, "Output directory")->required();
  eval->add_flag("--force", eval_force, "Evaluate even if the dataset hash differs");

  std::vector<std::string> compare_reports;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Tabulate F1 across reports");
  compare->add_option("--reports", compare_reports, "report.json files or their directories")
      ->required();
  compare->add_option("--out,-o", compare_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) {
      const auto cfg = resolve(synth_cfg);
      const auto s = disagg::cmd_synth(cfg, synth_out);
      std::cout << "wrote " << s.n_train << "/" << s.n_val << "/" << s.n_test
                << " aggregates to " << synth_out << " (config " << s.config_hash << ")\n";
    } else if (*train) {
      const auto cfg = resolve(train_cfg);
      const auto s = disagg::cmd_train(cfg, train_data, train_out);
      std::cout << "trained " << disagg::model_name(cfg.feature, cfg.classifier) << ": "
                << s.epochs_run << " epochs (best " << s.best_epoch << "), checkpoint "
                << s.checkpoint.string() << "\n";
    } else if (*eval) {
      const auto r = disagg::cmd_eval(eval_ckpt, eval_data, eval_split, eval_out, eval_force);
      std::cout << r.model_name << " on " << r.dataset_name << "/" << r.split
                << ": F1 (samples) = " << disagg::format_double(r.f1_overall)
                << ", loss = " << disagg::format_double(r.loss) << "\n";
      for (const auto& [k, s] : r.f1_by_k) {
        std::cout << "  k=" << k << "  f1=" << disagg::format_double(s.f1) << "  n=" << s.count
                  << "\n";
      }
    } else if (*compare) {
      std::vector<std::filesystem::path> paths(compare_reports.begin(), compare_reports.end());
      const auto table = disagg::cmd_compare(paths, compare_out);
      std::cout << disagg::to_csv(table);
    }
  } catch (const disagg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const disagg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const disagg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
