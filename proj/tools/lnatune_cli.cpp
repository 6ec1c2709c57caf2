// lnatune: Monte-Carlo characterization, performance prediction and
// in-field combination selection for a switch-programmable LNA.

#include "lnatune/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using lnatune::RunConfig;

namespace {

void add_out(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--out", cfg.out, "Output directory")->capture_default_str();
}

void add_model_config(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--model-config", cfg.model_config, "Device model JSON (default: built-in)");
}

void add_training(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--known", cfg.known, "Combos measured in the field")->delimiter(',')->capture_default_str();
  cmd->add_option("--predict", cfg.predict, "Combos to predict (default: all others)")->delimiter(',');
  cmd->add_option("--train-fraction", cfg.train_fraction, "Training share of the split")->capture_default_str();
  cmd->add_option("--hidden", cfg.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
  cmd->add_option("--activation", cfg.activation, "tanh or identity")->capture_default_str();
  cmd->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--batch", cfg.batch_size, "Batch size, 0 = full batch")->capture_default_str();
  cmd->add_option("--epochs", cfg.max_epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--patience", cfg.patience, "Early-stopping patience")->capture_default_str();
  cmd->add_option("--min-improvement", cfg.min_improvement, "Relative validation gain that resets patience")
      ->capture_default_str();
  cmd->add_option("--optimizer", cfg.optimizer, "gd or adam")->capture_default_str();
  cmd->add_option("--weight-decay", cfg.weight_decay, "L2 penalty on layer weights")->capture_default_str();
  cmd->add_option("--baseline", cfg.baseline, "none or linear")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo characterization, prediction and combination selection for a programmable LNA"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* gen = app.add_subcommand("gen", "Simulate a Monte-Carlo device population");
  gen->add_option("--n", cfg.n, "Number of samples")->capture_default_str();
  gen->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  gen->add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
  add_model_config(gen, cfg);
  add_out(gen, cfg);

  auto* boards = app.add_subcommand("boards", "Bootstrap measured boards into a synthetic population");
  boards->add_option("--boards", cfg.boards, "Board CSV")->required();
  boards->add_option("--m", cfg.m, "Number of synthetic samples")->capture_default_str();
  boards->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  add_out(boards, cfg);

  auto* train = app.add_subcommand("train", "Train the predictor and report held-out RMS");
  train->add_option("--data", cfg.data, "Dataset CSV (default: OUT/dataset.csv)");
  train->add_option("--seed", cfg.seed, "Split and initialization seed")->capture_default_str();
  add_training(train, cfg);
  add_out(train, cfg);

  auto* eval = app.add_subcommand("eval", "Evaluate a saved predictor on a dataset");
  eval->add_option("--model", cfg.model, "Model file (default: OUT/model.json)");
  eval->add_option("--data", cfg.data, "Dataset CSV (default: OUT/dataset.csv)");
  eval->add_option("--split", cfg.split, "split.csv from train; training rows are excluded");
  add_out(eval, cfg);

  auto* calibrate = app.add_subcommand("calibrate", "Select a switch combination for a target");
  calibrate->add_option("--measured", cfg.measured, "Candidate CSV with measured (and optionally predicted) rows")
      ->required();
  calibrate->add_option("--target", cfg.target, "e.g. gain:15..17,p1db:>-20,nf:<3.7")->required();
  calibrate->add_option("--model", cfg.model, "Predictor model file");
  calibrate->add_option("--margin-gain", cfg.margin.gain_db, "Gain margin for predicted candidates, dB");
  calibrate->add_option("--margin-nf", cfg.margin.nf_db, "NF margin for predicted candidates, dB");
  calibrate->add_option("--margin-p1db", cfg.margin.p1db_db, "P1dB margin for predicted candidates, dB");
  calibrate->add_flag("--verify", cfg.verify, "Measure the chosen combo if it was only predicted");
  add_out(calibrate, cfg);

  auto* demo = app.add_subcommand("demo", "Run gen, boards, train and calibrate on the shipped fixtures");
  demo->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  demo->add_option("--n", cfg.n, "Monte-Carlo samples")->capture_default_str();
  demo->add_option("--m", cfg.m, "Bootstrapped board samples")->capture_default_str();
  demo->add_option("--fixtures", cfg.fixtures, "Fixture directory")->capture_default_str();
  add_out(demo, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(lnatune::ExitCode::Usage);
  }

  auto dispatch = [&]() -> int {
    if (gen->parsed()) return lnatune::cmd_gen(cfg, std::cout);
    if (boards->parsed()) return lnatune::cmd_boards(cfg, std::cout);
    if (train->parsed()) return lnatune::cmd_train(cfg, std::cout);
    if (eval->parsed()) return lnatune::cmd_eval(cfg, std::cout);
    if (calibrate->parsed()) return lnatune::cmd_calibrate(cfg, std::cout);
    return lnatune::cmd_demo(cfg, std::cout);
  };
  return lnatune::run_guarded(dispatch, std::cerr);
}
