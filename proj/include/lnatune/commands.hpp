#pragma once

#include "lnatune/calibrator.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace lnatune {

/// Process exit codes of the command-line tool.
enum class ExitCode : int {
  Ok = 0,
  Failure = 1,
  Usage = 2,
  File = 3,
  Contract = 4,
  Infeasible = 5,
  Data = 6,
};

/// Everything a subcommand needs. Input paths left empty fall back to files
/// inside `out`; every command writes the effective configuration next to its outputs.
struct RunConfig {
  std::string model_config;  // empty: built-in default model
  std::uint64_t seed = 42;
  int n = 200;
  int m = 100;
  int workers = 1;
  double train_fraction = 0.75;

  std::vector<ComboIndex> known = {0};
  std::vector<ComboIndex> predict;  // empty: every combo not in `known`
  std::vector<int> hidden = {32};
  std::string activation = "tanh";
  double learning_rate = 0.01;
  int batch_size = 0;
  int max_epochs = 5000;
  int patience = 200;
  std::string optimizer = "gd";  // "gd" or "adam"
  double min_improvement = 0.01;
  double weight_decay = 0.0;
  std::string baseline = "none";  // "none" or "linear"

  std::string target;
  MarginPolicy margin;
  bool verify = false;

  std::string data;      // dataset CSV (train, eval)
  std::string boards;    // board CSV (boards)
  std::string model;     // predictor model file (eval, calibrate)
  std::string measured;  // candidate CSV (calibrate)
  std::string split;     // split CSV written by train (eval)
  std::string out = "out";
  std::string fixtures = LNATUNE_DATA_DIR;

  std::string to_json_text() const;
  PredictorSpec predictor_spec() const;
};

int cmd_gen(const RunConfig& cfg, std::ostream& log);
int cmd_boards(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_calibrate(const RunConfig& cfg, std::ostream& log);
/// gen -> boards -> train -> calibrate on the shipped fixtures.
int cmd_demo(const RunConfig& cfg, std::ostream& log);

/// Runs `command`, mapping library exceptions to exit codes and printing them to `err`.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace lnatune
