#pragma once

#include "lnatune/dataset.hpp"
#include "lnatune/mlp.hpp"
#include "lnatune/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lnatune {

enum class Optimizer { GradientDescent, Adam };

std::string_view to_string(Optimizer o);
std::optional<Optimizer> optimizer_from_string(std::string_view s);

/// What to learn: performances at `known_set` -> performances at `target_set`.
struct PredictorSpec {
  std::vector<ComboIndex> known_set = {0};
  std::vector<ComboIndex> target_set = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  std::vector<int> hidden = {32};
  Activation activation = Activation::Tanh;
  // Direct input-to-output affine path, started at the least-squares fit of
  // the fitting slice; the hidden layer then learns the nonlinear remainder.
  bool linear_bypass = true;
  Optimizer optimizer = Optimizer::GradientDescent;
  double learning_rate = 0.01;
  int batch_size = 0;  // 0 = full batch
  int max_epochs = 5000;
  int patience = 200;
  // A validation loss counts as improved only below best * (1 - min_improvement).
  double min_improvement = 0.01;
  // L2 penalty on layer weights (not biases, not the bypass).
  double weight_decay = 0.0;
  std::uint64_t seed = 42;

  int input_width() const { return kNumParams * static_cast<int>(known_set.size()); }
  int output_width() const { return kNumParams * static_cast<int>(target_set.size()); }

  /// Throws ContractError for an empty known set, overlapping or repeated
  /// indices, out-of-range indices or an empty target set.
  void validate() const;

  bool operator==(const PredictorSpec&) const = default;
};

/// Every combo except those in `known`, ascending.
std::vector<ComboIndex> complement_of(std::span<const ComboIndex> known);

enum class PredictorKind { NeuralNetwork, Linear };

std::string_view to_string(PredictorKind k);

/// Per-feature standardization. A feature whose training std is zero is
/// flagged degenerate and gets std 1: degenerate inputs are fed as 0,
/// degenerate outputs are predicted as their training mean.
struct Normalization {
  VectorX<double> input_mean, input_std, output_mean, output_std;
  std::vector<bool> input_degenerate, output_degenerate;
};

struct TrainingLog {
  double train_loss = 0.0;
  double validation_loss = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
  int rank = 0;                  // linear baseline only
  bool pseudo_inverse = false;  // linear baseline: design matrix was rank deficient
};

struct PredictorModel {
  PredictorKind kind = PredictorKind::NeuralNetwork;
  PredictorSpec spec;
  Normalization norm;
  Mlp<double> network;
  TrainingLog log;
};

/// Gradient-descent fit of spec.hidden on standardized features; the last 20%
/// of `train` is held back for early stopping and the best weights are kept.
/// With spec.linear_bypass the output weights start at zero, so epoch 0 is the
/// least-squares affine map of the fitting slice.
/// Throws InsufficientDataError below 20 samples and TrainingError when every
/// input feature is constant.
PredictorModel train_nn(const Dataset& train, const PredictorSpec& spec);

/// Closed-form least-squares affine map on standardized features.
/// Rank-deficient designs fall back to the minimum-norm solution and set log.pseudo_inverse.
PredictorModel train_linear(const Dataset& train, const PredictorSpec& spec);

/// Batch prediction: N x input_width physical values -> N x output_width physical values.
SampleMatrix<double> predict_matrix(const PredictorModel& model, const SampleMatrix<double>& known);

/// Throws ContractError unless `known` covers exactly spec.known_set.
ComboPerformance predict(const PredictorModel& model, const ComboPerformance& known);

/// (prediction - truth) in standardized output units, N x output_width.
SampleMatrix<double> standardized_residuals(const PredictorModel& model, const Dataset& data);

enum class Disjointness { Unchecked, Disjoint, Overlapping };

struct RmsReport {
  std::vector<ComboIndex> targets;
  // rms(i, p): target combo targets[i], parameter p, physical units.
  Eigen::Matrix<double, Eigen::Dynamic, kNumParams> rms;
  std::size_t n_eval = 0;
  Disjointness disjoint = Disjointness::Unchecked;

  double at(ComboIndex combo, Param p) const;
  /// Largest entry over all targets for one parameter.
  double worst(Param p) const;
  ComboIndex worst_combo(Param p) const;
};

/// Per-target RMS over `eval`. Pass the training sample ids to have the
/// report record whether the evaluation set is disjoint from them.
/// Throws DomainError for an empty evaluation set.
RmsReport rms_error(const PredictorModel& model, const Dataset& eval,
                    std::optional<std::span<const int>> training_ids = std::nullopt);

/// CSV "target_combo,parameter,rms".
std::string rms_to_csv_text(const RmsReport& report);
std::string format_rms(const RmsReport& report);

/// Largest relative disagreement between backprop and central finite
/// differences (step 1e-5) over every parameter, for the loss on one sample.
/// Entries with both gradients below 1e-4 are compared on that floor.
/// Throws ContractError for models without a hidden layer.
double grad_check(const PredictorModel& model, const SampleRecord& sample);

/// Versioned JSON model file; doubles are written in shortest round-trip form,
/// so load followed by save reproduces the file byte for byte.
std::string predictor_to_json_text(const PredictorModel& model);
PredictorModel predictor_from_json_text(const std::string& text);
void save_predictor(const PredictorModel& model, const std::filesystem::path& path);
PredictorModel load_predictor(const std::filesystem::path& path);

}  // namespace lnatune
