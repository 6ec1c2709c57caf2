#include "lnatune/predictor.hpp"

#include "lnatune/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace lnatune {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "";
}

std::optional<Activation> activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity" || s == "linear") return Activation::Identity;
  return std::nullopt;
}

std::string_view to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "gd"; }

std::optional<Optimizer> optimizer_from_string(std::string_view s) {
  if (s == "gd") return Optimizer::GradientDescent;
  if (s == "adam") return Optimizer::Adam;
  return std::nullopt;
}

std::string_view to_string(PredictorKind k) {
  return k == PredictorKind::NeuralNetwork ? "nn" : "linear";
}

void PredictorSpec::validate() const {
  if (known_set.empty()) throw ContractError("predictor known set is empty");
  if (target_set.empty()) throw ContractError("predictor target set is empty");
  std::set<ComboIndex> seen;
  for (auto c : known_set) {
    if (!valid_combo(c)) throw ContractError("known combo " + std::to_string(c) + " out of range");
    if (!seen.insert(c).second) throw ContractError("known combo " + std::to_string(c) + " repeated");
  }
  for (auto c : target_set) {
    if (!valid_combo(c)) throw ContractError("target combo " + std::to_string(c) + " out of range");
    if (!seen.insert(c).second)
      throw ContractError("target combo " + std::to_string(c) + " repeated or also in the known set");
  }
  for (int h : hidden)
    if (h < 1) throw ContractError("hidden layer width must be positive");
  if (!(learning_rate > 0.0)) throw ContractError("learning rate must be positive");
  if (batch_size < 0 || max_epochs < 1 || patience < 1 || !(min_improvement >= 0.0 && min_improvement < 1.0) ||
      !(weight_decay >= 0.0))
    throw ContractError("bad training hyperparameters");
}

std::vector<ComboIndex> complement_of(std::span<const ComboIndex> known) {
  std::vector<ComboIndex> out;
  for (int c = 0; c < kNumCombos; ++c)
    if (std::find(known.begin(), known.end(), c) == known.end()) out.push_back(c);
  return out;
}

namespace {

constexpr double kDegenerateStd = 1e-10;
constexpr double kGradCheckStep = 1e-5;
constexpr double kGradCheckFloor = 1e-4;

void fit_columns(const SampleMatrix<double>& x, VectorX<double>& mean, VectorX<double>& sd,
                 std::vector<bool>& degenerate) {
  const double n = static_cast<double>(x.rows());
  // Shifted by the first row, so a constant column gets its value back exactly.
  mean = x.row(0).transpose();
  if (x.rows() > 1) mean += (x.rowwise() - x.row(0)).colwise().mean().transpose();
  sd.resize(x.cols());
  degenerate.assign(static_cast<std::size_t>(x.cols()), false);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - mean[j]).square().sum();
    const double s = x.rows() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (s <= kDegenerateStd * std::max(1.0, std::abs(mean[j]))) {
      sd[j] = 1.0;
      degenerate[j] = true;
    } else {
      sd[j] = s;
    }
  }
}

Normalization fit_normalization(const SampleMatrix<double>& x, const SampleMatrix<double>& y) {
  Normalization norm;
  fit_columns(x, norm.input_mean, norm.input_std, norm.input_degenerate);
  fit_columns(y, norm.output_mean, norm.output_std, norm.output_degenerate);
  return norm;
}

MatrixX<double> standardize(const SampleMatrix<double>& x, const VectorX<double>& mean, const VectorX<double>& sd,
                            const std::vector<bool>& degenerate) {
  MatrixX<double> s = (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
  for (Eigen::Index j = 0; j < s.cols(); ++j)
    if (degenerate[static_cast<std::size_t>(j)]) s.col(j).setZero();
  return s;
}

struct AffineFit {
  MatrixX<double> weights;  // out x in
  VectorX<double> bias;
  Eigen::Index rank = 0;
};

AffineFit least_squares_affine(const MatrixX<double>& xs, const MatrixX<double>& ys) {
  MatrixX<double> design(xs.rows(), xs.cols() + 1);
  design << xs, MatrixX<double>::Ones(xs.rows(), 1);
  Eigen::CompleteOrthogonalDecomposition<MatrixX<double>> cod(design);
  const MatrixX<double> coef = cod.solve(ys);  // (in + 1) x out
  return {coef.topRows(xs.cols()).transpose(), coef.row(xs.cols()).transpose(), cod.rank()};
}

void require_training_data(const Dataset& train, const PredictorSpec& spec) {
  spec.validate();
  if (train.size() < 20)
    throw InsufficientDataError("training needs at least 20 samples, got " + std::to_string(train.size()));
}

void require_informative_inputs(const Normalization& norm) {
  if (std::all_of(norm.input_degenerate.begin(), norm.input_degenerate.end(), [](bool d) { return d; }))
    throw TrainingError("every input feature is constant over the training set");
}

}  // namespace

PredictorModel train_nn(const Dataset& train, const PredictorSpec& spec) {
  require_training_data(train, spec);
  if (spec.hidden.empty()) throw ContractError("neural network needs at least one hidden layer");

  const auto x = feature_matrix(train, spec.known_set);
  const auto y = feature_matrix(train, spec.target_set);
  PredictorModel model;
  model.kind = PredictorKind::NeuralNetwork;
  model.spec = spec;
  model.norm = fit_normalization(x, y);
  require_informative_inputs(model.norm);

  const MatrixX<double> xs = standardize(x, model.norm.input_mean, model.norm.input_std, model.norm.input_degenerate);
  const MatrixX<double> ys =
      standardize(y, model.norm.output_mean, model.norm.output_std, model.norm.output_degenerate);

  const Eigen::Index n = xs.rows();
  const Eigen::Index n_val = std::max<Eigen::Index>(1, n / 5);
  const Eigen::Index n_fit = n - n_val;
  const MatrixX<double> x_fit = xs.topRows(n_fit), y_fit = ys.topRows(n_fit);
  const MatrixX<double> x_val = xs.bottomRows(n_val), y_val = ys.bottomRows(n_val);

  std::vector<int> widths{spec.input_width()};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.output_width());
  RngStream rng(spec.seed);
  Mlp<double> net = Mlp<double>::glorot(widths, spec.activation, rng);
  if (spec.linear_bypass) {
    AffineFit fit = least_squares_affine(x_fit, y_fit);
    net.skip() = std::move(fit.weights);
    net.layers().back().weights.setZero();
    net.layers().back().bias = std::move(fit.bias);
  }

  const bool full_batch = spec.batch_size == 0 || spec.batch_size >= n_fit;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_fit));
  std::iota(order.begin(), order.end(), 0);

  AdamState<double> adam(net);
  auto update = [&](Mlp<double>::Gradient grads) {
    if (spec.weight_decay > 0.0)
      for (std::size_t l = 0; l < grads.layers.size(); ++l)
        grads.layers[l].weights += 2.0 * spec.weight_decay * net.layers()[l].weights;
    if (spec.optimizer == Optimizer::Adam)
      adam.step(net, grads, spec.learning_rate);
    else
      net.step(grads, spec.learning_rate);
  };

  Mlp<double> best = net;
  double best_val = net.loss(x_val, y_val);
  int best_epoch = 0, epoch = 0;
  for (epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    if (full_batch) {
      update(net.gradient(x_fit, y_fit));
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index start = 0; start < n_fit; start += spec.batch_size) {
        const Eigen::Index len = std::min<Eigen::Index>(spec.batch_size, n_fit - start);
        MatrixX<double> xb(len, x_fit.cols()), yb(len, y_fit.cols());
        for (Eigen::Index k = 0; k < len; ++k) {
          xb.row(k) = x_fit.row(order[static_cast<std::size_t>(start + k)]);
          yb.row(k) = y_fit.row(order[static_cast<std::size_t>(start + k)]);
        }
        update(net.gradient(xb, yb));
      }
    }
    const double val = net.loss(x_val, y_val);
    if (val < best_val * (1.0 - spec.min_improvement)) {
      best_val = val;
      best = net;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= spec.patience) {
      break;
    }
  }

  model.network = std::move(best);
  model.log.epochs_run = std::min(epoch, spec.max_epochs);
  model.log.best_epoch = best_epoch;
  model.log.validation_loss = best_val;
  model.log.train_loss = model.network.loss(x_fit, y_fit);
  return model;
}

PredictorModel train_linear(const Dataset& train, const PredictorSpec& spec) {
  require_training_data(train, spec);

  const auto x = feature_matrix(train, spec.known_set);
  const auto y = feature_matrix(train, spec.target_set);
  PredictorModel model;
  model.kind = PredictorKind::Linear;
  model.spec = spec;
  model.spec.hidden.clear();
  model.spec.activation = Activation::Identity;
  model.norm = fit_normalization(x, y);
  require_informative_inputs(model.norm);

  const MatrixX<double> xs = standardize(x, model.norm.input_mean, model.norm.input_std, model.norm.input_degenerate);
  const MatrixX<double> ys =
      standardize(y, model.norm.output_mean, model.norm.output_std, model.norm.output_degenerate);

  AffineFit fit = least_squares_affine(xs, ys);
  model.log.rank = static_cast<int>(fit.rank);
  // Degenerate inputs are zero columns by construction; they do not count as a rank defect.
  const auto informative = std::count(model.norm.input_degenerate.begin(), model.norm.input_degenerate.end(), false);
  model.log.pseudo_inverse = fit.rank < informative + 1;
  model.spec.linear_bypass = false;
  DenseLayer<double> layer{std::move(fit.weights), std::move(fit.bias)};
  model.network = Mlp<double>({std::move(layer)}, Activation::Identity);
  model.log.train_loss = model.network.loss(xs, ys);
  return model;
}

SampleMatrix<double> predict_matrix(const PredictorModel& model, const SampleMatrix<double>& known) {
  if (known.cols() != model.spec.input_width())
    throw ContractError("prediction input has " + std::to_string(known.cols()) + " columns, model expects " +
                        std::to_string(model.spec.input_width()));
  const auto& nm = model.norm;
  const MatrixX<double> xs = standardize(known, nm.input_mean, nm.input_std, nm.input_degenerate);
  const MatrixX<double> out = model.network.forward(xs);
  SampleMatrix<double> y = (out.array().rowwise() * nm.output_std.transpose().array()).rowwise() +
                           nm.output_mean.transpose().array();
  for (Eigen::Index j = 0; j < y.cols(); ++j)
    if (nm.output_degenerate[static_cast<std::size_t>(j)]) y.col(j).setConstant(nm.output_mean[j]);
  return y;
}

ComboPerformance predict(const PredictorModel& model, const ComboPerformance& known) {
  const auto& ks = model.spec.known_set;
  for (auto c : ks)
    if (!known.contains(c)) throw ContractError("missing measurement for known combo " + std::to_string(c));
  for (const auto& [c, perf] : known) {
    if (std::find(ks.begin(), ks.end(), c) == ks.end())
      throw ContractError("combo " + std::to_string(c) + " is not in the predictor's known set");
    if (!perf.all_finite()) throw DomainError("non-finite measurement for combo " + std::to_string(c));
  }

  SampleMatrix<double> x(1, model.spec.input_width());
  for (std::size_t k = 0; k < ks.size(); ++k)
    x.row(0).segment<kNumParams>(kNumParams * static_cast<Eigen::Index>(k)) = known.at(ks[k]).values.transpose();
  const auto y = predict_matrix(model, x);

  ComboPerformance out;
  for (std::size_t k = 0; k < model.spec.target_set.size(); ++k)
    out[model.spec.target_set[k]] =
        PerformanceVector(Vector4<double>(y.row(0).segment<kNumParams>(kNumParams * static_cast<Eigen::Index>(k))));
  return out;
}

SampleMatrix<double> standardized_residuals(const PredictorModel& model, const Dataset& data) {
  const auto x = feature_matrix(data, model.spec.known_set);
  const auto y = feature_matrix(data, model.spec.target_set);
  const auto& nm = model.norm;
  const MatrixX<double> xs = standardize(x, nm.input_mean, nm.input_std, nm.input_degenerate);
  const MatrixX<double> ys = standardize(y, nm.output_mean, nm.output_std, nm.output_degenerate);
  return model.network.forward(xs) - ys;
}

double RmsReport::at(ComboIndex combo, Param p) const {
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] == combo) return rms(static_cast<Eigen::Index>(i), index_of(p));
  throw DomainError("combo " + std::to_string(combo) + " is not a prediction target");
}

double RmsReport::worst(Param p) const { return rms.col(index_of(p)).maxCoeff(); }

ComboIndex RmsReport::worst_combo(Param p) const {
  Eigen::Index row = 0;
  rms.col(index_of(p)).maxCoeff(&row);
  return targets[static_cast<std::size_t>(row)];
}

RmsReport rms_error(const PredictorModel& model, const Dataset& eval, std::optional<std::span<const int>> training_ids) {
  if (eval.empty()) throw DomainError("RMS evaluation set is empty");
  RmsReport report;
  report.targets = model.spec.target_set;
  report.n_eval = eval.size();
  if (training_ids) {
    std::set<int> ids(training_ids->begin(), training_ids->end());
    report.disjoint = std::any_of(eval.samples.begin(), eval.samples.end(),
                                  [&](const SampleRecord& s) { return ids.contains(s.sample_id); })
                          ? Disjointness::Overlapping
                          : Disjointness::Disjoint;
  }

  const auto pred = predict_matrix(model, feature_matrix(eval, model.spec.known_set));
  const auto truth = feature_matrix(eval, model.spec.target_set);
  const Eigen::RowVectorXd ms = (pred - truth).colwise().squaredNorm() / static_cast<double>(eval.size());
  report.rms.resize(static_cast<Eigen::Index>(report.targets.size()), kNumParams);
  for (Eigen::Index i = 0; i < report.rms.rows(); ++i)
    for (int p = 0; p < kNumParams; ++p) report.rms(i, p) = std::sqrt(ms[kNumParams * i + p]);
  return report;
}

std::string rms_to_csv_text(const RmsReport& report) {
  std::ostringstream os;
  os << "target_combo,parameter,rms\n";
  for (std::size_t i = 0; i < report.targets.size(); ++i)
    for (Param p : kAllParams)
      os << report.targets[i] << ',' << short_name(p) << ','
         << format_double(report.rms(static_cast<Eigen::Index>(i), index_of(p))) << '\n';
  return os.str();
}

std::string format_rms(const RmsReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "held-out RMS over " << report.n_eval << " samples";
  if (report.disjoint == Disjointness::Overlapping) os << " (WARNING: overlaps training data)";
  os << "\ncombo      gain_db     nf_db  p1db_dbm    idc_ma\n";
  for (std::size_t i = 0; i < report.targets.size(); ++i) {
    os.width(5);
    os << report.targets[i];
    for (int p = 0; p < kNumParams; ++p) {
      os << "  ";
      os.width(8);
      os << report.rms(static_cast<Eigen::Index>(i), p);
    }
    os << '\n';
  }
  os << "worst";
  for (Param p : kAllParams) {
    os << "  ";
    os.width(8);
    os << report.worst(p);
  }
  os << '\n';
  return os.str();
}

double grad_check(const PredictorModel& model, const SampleRecord& sample) {
  if (model.network.hidden_layers() < 1) throw ContractError("grad_check needs at least one hidden layer");
  Dataset one{{sample}, Provenance::Simulated, std::nullopt};
  const auto& nm = model.norm;
  const MatrixX<double> xs = standardize(feature_matrix(one, model.spec.known_set), nm.input_mean, nm.input_std,
                                         nm.input_degenerate);
  const MatrixX<double> ys = standardize(feature_matrix(one, model.spec.target_set), nm.output_mean,
                                         nm.output_std, nm.output_degenerate);

  Mlp<double> net = model.network;
  const auto analytic = net.gradient(xs, ys);
  std::vector<double> flat;
  Mlp<double> grads(analytic.layers, net.activation(), analytic.skip);
  grads.for_each_parameter([&](double& g) { flat.push_back(g); });

  double worst = 0.0;
  std::size_t k = 0;
  net.for_each_parameter([&](double& w) {
    const double saved = w;
    w = saved + kGradCheckStep;
    const double up = net.loss(xs, ys);
    w = saved - kGradCheckStep;
    const double down = net.loss(xs, ys);
    w = saved;
    const double numeric = (up - down) / (2.0 * kGradCheckStep);
    const double a = flat[k++];
    const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  });
  return worst;
}

}  // namespace lnatune
