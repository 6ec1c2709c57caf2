#include "lnatune/errors.hpp"
#include "lnatune/predictor.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace lnatune {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "lnatune-predictor";
constexpr int kVersion = 1;

Json vec_to_json(const VectorX<double>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorX<double> vec_from_json(const Json& j, Eigen::Index expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected)
    throw ParseError(std::string("model file: ") + what + " has wrong length");
  return Eigen::Map<const VectorX<double>>(values.data(), expected);
}

std::vector<bool> flags_from_json(const Json& j, Eigen::Index expected, const char* what) {
  auto flags = j.get<std::vector<bool>>();
  if (static_cast<Eigen::Index>(flags.size()) != expected)
    throw ParseError(std::string("model file: ") + what + " has wrong length");
  return flags;
}

}  // namespace

std::string predictor_to_json_text(const PredictorModel& model) {
  Json root;
  root["format"] = kFormat;
  root["version"] = kVersion;
  root["kind"] = to_string(model.kind);

  const auto& s = model.spec;
  Json spec;
  spec["known_set"] = s.known_set;
  spec["target_set"] = s.target_set;
  spec["hidden"] = s.hidden;
  spec["activation"] = to_string(s.activation);
  spec["linear_bypass"] = s.linear_bypass;
  spec["optimizer"] = to_string(s.optimizer);
  spec["learning_rate"] = s.learning_rate;
  spec["batch_size"] = s.batch_size;
  spec["max_epochs"] = s.max_epochs;
  spec["patience"] = s.patience;
  spec["min_improvement"] = s.min_improvement;
  spec["weight_decay"] = s.weight_decay;
  spec["seed"] = s.seed;
  root["spec"] = spec;

  const auto& n = model.norm;
  Json norm;
  norm["input_mean"] = vec_to_json(n.input_mean);
  norm["input_std"] = vec_to_json(n.input_std);
  norm["input_degenerate"] = n.input_degenerate;
  norm["output_mean"] = vec_to_json(n.output_mean);
  norm["output_std"] = vec_to_json(n.output_std);
  norm["output_degenerate"] = n.output_degenerate;
  root["normalization"] = norm;

  Json layers = Json::array();
  for (const auto& layer : model.network.layers()) {
    Json jl;
    jl["rows"] = layer.weights.rows();
    jl["cols"] = layer.weights.cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    jl["weights"] = w;
    jl["bias"] = vec_to_json(layer.bias);
    layers.push_back(jl);
  }
  root["layers"] = layers;
  if (model.network.has_skip()) {
    const auto& k = model.network.skip();
    std::vector<double> w;
    for (Eigen::Index r = 0; r < k.rows(); ++r)
      for (Eigen::Index c = 0; c < k.cols(); ++c) w.push_back(k(r, c));
    root["skip"] = {{"rows", k.rows()}, {"cols", k.cols()}, {"weights", w}};
  }

  const auto& l = model.log;
  root["training_log"] = {{"train_loss", l.train_loss},     {"validation_loss", l.validation_loss},
                          {"epochs_run", l.epochs_run},     {"best_epoch", l.best_epoch},
                          {"rank", l.rank},                 {"pseudo_inverse", l.pseudo_inverse}};
  return root.dump(1) + "\n";
}

PredictorModel predictor_from_json_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (root.value("format", "") != kFormat) throw ParseError("model file: missing or wrong \"format\"");
    if (root.value("version", 0) != kVersion) throw ParseError("model file: unsupported version");

    PredictorModel m;
    const auto kind = root.at("kind").get<std::string>();
    if (kind == "nn")
      m.kind = PredictorKind::NeuralNetwork;
    else if (kind == "linear")
      m.kind = PredictorKind::Linear;
    else
      throw ParseError("model file: unknown kind '" + kind + "'");

    const auto& js = root.at("spec");
    auto& s = m.spec;
    s.known_set = js.at("known_set").get<std::vector<int>>();
    s.target_set = js.at("target_set").get<std::vector<int>>();
    s.hidden = js.at("hidden").get<std::vector<int>>();
    auto act = activation_from_string(js.at("activation").get<std::string>());
    if (!act) throw ParseError("model file: unknown activation");
    s.activation = *act;
    s.linear_bypass = js.at("linear_bypass").get<bool>();
    auto opt = optimizer_from_string(js.at("optimizer").get<std::string>());
    if (!opt) throw ParseError("model file: unknown optimizer");
    s.optimizer = *opt;
    s.learning_rate = js.at("learning_rate").get<double>();
    s.batch_size = js.at("batch_size").get<int>();
    s.max_epochs = js.at("max_epochs").get<int>();
    s.patience = js.at("patience").get<int>();
    s.min_improvement = js.value("min_improvement", 0.0);
    s.weight_decay = js.value("weight_decay", 0.0);
    s.seed = js.at("seed").get<std::uint64_t>();
    try {
      s.validate();
    } catch (const ContractError& e) {
      throw ParseError(std::string("model file: ") + e.what());
    }

    const auto& jn = root.at("normalization");
    auto& n = m.norm;
    n.input_mean = vec_from_json(jn.at("input_mean"), s.input_width(), "input_mean");
    n.input_std = vec_from_json(jn.at("input_std"), s.input_width(), "input_std");
    n.input_degenerate = flags_from_json(jn.at("input_degenerate"), s.input_width(), "input_degenerate");
    n.output_mean = vec_from_json(jn.at("output_mean"), s.output_width(), "output_mean");
    n.output_std = vec_from_json(jn.at("output_std"), s.output_width(), "output_std");
    n.output_degenerate = flags_from_json(jn.at("output_degenerate"), s.output_width(), "output_degenerate");
    if ((n.input_std.array() <= 0.0).any() || (n.output_std.array() <= 0.0).any())
      throw ParseError("model file: normalization std must be positive");

    Mlp<double>::Layers layers;
    Eigen::Index width = s.input_width();
    for (const auto& jl : root.at("layers")) {
      const auto rows = jl.at("rows").get<Eigen::Index>(), cols = jl.at("cols").get<Eigen::Index>();
      if (cols != width || rows < 1) throw ParseError("model file: layer dimensions do not chain");
      const auto w = jl.at("weights").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols) throw ParseError("model file: weight count mismatch");
      DenseLayer<double> layer;
      layer.weights = Eigen::Map<const SampleMatrix<double>>(w.data(), rows, cols);
      layer.bias = vec_from_json(jl.at("bias"), rows, "bias");
      layers.push_back(std::move(layer));
      width = rows;
    }
    if (layers.empty() || width != s.output_width()) throw ParseError("model file: output width mismatch");
    if (layers.size() != s.hidden.size() + 1) throw ParseError("model file: layer count does not match spec");
    SampleMatrix<double> skip;
    if (root.contains("skip")) {
      const auto& jk = root["skip"];
      const auto rows = jk.at("rows").get<Eigen::Index>(), cols = jk.at("cols").get<Eigen::Index>();
      const auto w = jk.at("weights").get<std::vector<double>>();
      if (rows != s.output_width() || cols != s.input_width() || static_cast<Eigen::Index>(w.size()) != rows * cols)
        throw ParseError("model file: bypass dimensions mismatch");
      skip = Eigen::Map<const SampleMatrix<double>>(w.data(), rows, cols);
    }
    if (root.contains("skip") != (s.linear_bypass && m.kind == PredictorKind::NeuralNetwork))
      throw ParseError("model file: bypass weights do not match spec.linear_bypass");
    m.network = Mlp<double>(std::move(layers), s.activation, MatrixX<double>(skip));

    const auto& jl = root.at("training_log");
    m.log.train_loss = jl.at("train_loss").get<double>();
    m.log.validation_loss = jl.at("validation_loss").get<double>();
    m.log.epochs_run = jl.at("epochs_run").get<int>();
    m.log.best_epoch = jl.at("best_epoch").get<int>();
    m.log.rank = jl.at("rank").get<int>();
    m.log.pseudo_inverse = jl.at("pseudo_inverse").get<bool>();
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void save_predictor(const PredictorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write model file " + path.string());
  out << predictor_to_json_text(model);
}

PredictorModel load_predictor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return predictor_from_json_text(ss.str());
}

}  // namespace lnatune
