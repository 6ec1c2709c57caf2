#include "lnatune/commands.hpp"

#include "lnatune/dataset.hpp"
#include "lnatune/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace lnatune {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string RunConfig::to_json_text() const {
  Json j;
  j["model_config"] = model_config;
  j["seed"] = seed;
  j["n"] = n;
  j["m"] = m;
  j["workers"] = workers;
  j["train_fraction"] = train_fraction;
  j["known"] = known;
  j["predict"] = predict;
  j["hidden"] = hidden;
  j["activation"] = activation;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["optimizer"] = optimizer;
  j["min_improvement"] = min_improvement;
  j["weight_decay"] = weight_decay;
  j["baseline"] = baseline;
  j["target"] = target;
  j["margin"] = {{"gain", margin.gain_db}, {"nf", margin.nf_db}, {"p1db", margin.p1db_db}};
  j["verify"] = verify;
  j["data"] = data;
  j["boards"] = boards;
  j["model"] = model;
  j["measured"] = measured;
  j["split"] = split;
  j["out"] = out;
  j["fixtures"] = fixtures;
  return j.dump(2) + "\n";
}

PredictorSpec RunConfig::predictor_spec() const {
  PredictorSpec spec;
  spec.known_set = known;
  spec.target_set = predict.empty() ? complement_of(known) : predict;
  spec.hidden = hidden;
  auto act = activation_from_string(activation);
  if (!act) throw UsageError("--activation must be tanh or identity");
  spec.activation = *act;
  spec.learning_rate = learning_rate;
  spec.batch_size = batch_size;
  spec.max_epochs = max_epochs;
  spec.patience = patience;
  auto opt = optimizer_from_string(optimizer);
  if (!opt) throw UsageError("--optimizer must be gd or adam");
  spec.optimizer = *opt;
  spec.min_improvement = min_improvement;
  spec.weight_decay = weight_decay;
  spec.seed = seed;
  try {
    spec.validate();
  } catch (const ContractError& e) {
    throw UsageError(std::string("predictor settings: ") + e.what());
  }
  return spec;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  out << text;
}

fs::path prepare_out(const RunConfig& cfg, const std::string& command) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FileError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / (command + "_config.json"), cfg.to_json_text());
  return dir;
}

fs::path input_path(const std::string& given, const RunConfig& cfg, const char* fallback) {
  return given.empty() ? fs::path(cfg.out) / fallback : fs::path(given);
}

DeviceModel load_model(const RunConfig& cfg) {
  return cfg.model_config.empty() ? default_model() : load_model_config(cfg.model_config);
}

std::string summary_csv(const SummaryTable& t) {
  std::ostringstream os;
  os << "combo,parameter,mean,std,min,max\n";
  for (int c = 0; c < kNumCombos; ++c)
    for (Param p : kAllParams) {
      const auto& s = t.at(c, p);
      os << c << ',' << short_name(p) << ',' << format_double(s.mean) << ','
         << (s.std ? format_double(*s.std) : std::string()) << ',' << format_double(s.min) << ','
         << format_double(s.max) << '\n';
    }
  return os.str();
}

std::string histogram_csv(const Dataset& data) {
  std::ostringstream os;
  os << "combo,parameter,sample_id,value\n";
  for (int c = 0; c < kNumCombos; ++c)
    for (Param p : kAllParams)
      for (const auto& s : data.samples)
        os << c << ',' << short_name(p) << ',' << s.sample_id << ',' << format_double(s.perf[c][p]) << '\n';
  return os.str();
}

std::string correlation_csv(const SummaryTable& t) {
  std::ostringstream os;
  os << "parameter,combo_a,combo_b,r\n";
  for (Param p : kAllParams)
    for (int a = 0; a < kNumCombos; ++a)
      for (int b = 0; b < kNumCombos; ++b) {
        auto r = t.corr(p, a, b);
        os << short_name(p) << ',' << a << ',' << b << ',' << (r ? format_double(*r) : std::string()) << '\n';
      }
  return os.str();
}

std::string split_csv(const Dataset& train, const Dataset& test) {
  std::ostringstream os;
  os << "sample_id,part\n";
  std::map<int, const char*> parts;
  for (const auto& s : train.samples) parts[s.sample_id] = "train";
  for (const auto& s : test.samples) parts[s.sample_id] = "test";
  for (const auto& [id, part] : parts) os << id << ',' << part << '\n';
  return os.str();
}

std::set<int> read_split_ids(const fs::path& path, const std::string& part) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open split file " + path.string());
  std::set<int> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no == 1) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("split file row lacks a comma", line_no);
    if (line.substr(comma + 1) == part) ids.insert(std::stoi(line.substr(0, comma)));
  }
  return ids;
}

Dataset subset(const Dataset& data, const std::set<int>& ids, bool keep) {
  Dataset out{{}, data.provenance, data.seed};
  for (const auto& s : data.samples)
    if (ids.contains(s.sample_id) == keep) out.samples.push_back(s);
  return out;
}

void print_summary(const SummaryTable& t, std::ostream& log) {
  log << "union spans over " << t.n << " samples: gain " << t.union_span(Param::Gain) << " dB, nf "
      << t.union_span(Param::NoiseFigure) << " dB, p1db " << t.union_span(Param::P1dB) << " dB, idc "
      << t.union_span(Param::Current) << " mA\n";
}

}  // namespace

int cmd_gen(const RunConfig& cfg, std::ostream& log) {
  if (cfg.n < 1) throw UsageError("--n must be at least 1");
  if (cfg.workers < 1) throw UsageError("--workers must be at least 1");
  const DeviceModel model = load_model(cfg);
  const fs::path dir = prepare_out(cfg, "gen");

  const Dataset data = generate_mc(model, cfg.n, cfg.seed, cfg.workers);
  write_csv(data, dir / "dataset.csv");
  write_text(dir / "histogram.csv", histogram_csv(data));
  const auto report = validate_table(model);
  write_text(dir / "validation.txt", format_report(report));
  log << "wrote " << data.size() << " samples to " << (dir / "dataset.csv").string() << "\n";
  log << "nominal table check: " << (report.pass() ? "PASS" : "FAIL") << "\n";
  if (data.size() >= 2) {
    const auto summary = summarize(data);
    write_text(dir / "summary.csv", summary_csv(summary));
    write_text(dir / "correlation.csv", correlation_csv(summary));
    print_summary(summary, log);
  }
  return static_cast<int>(ExitCode::Ok);
}

int cmd_boards(const RunConfig& cfg, std::ostream& log) {
  if (cfg.boards.empty()) throw UsageError("--boards is required");
  if (cfg.m < 1) throw UsageError("--m must be at least 1");
  const Dataset boards = read_csv(cfg.boards);
  const Dataset synthetic = bootstrap_boards(boards, cfg.m, cfg.seed);
  const fs::path dir = prepare_out(cfg, "boards");

  write_csv(synthetic, dir / "dataset.csv");
  const auto board_summary = summarize(boards);
  write_text(dir / "board_summary.csv", summary_csv(board_summary));
  write_text(dir / "board_histogram.csv", histogram_csv(boards));
  if (synthetic.size() >= 2) write_text(dir / "summary.csv", summary_csv(summarize(synthetic)));
  log << "bootstrapped " << boards.size() << " boards into " << synthetic.size() << " samples\n";
  print_summary(board_summary, log);
  return static_cast<int>(ExitCode::Ok);
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  if (cfg.baseline != "none" && cfg.baseline != "linear") throw UsageError("--baseline must be none or linear");
  const PredictorSpec spec = cfg.predictor_spec();
  const Dataset data = read_csv(input_path(cfg.data, cfg, "dataset.csv"));
  auto [train, test] = split(data, cfg.train_fraction, cfg.seed);
  const fs::path dir = prepare_out(cfg, "train");

  std::vector<int> train_ids;
  for (const auto& s : train.samples) train_ids.push_back(s.sample_id);
  write_text(dir / "split.csv", split_csv(train, test));

  const PredictorModel nn = train_nn(train, spec);
  save_predictor(nn, dir / "model.json");
  const RmsReport rms = rms_error(nn, test, train_ids);
  write_text(dir / "rms.csv", rms_to_csv_text(rms));
  log << "neural network: " << nn.log.epochs_run << " epochs (best " << nn.log.best_epoch << ")\n" << format_rms(rms);

  if (cfg.baseline == "linear") {
    const PredictorModel lin = train_linear(train, spec);
    save_predictor(lin, dir / "model_linear.json");
    const RmsReport rms_lin = rms_error(lin, test, train_ids);
    write_text(dir / "rms_linear.csv", rms_to_csv_text(rms_lin));
    log << "linear baseline" << (lin.log.pseudo_inverse ? " (pseudo-inverse)" : "") << ":\n" << format_rms(rms_lin);
  }
  return static_cast<int>(ExitCode::Ok);
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  const PredictorModel model = load_predictor(input_path(cfg.model, cfg, "model.json"));
  Dataset data = read_csv(input_path(cfg.data, cfg, "dataset.csv"));
  std::optional<std::vector<int>> train_ids;
  if (!cfg.split.empty()) {
    const auto ids = read_split_ids(cfg.split, "train");
    data = subset(data, ids, false);
    train_ids.emplace(ids.begin(), ids.end());
  }
  const fs::path dir = prepare_out(cfg, "eval");
  const RmsReport rms = train_ids ? rms_error(model, data, std::span<const int>(*train_ids)) : rms_error(model, data);
  write_text(dir / "eval_rms.csv", rms_to_csv_text(rms));
  log << format_rms(rms);
  return static_cast<int>(ExitCode::Ok);
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.measured.empty()) throw UsageError("--measured is required");
  if (cfg.target.empty()) throw UsageError("--target is required");
  TargetSpec target;
  try {
    target = parse_target_spec(cfg.target);
    cfg.margin.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--target/--margin: ") + e.what());
  }
  const CandidateFile file = read_candidates(cfg.measured);

  CalibrationReport report;
  RecordedDevice device(file.measured);
  const CalibrateOptions options{cfg.verify};
  if (!cfg.model.empty()) {
    if (!file.predicted.empty())
      throw ContractError("the measured file supplies predictions and a model was also given");
    const PredictorModel model = load_predictor(cfg.model);
    for (auto c : model.spec.known_set)
      if (!file.measured.contains(c))
        throw ContractError("measured file lacks known combo " + std::to_string(c) + " required by the model");
    ModelPredictor predictor(model);
    report = calibrate(device, predictor, target, {model.spec.known_set}, cfg.margin, options);
  } else {
    if (file.measured.empty()) throw ContractError("measured file has no measured rows");
    std::vector<ComboIndex> known;
    for (const auto& [c, perf] : file.measured) known.push_back(c);
    FixedPredictor predictor(known, file.predicted);
    report = calibrate(device, predictor, target, {known}, cfg.margin, options);
  }

  const fs::path dir = prepare_out(cfg, "calibrate");
  write_text(dir / "report.txt", report_to_text(report));
  write_text(dir / "report.csv", report_to_csv(report));
  log << report_to_text(report);
  return static_cast<int>(report.chosen ? ExitCode::Ok : ExitCode::Infeasible);
}

int cmd_demo(const RunConfig& cfg, std::ostream& log) {
  const fs::path root(cfg.out);
  const fs::path fixtures(cfg.fixtures);
  const std::string case_target = cfg.target.empty() ? "gain:15..17,p1db:>-20,nf:<3.7" : cfg.target;
  prepare_out(cfg, "demo");

  auto stage = [&](const char* name) {
    RunConfig c = cfg;
    c.out = (root / name).string();
    return c;
  };
  auto expect_ok = [](int code, const char* what) {
    if (code != 0) throw Error(std::string("demo stage ") + what + " failed with exit code " + std::to_string(code));
  };

  log << "== gen\n";
  RunConfig gen = stage("gen");
  expect_ok(cmd_gen(gen, log), "gen");

  log << "== boards\n";
  RunConfig boards = stage("boards");
  boards.boards = (fixtures / "boards_4.csv").string();
  expect_ok(cmd_boards(boards, log), "boards");

  auto train_stage = [&](const char* name, const std::string& data, std::vector<ComboIndex> known,
                         std::vector<ComboIndex> targets, const char* baseline) {
    log << "== train " << name << "\n";
    RunConfig t = stage(name);
    t.data = data;
    t.known = std::move(known);
    t.predict = std::move(targets);
    t.baseline = baseline;
    expect_ok(cmd_train(t, log), name);
    return t;
  };
  const std::string sim_data = (root / "gen" / "dataset.csv").string();
  train_stage("train_known0", sim_data, {0}, {}, "linear");
  const RunConfig one = train_stage("train_known4", sim_data, {4}, {5, 6}, "none");
  const RunConfig two = train_stage("train_known46", sim_data, {4, 6}, {5}, "none");
  train_stage("train_boards", (root / "boards" / "dataset.csv").string(), {0}, {}, "linear");

  auto calibrate_stage = [&](const char* name, const fs::path& measured, const std::string& model) {
    log << "== calibrate " << name << "\n";
    RunConfig c = stage(name);
    c.target = case_target;
    c.measured = measured.string();
    c.model = model;
    const int code = cmd_calibrate(c, log);
    if (code != 0 && code != static_cast<int>(ExitCode::Infeasible)) expect_ok(code, name);
    return read_candidates(measured);
  };
  calibrate_stage("case1", fixtures / "case1.csv", "");
  calibrate_stage("case2", fixtures / "case2.csv", "");

  // Same measurements, predictions from the models trained above.
  auto measured_only = [&](const char* name, const fs::path& from) {
    const CandidateFile f = read_candidates(from);
    std::ostringstream os;
    os << "combo_id,source,gain_db,nf_db,p1db_dbm,idc_ma\n";
    for (const auto& [c, perf] : f.measured) {
      os << c << ",measured";
      for (Param p : kAllParams) os << ',' << format_double(perf[p]);
      os << '\n';
    }
    const fs::path path = root / name;
    write_text(path, os.str());
    return path;
  };
  calibrate_stage("case1_model", measured_only("case1_measured.csv", fixtures / "case1.csv"),
                  (fs::path(one.out) / "model.json").string());
  calibrate_stage("case2_model", measured_only("case2_measured.csv", fixtures / "case2.csv"),
                  (fs::path(two.out) / "model.json").string());

  log << "demo outputs in " << root.string() << "\n";
  return static_cast<int>(ExitCode::Ok);
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Usage);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::File);
  } catch (const FileError& e) {
    err << "file error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::File);
  } catch (const ContractError& e) {
    err << "contract error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Contract);
  } catch (const InsufficientDataError& e) {
    err << "insufficient data: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Data);
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Data);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Data);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Failure);
  }
}

}  // namespace lnatune
