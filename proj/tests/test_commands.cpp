#include <doctest.h>

#include "lnatune/commands.hpp"
#include "lnatune/dataset.hpp"
#include "lnatune/errors.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lnatune;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("lnatune_cmd_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(int (*cmd)(const RunConfig&, std::ostream&), const RunConfig& cfg) {
  std::ostringstream log, err;
  return run_guarded([&] { return cmd(cfg, log); }, err);
}

fs::path fixture(const char* name) { return fs::path(LNATUNE_DATA_DIR) / name; }

}  // namespace

TEST_CASE("gen writes a reproducible dataset and its config") {
  RunConfig cfg;
  cfg.out = scratch("gen").string();
  cfg.n = 50;
  REQUIRE(run(cmd_gen, cfg) == 0);
  for (auto f : {"dataset.csv", "histogram.csv", "summary.csv", "correlation.csv", "validation.txt", "gen_config.json"})
    CHECK(fs::exists(fs::path(cfg.out) / f));
  auto first = slurp(fs::path(cfg.out) / "dataset.csv");
  CHECK(read_csv(fs::path(cfg.out) / "dataset.csv").size() == 50);
  CHECK(slurp(fs::path(cfg.out) / "validation.txt").find("FAIL") == std::string::npos);
  CHECK(slurp(fs::path(cfg.out) / "gen_config.json").find("\"n\": 50") != std::string::npos);

  REQUIRE(run(cmd_gen, cfg) == 0);
  CHECK(slurp(fs::path(cfg.out) / "dataset.csv") == first);

  cfg.n = 0;
  CHECK(run(cmd_gen, cfg) == static_cast<int>(ExitCode::Usage));
}

TEST_CASE("gen with a model config file") {
  RunConfig cfg;
  cfg.out = scratch("gen_cfg").string();
  cfg.n = 5;
  cfg.model_config = fixture("default_model.json").string();
  REQUIRE(run(cmd_gen, cfg) == 0);
  RunConfig plain = cfg;
  plain.model_config.clear();
  plain.out = scratch("gen_plain").string();
  REQUIRE(run(cmd_gen, plain) == 0);
  CHECK(slurp(fs::path(cfg.out) / "dataset.csv") == slurp(fs::path(plain.out) / "dataset.csv"));

  cfg.model_config = "/nonexistent/model.json";
  CHECK(run(cmd_gen, cfg) == static_cast<int>(ExitCode::File));
}

TEST_CASE("train, eval and the linear baseline") {
  RunConfig cfg;
  cfg.out = scratch("train").string();
  REQUIRE(run(cmd_gen, cfg) == 0);
  cfg.baseline = "linear";
  REQUIRE(run(cmd_train, cfg) == 0);
  fs::path out(cfg.out);
  for (auto f : {"model.json", "rms.csv", "split.csv", "model_linear.json", "rms_linear.csv", "train_config.json"})
    CHECK(fs::exists(out / f));

  std::istringstream rms(slurp(out / "rms.csv"));
  std::string line;
  std::getline(rms, line);
  CHECK(line == "target_combo,parameter,rms");
  int gain_rows = 0;
  while (std::getline(rms, line)) {
    if (line.find(",gain,") == std::string::npos) continue;
    ++gain_rows;
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) <= 0.5);
  }
  CHECK(gain_rows == 11);

  // scoring the held-out part of the same split reproduces rms.csv
  RunConfig ev = cfg;
  ev.split = (out / "split.csv").string();
  REQUIRE(run(cmd_eval, ev) == 0);
  CHECK(slurp(out / "eval_rms.csv") == slurp(out / "rms.csv"));

  RunConfig missing = cfg;
  missing.data = (out / "nope.csv").string();
  CHECK(run(cmd_train, missing) == static_cast<int>(ExitCode::File));
}

TEST_CASE("two-known training") {
  RunConfig cfg;
  cfg.out = scratch("train46").string();
  REQUIRE(run(cmd_gen, cfg) == 0);
  cfg.known = {4, 6};
  cfg.predict = {5};
  REQUIRE(run(cmd_train, cfg) == 0);
  auto model = load_predictor(fs::path(cfg.out) / "model.json");
  CHECK(model.spec.known_set == std::vector<ComboIndex>{4, 6});
  CHECK(model.spec.target_set == std::vector<ComboIndex>{5});

  cfg.predict = {4};  // overlaps the known set
  CHECK(run(cmd_train, cfg) == static_cast<int>(ExitCode::Usage));
}

TEST_CASE("calibrate on the decision fixtures") {
  RunConfig cfg;
  cfg.target = "gain:15..17,p1db:>-20,nf:<3.7";
  cfg.out = scratch("cal1").string();
  cfg.measured = fixture("case1.csv").string();
  REQUIRE(run(cmd_calibrate, cfg) == 0);
  auto csv = slurp(fs::path(cfg.out) / "report.csv");
  CHECK(csv.find("4,measured,1,,16.29,3.65,-18.45,15,1") != std::string::npos);
  CHECK(fs::exists(fs::path(cfg.out) / "calibrate_config.json"));

  cfg.out = scratch("cal2").string();
  cfg.measured = fixture("case2.csv").string();
  REQUIRE(run(cmd_calibrate, cfg) == 0);
  CHECK(slurp(fs::path(cfg.out) / "report.txt").find("chosen: combo 5") != std::string::npos);

  cfg.target = "nf:<2.0";
  CHECK(run(cmd_calibrate, cfg) == static_cast<int>(ExitCode::Infeasible));
  CHECK(slurp(fs::path(cfg.out) / "report.txt").find("chosen: none") != std::string::npos);

  cfg.target = "gain:17..15";
  CHECK(run(cmd_calibrate, cfg) == static_cast<int>(ExitCode::Usage));
}

TEST_CASE("calibrate with a trained model") {
  RunConfig cfg;
  cfg.out = scratch("cal_model").string();
  REQUIRE(run(cmd_gen, cfg) == 0);
  cfg.known = {4};
  cfg.predict = {5, 6};
  REQUIRE(run(cmd_train, cfg) == 0);

  fs::path out(cfg.out);
  {
    std::ofstream f(out / "measured.csv");
    f << "combo_id,source,gain_db,nf_db,p1db_dbm,idc_ma\n4,measured,16.29,3.65,-18.45,15.0\n";
  }
  RunConfig cal = cfg;
  cal.model = (out / "model.json").string();
  cal.measured = (out / "measured.csv").string();
  cal.target = "gain:15..17,p1db:>-20,nf:<3.7";
  CHECK(run(cmd_calibrate, cal) == 0);

  {
    std::ofstream f(out / "wrong.csv");
    f << "combo_id,source,gain_db,nf_db,p1db_dbm,idc_ma\n6,measured,15.05,3.38,-15.8,21.3\n";
  }
  cal.measured = (out / "wrong.csv").string();
  CHECK(run(cmd_calibrate, cal) == static_cast<int>(ExitCode::Contract));

  cal.measured = fixture("case1.csv").string();
  CHECK(run(cmd_calibrate, cal) == static_cast<int>(ExitCode::Contract));
}

TEST_CASE("boards") {
  RunConfig cfg;
  cfg.out = scratch("boards").string();
  cfg.boards = fixture("boards_4.csv").string();
  REQUIRE(run(cmd_boards, cfg) == 0);
  auto d = read_csv(fs::path(cfg.out) / "dataset.csv");
  CHECK(d.size() == 100);
  CHECK(d.provenance == Provenance::BoardBootstrap);
  CHECK(fs::exists(fs::path(cfg.out) / "board_summary.csv"));

  cfg.m = 1;
  REQUIRE(run(cmd_boards, cfg) == 0);
  CHECK(read_csv(fs::path(cfg.out) / "dataset.csv").size() == 1);

  // one board is not enough
  fs::path out(cfg.out);
  auto boards = read_csv(fixture("boards_4.csv"));
  boards.samples.resize(1);
  write_csv(boards, out / "one_board.csv");
  cfg.boards = (out / "one_board.csv").string();
  CHECK(run(cmd_boards, cfg) == static_cast<int>(ExitCode::Data));

  // identical boards give a zero-variance population
  auto same = read_csv(fixture("boards_4.csv"));
  for (auto& s : same.samples) s.perf = same.samples[0].perf;
  write_csv(same, out / "same.csv");
  cfg.boards = (out / "same.csv").string();
  cfg.m = 10;
  REQUIRE(run(cmd_boards, cfg) == 0);
  auto flat = read_csv(out / "dataset.csv");
  for (const auto& s : flat.samples) CHECK(s.perf == same.samples[0].perf);
}

TEST_CASE("run_guarded maps errors to exit codes") {
  std::ostringstream err;
  CHECK(run_guarded([]() -> int { throw UsageError("x"); }, err) == 2);
  CHECK(run_guarded([]() -> int { throw FileError("x"); }, err) == 3);
  CHECK(run_guarded([]() -> int { throw ParseError("x", 3); }, err) == 3);
  CHECK(run_guarded([]() -> int { throw ContractError("x"); }, err) == 4);
  CHECK(run_guarded([]() -> int { throw InsufficientDataError("x"); }, err) == 6);
  CHECK(run_guarded([]() -> int { throw std::runtime_error("x"); }, err) == 1);
  CHECK(run_guarded([] { return 0; }, err) == 0);
}
