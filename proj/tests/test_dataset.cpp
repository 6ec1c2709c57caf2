#include <doctest.h>

#include "lnatune/dataset.hpp"
#include "lnatune/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

using namespace lnatune;

namespace {

Dataset boards_from(const std::vector<std::array<PerformanceVector, kNumCombos>>& rows) {
  Dataset d;
  d.provenance = Provenance::Measured;
  for (std::size_t i = 0; i < rows.size(); ++i) d.samples.push_back({static_cast<int>(i), rows[i]});
  return d;
}

std::array<PerformanceVector, kNumCombos> nominal_rows(const DeviceModel& m, double shift = 0.0) {
  std::array<PerformanceVector, kNumCombos> r;
  for (int c = 0; c < kNumCombos; ++c) {
    r[c] = PerformanceVector(m.nominal[c].values);
    r[c].values.array() += shift;
  }
  return r;
}

double sample_std(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TEST_CASE("generate_mc: shape and per-combo gain spread") {
  auto m = default_model();
  auto d = generate_mc(m, 200, 42);
  REQUIRE(d.size() == 200);
  CHECK(d.provenance == Provenance::Simulated);
  CHECK(d.seed == 42u);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.samples[i].sample_id == static_cast<int>(i));

  auto t = summarize(d);
  for (int c = 0; c < kNumCombos; ++c) {
    // closed form: scale * sqrt(0.35^2 + 0.15^2) with noise 0.05 added in quadrature
    double f = 0.8 + 0.4 * c / 11.0;
    double expected = std::sqrt(std::pow(f * std::hypot(0.35, 0.15), 2) + 0.05 * 0.05);
    double sd = *t.at(c, Param::Gain).std;
    CHECK(sd >= 0.2);
    CHECK(sd <= 0.6);
    CHECK(sd == doctest::Approx(expected).epsilon(0.2));
  }
}

TEST_CASE("generate_mc: determinism and worker independence") {
  auto m = default_model();
  auto a = generate_mc(m, 64, 7);
  CHECK(a == generate_mc(m, 64, 7));
  CHECK(to_csv_text(a) == to_csv_text(generate_mc(m, 64, 7, 4)));
  CHECK_FALSE(a == generate_mc(m, 64, 8));
  // prefixes agree: sample i does not depend on n
  auto b = generate_mc(m, 10, 7);
  for (int i = 0; i < 10; ++i) CHECK(a.samples[i] == b.samples[i]);
}

TEST_CASE("generate_mc: degenerate model gives the nominal table") {
  auto m = default_model();
  m.noise_sigma.setZero();
  for (auto& s : m.sensitivity) s.setZero();
  auto d = generate_mc(m, 3, 1);
  for (const auto& s : d.samples)
    for (int c = 0; c < kNumCombos; ++c) CHECK(s.perf[c].values == m.nominal[c].values);
  CHECK_THROWS_AS(generate_mc(m, 0, 1), DomainError);
}

TEST_CASE("generate_mc: means converge to nominal") {
  auto m = default_model();
  const int n = 200;
  auto d = generate_mc(m, n, 42);
  auto t = summarize(d);
  for (int c = 0; c < kNumCombos; ++c)
    for (Param p : kAllParams) {
      double sigma = std::sqrt(m.sensitivity[c].row(index_of(p)).squaredNorm() +
                               m.noise_sigma[index_of(p)] * m.noise_sigma[index_of(p)]);
      CHECK(std::abs(t.at(c, p).mean - m.nominal[c][p]) <= 4.0 * sigma / std::sqrt(double(n)));
    }
}

TEST_CASE("bootstrap_boards: sizes and errors") {
  auto m = default_model();
  auto boards = boards_from({nominal_rows(m, 0.1), nominal_rows(m, -0.1), nominal_rows(m, 0.3), nominal_rows(m)});
  auto d = bootstrap_boards(boards, 100, 5);
  CHECK(d.size() == 100);
  CHECK(d.provenance == Provenance::BoardBootstrap);
  CHECK(d.seed == 5u);
  CHECK(bootstrap_boards(boards, 1, 5).size() == 1);
  CHECK(d == bootstrap_boards(boards, 100, 5));

  CHECK_THROWS_AS(bootstrap_boards(boards_from({nominal_rows(m)}), 10, 1), InsufficientDataError);
  CHECK_THROWS_AS(bootstrap_boards(boards, 0, 1), DomainError);
}

TEST_CASE("bootstrap_boards: identical boards reproduce the board") {
  auto m = default_model();
  auto row = nominal_rows(m, 0.25);
  auto d = bootstrap_boards(boards_from({row, row, row}), 20, 3);
  for (const auto& s : d.samples)
    for (int c = 0; c < kNumCombos; ++c) CHECK(s.perf[c].values == row[c].values);
}

TEST_CASE("bootstrap_boards: moments within CLT bounds") {
  auto m = default_model();
  auto boards = generate_mc(m, 4, 2019);
  boards.provenance = Provenance::Measured;
  boards.seed.reset();
  const int n = 10000;
  auto bt = summarize(boards);
  auto st = summarize(bootstrap_boards(boards, n, 11));
  for (int c = 0; c < kNumCombos; ++c)
    for (Param p : kAllParams) {
      double sd = *bt.at(c, p).std;
      CHECK(std::abs(st.at(c, p).mean - bt.at(c, p).mean) <= 3.0 * sd / std::sqrt(double(n)) + 1e-12);
      CHECK(*st.at(c, p).std == doctest::Approx(sd).epsilon(0.05));
    }
  // rank-1 coupling: every pair of combos is perfectly correlated per parameter
  for (Param p : kAllParams) CHECK(*st.corr(p, 0, 11) == doctest::Approx(1.0));
}

TEST_CASE("split") {
  auto d = generate_mc(default_model(), 200, 42);
  auto [train, test] = split(d, 0.75, 42);
  CHECK(train.size() == 150);
  CHECK(test.size() == 50);

  std::multiset<int> ids;
  for (const auto& s : train.samples) ids.insert(s.sample_id);
  for (const auto& s : test.samples) ids.insert(s.sample_id);
  std::multiset<int> all;
  for (const auto& s : d.samples) all.insert(s.sample_id);
  CHECK(ids == all);
  for (const auto& s : test.samples) CHECK(s == d.samples[s.sample_id]);
  CHECK(std::is_sorted(train.samples.begin(), train.samples.end(),
                       [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; }));

  auto again = split(d, 0.75, 42);
  CHECK(again.first == train);
  CHECK(again.second == test);
  CHECK_FALSE(split(d, 0.75, 43).second == test);

  CHECK_THROWS_AS(split(d, 0.0, 1), DomainError);
  CHECK_THROWS_AS(split(d, 1.0, 1), DomainError);
  CHECK_THROWS_AS(split(generate_mc(default_model(), 2, 1), 0.9, 1), DomainError);
}

TEST_CASE("summarize") {
  SUBCASE("constant dataset") {
    auto m = default_model();
    auto row = nominal_rows(m);
    auto t = summarize(boards_from({row, row, row}));
    CHECK(t.n == 3);
    CHECK(*t.at(4, Param::Gain).std == 0.0);
    CHECK(t.at(4, Param::Gain).mean == doctest::Approx(16.29));
    CHECK_FALSE(t.corr(Param::Gain, 0, 1));
  }
  SUBCASE("single sample") {
    auto t = summarize(boards_from({nominal_rows(default_model())}));
    CHECK_FALSE(t.at(0, Param::Gain).std);
    CHECK_FALSE(t.corr(Param::Gain, 0, 1));
  }
  SUBCASE("default population") {
    auto t = summarize(generate_mc(default_model(), 200, 42));
    for (int a = 0; a < kNumCombos; ++a)
      for (int b = 0; b < kNumCombos; ++b) {
        CHECK(*t.corr(Param::Gain, a, b) >= 0.8);
        for (Param p : kAllParams) {
          auto r = t.corr(p, a, b);
          REQUIRE(r);
          CHECK(std::abs(*r) <= 1.0 + 1e-12);
        }
      }
    CHECK(t.union_span(Param::Gain) >= 11.0);
    for (int c = 0; c < kNumCombos; ++c)
      for (Param p : kAllParams) {
        const auto& s = t.at(c, p);
        CHECK(s.min <= s.mean);
        CHECK(s.mean <= s.max);
        CHECK(*s.std >= 0.0);
      }
  }
  SUBCASE("statistics match a direct computation") {
    auto d = generate_mc(default_model(), 30, 3);
    std::vector<double> v;
    for (const auto& s : d.samples) v.push_back(s.perf[6].nf_db());
    auto t = summarize(d);
    CHECK(*t.at(6, Param::NoiseFigure).std == doctest::Approx(sample_std(v)).epsilon(1e-12));
    CHECK(t.at(6, Param::NoiseFigure).min == *std::min_element(v.begin(), v.end()));
  }
}

TEST_CASE("feature_matrix layout") {
  auto d = generate_mc(default_model(), 5, 1);
  std::vector<ComboIndex> combos{4, 6};
  auto x = feature_matrix(d, combos);
  CHECK(x.rows() == 5);
  CHECK(x.cols() == 8);
  CHECK(x(2, 0) == d.samples[2].perf[4].gain_db());
  CHECK(x(2, 7) == d.samples[2].perf[6].idc_ma());
}

TEST_CASE("csv round trip") {
  auto d = generate_mc(default_model(), 25, 9);
  auto text = to_csv_text(d);
  CHECK(text.rfind("# provenance=simulated\n# seed=9\nsample_id,combo_id,gain_db,nf_db,p1db_dbm,idc_ma\n", 0) == 0);
  auto back = from_csv_text(text);
  CHECK(back == d);
  CHECK(to_csv_text(back) == text);

  auto path = std::filesystem::temp_directory_path() / "lnatune_ds_rt.csv";
  write_csv(d, path);
  CHECK(read_csv(path) == d);
  std::filesystem::remove(path);

  auto boards = d;
  boards.provenance = Provenance::Measured;
  boards.seed.reset();
  auto btext = to_csv_text(boards);
  CHECK(btext.find("board_id,combo_id") != std::string::npos);
  CHECK(from_csv_text(btext) == boards);

  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv errors") {
  auto d = generate_mc(default_model(), 2, 9);
  auto text = to_csv_text(d);

  SUBCASE("missing combo") {
    // drop the last row: sample 1, combo 11
    auto cut = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    try {
      from_csv_text(cut);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      std::string msg = e.what();
      CHECK(msg.find("sample 1") != std::string::npos);
      CHECK(msg.find("combo 11") != std::string::npos);
      CHECK(msg.find("line ") != std::string::npos);
    }
  }
  SUBCASE("duplicate row") {
    auto line_end = text.find('\n', text.find("0,3,"));
    auto dup = text + text.substr(text.find("0,3,"), line_end - text.find("0,3,") + 1);
    CHECK_THROWS_AS(from_csv_text(dup), ParseError);
  }
  SUBCASE("malformed number") {
    auto bad = text;
    bad.replace(bad.find("0,0,") + 4, 1, "x");
    CHECK_THROWS_AS(from_csv_text(bad), ParseError);
  }
  SUBCASE("header only") {
    auto e = from_csv_text("# provenance=measured\nboard_id,combo_id,gain_db,nf_db,p1db_dbm,idc_ma\n");
    CHECK(e.empty());
    CHECK(e.provenance == Provenance::Measured);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_csv("/nonexistent/lnatune.csv"), FileError);
  }
}
