#include "lnatune/dataset.hpp"

#include "lnatune/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace lnatune {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Simulated: return "simulated";
    case Provenance::BoardBootstrap: return "board_bootstrap";
    case Provenance::Measured: return "measured";
  }
  return "";
}

std::optional<Provenance> provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::Simulated, Provenance::BoardBootstrap, Provenance::Measured})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

ProcessSample draw_process_sample(RngStream& rng) {
  ProcessSample s;
  for (int k = 0; k < kNumLatent; ++k) s.z[k] = standard_normal(rng);
  return s;
}

ProcessSample mc_process_sample(std::uint64_t seed, int sample_id) {
  auto rng = substream(seed, static_cast<std::uint64_t>(sample_id), kMonteCarloTag);
  return draw_process_sample(rng);
}

namespace {

SampleRecord simulate_one(const DeviceModel& model, std::uint64_t seed, int id) {
  auto rng = substream(seed, static_cast<std::uint64_t>(id), kMonteCarloTag);
  const ProcessSample sample = draw_process_sample(rng);
  SampleRecord rec;
  rec.sample_id = id;
  for (int c = 0; c < kNumCombos; ++c) {
    rec.perf[c] = measure(model, sample, c, rng);
    rec.perf[c].s11_db.reset();
    rec.perf[c].s22_db.reset();
  }
  return rec;
}

}  // namespace

Dataset generate_mc(const DeviceModel& model, int n, std::uint64_t seed, int workers) {
  if (n < 1) throw DomainError("generate_mc needs n >= 1");
  Dataset data;
  data.provenance = Provenance::Simulated;
  data.seed = seed;
  data.samples.resize(static_cast<std::size_t>(n));

  workers = std::clamp(workers, 1, n);
  auto run = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) data.samples[i] = simulate_one(model, seed, i);
  };
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::jthread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk, end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
  }
  return data;
}

Dataset bootstrap_boards(const Dataset& boards, int m, std::uint64_t seed) {
  if (boards.size() < 2)
    throw InsufficientDataError("board bootstrap needs at least 2 boards, got " + std::to_string(boards.size()));
  if (m < 1) throw DomainError("bootstrap_boards needs m >= 1");

  const double nb = static_cast<double>(boards.size());
  std::array<Vector4<double>, kNumCombos> mean, sd;
  for (int c = 0; c < kNumCombos; ++c) {
    // Shifted by the first board, so identical boards give their value exactly.
    const Vector4<double>& ref = boards.samples.front().perf[c].values;
    Vector4<double> dev = Vector4<double>::Zero();
    for (const auto& s : boards.samples) dev += s.perf[c].values - ref;
    mean[c] = ref + dev / nb;
    Vector4<double> ss = Vector4<double>::Zero();
    for (const auto& s : boards.samples) ss += (s.perf[c].values - mean[c]).cwiseAbs2();
    sd[c] = (ss / (nb - 1.0)).cwiseSqrt();
  }

  Dataset out;
  out.provenance = Provenance::BoardBootstrap;
  out.seed = seed;
  out.samples.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto rng = substream(seed, static_cast<std::uint64_t>(j), kBootstrapTag);
    Vector4<double> u;
    for (int p = 0; p < kNumParams; ++p) u[p] = standard_normal(rng);
    auto& rec = out.samples[j];
    rec.sample_id = j;
    for (int c = 0; c < kNumCombos; ++c)
      rec.perf[c] = PerformanceVector(Vector4<double>(mean[c] + sd[c].cwiseProduct(u)));
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DomainError("train fraction must lie strictly between 0 and 1");
  const auto n = data.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  if (n_train < 1 || n_train >= n)
    throw DomainError("split of " + std::to_string(n) + " samples at fraction " + format_double(train_fraction) +
                      " leaves an empty part");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset train{{}, data.provenance, data.seed}, test{{}, data.provenance, data.seed};
  for (std::size_t k = 0; k < n; ++k) (k < n_train ? train : test).samples.push_back(data.samples[order[k]]);
  auto by_id = [](const SampleRecord& a, const SampleRecord& b) { return a.sample_id < b.sample_id; };
  std::sort(train.samples.begin(), train.samples.end(), by_id);
  std::sort(test.samples.begin(), test.samples.end(), by_id);
  return {std::move(train), std::move(test)};
}

std::optional<double> SummaryTable::corr(Param p, ComboIndex a, ComboIndex b) const {
  const double v = correlation[index_of(p)](a, b);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

double SummaryTable::union_span(Param p) const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : stats) {
    lo = std::min(lo, row[index_of(p)].min);
    hi = std::max(hi, row[index_of(p)].max);
  }
  return hi - lo;
}

SummaryTable summarize(const Dataset& data) {
  if (data.empty()) throw DomainError("cannot summarize an empty dataset");
  SummaryTable t;
  t.n = data.size();
  const double n = static_cast<double>(t.n);

  for (int p = 0; p < kNumParams; ++p) {
    // Column c holds parameter p at combo c across all samples.
    Eigen::MatrixXd x(data.size(), kNumCombos);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (int c = 0; c < kNumCombos; ++c) x(i, c) = data.samples[i].perf[c].values[p];

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    Eigen::VectorXd sd = Eigen::VectorXd::Zero(kNumCombos);
    if (t.n >= 2) sd = (centered.colwise().squaredNorm() / (n - 1.0)).cwiseSqrt().transpose();

    for (int c = 0; c < kNumCombos; ++c) {
      auto& s = t.stats[c][p];
      s.mean = mean[c];
      s.min = x.col(c).minCoeff();
      s.max = x.col(c).maxCoeff();
      // Rounding can put the mean of a near-constant column an ulp outside [min, max].
      s.mean = std::clamp(s.mean, s.min, s.max);
      if (t.n >= 2) s.std = sd[c];
    }

    auto& r = t.correlation[p];
    r.setConstant(std::numeric_limits<double>::quiet_NaN());
    if (t.n >= 2) {
      const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);
      for (int a = 0; a < kNumCombos; ++a)
        for (int b = 0; b < kNumCombos; ++b)
          if (sd[a] > 0.0 && sd[b] > 0.0) r(a, b) = std::clamp(cov(a, b) / (sd[a] * sd[b]), -1.0, 1.0);
    }
  }
  return t;
}

SampleMatrix<double> feature_matrix(const Dataset& data, std::span<const ComboIndex> combos) {
  SampleMatrix<double> x(static_cast<Eigen::Index>(data.size()), kNumParams * static_cast<Eigen::Index>(combos.size()));
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t k = 0; k < combos.size(); ++k) {
      if (!valid_combo(combos[k])) throw DomainError("combination index out of range in feature list");
      x.row(i).segment<kNumParams>(kNumParams * k) = data.samples[i].perf[combos[k]].values.transpose();
    }
  return x;
}

}  // namespace lnatune
