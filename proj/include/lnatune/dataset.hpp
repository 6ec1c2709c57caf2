#pragma once

#include "lnatune/dut_model.hpp"
#include "lnatune/random.hpp"
#include "lnatune/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lnatune {

enum class Provenance { Simulated, BoardBootstrap, Measured };

std::string_view to_string(Provenance p);
std::optional<Provenance> provenance_from_string(std::string_view s);

struct SampleRecord {
  int sample_id = 0;
  std::array<PerformanceVector, kNumCombos> perf;

  bool operator==(const SampleRecord&) const = default;
};

/// A device population; every sample carries all 12 combinations.
struct Dataset {
  std::vector<SampleRecord> samples;
  Provenance provenance = Provenance::Simulated;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool operator==(const Dataset&) const = default;
};

/// Stream tags so that different uses of the same (seed, id) never share draws.
inline constexpr std::uint32_t kMonteCarloTag = 1;
inline constexpr std::uint32_t kBootstrapTag = 2;

/// z ~ N(0, I4), four draws from `rng`.
ProcessSample draw_process_sample(RngStream& rng);

/// The latent sample generate_mc uses for `sample_id` under `seed`.
ProcessSample mc_process_sample(std::uint64_t seed, int sample_id);

/// n Monte-Carlo devices measured at all 12 combinations. Each sample uses its
/// own substream, so the result is the same for any worker count.
Dataset generate_mc(const DeviceModel& model, int n, std::uint64_t seed, int workers = 1);

/// Expands a handful of measured boards into m synthetic samples. For each
/// parameter, one shared standard-normal draw per synthetic sample scales the
/// board standard deviation of every combination:
///   value[c][p] = mean[c][p] + std[c][p] * u_p.
/// Throws InsufficientDataError with fewer than 2 boards.
Dataset bootstrap_boards(const Dataset& boards, int m, std::uint64_t seed);

/// Disjoint partition by shuffled sample id; parts keep original ids, sorted.
/// Throws DomainError when either part would be empty.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

struct ParamStats {
  double mean = 0.0;
  std::optional<double> std;  // absent for a single sample
  double min = 0.0;
  double max = 0.0;
};

struct SummaryTable {
  std::size_t n = 0;
  std::array<std::array<ParamStats, kNumParams>, kNumCombos> stats;
  // Cross-combination correlation per parameter; NaN marks an undefined entry.
  std::array<Eigen::Matrix<double, kNumCombos, kNumCombos>, kNumParams> correlation;

  const ParamStats& at(ComboIndex c, Param p) const { return stats[c][index_of(p)]; }
  std::optional<double> corr(Param p, ComboIndex a, ComboIndex b) const;
  /// max - min of the parameter over every sample and combination.
  double union_span(Param p) const;
};

SummaryTable summarize(const Dataset& data);

/// N x (4*|combos|) matrix; columns are the 4 parameters of each listed combo in order.
SampleMatrix<double> feature_matrix(const Dataset& data, std::span<const ComboIndex> combos);

/// CSV: comment lines "# provenance=...", "# seed=...", then
/// sample_id,combo_id,gain_db,nf_db,p1db_dbm,idc_ma (board_id for measured data).
std::string to_csv_text(const Dataset& data);
Dataset from_csv_text(const std::string& text);
void write_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace lnatune
