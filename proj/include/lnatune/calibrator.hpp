#pragma once

#include "lnatune/dut_model.hpp"
#include "lnatune/predictor.hpp"
#include "lnatune/types.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lnatune {

/// Bound on one parameter. Bounds are inclusive.
struct Constraint {
  enum class Kind { Unconstrained, Interval, AtLeast, AtMost };
  Kind kind = Kind::Unconstrained;
  double lo = 0.0;
  double hi = 0.0;

  static Constraint interval(double lo, double hi) { return {Kind::Interval, lo, hi}; }
  static Constraint at_least(double lo) { return {Kind::AtLeast, lo, 0.0}; }
  static Constraint at_most(double hi) { return {Kind::AtMost, 0.0, hi}; }

  bool has_lower() const { return kind == Kind::Interval || kind == Kind::AtLeast; }
  bool has_upper() const { return kind == Kind::Interval || kind == Kind::AtMost; }
  bool operator==(const Constraint&) const = default;
};

/// Constraints on gain, NF and P1dB; the objective is always minimum DC current.
struct TargetSpec {
  Constraint gain;
  Constraint nf;
  Constraint p1db;

  /// Throws DomainError for Param::Current, which is the objective.
  const Constraint& operator[](Param p) const;
  Constraint& operator[](Param p);

  /// Throws DomainError for an inverted interval or when nothing is constrained.
  void validate() const;
  bool operator==(const TargetSpec&) const = default;
};

inline constexpr std::array<Param, 3> kConstrainedParams = {Param::Gain, Param::NoiseFigure, Param::P1dB};

/// Grammar: comma-separated `param:lo..hi`, `param:>lo`, `param:<hi` with
/// param in {gain, nf, p1db}, e.g. "gain:15..17,p1db:>-20,nf:<3.7".
/// Throws ParseError on malformed text, DomainError on invalid bounds.
TargetSpec parse_target_spec(std::string_view text);
std::string format_target_spec(const TargetSpec& target);

/// Inward tightening of every active bound, applied to predicted candidates only.
struct MarginPolicy {
  double gain_db = 0.0;
  double nf_db = 0.0;
  double p1db_db = 0.0;

  double operator[](Param p) const;
  void validate() const;  // margins must be >= 0
  bool operator==(const MarginPolicy&) const = default;
};

/// Margin equal to the worst held-out RMS of each constrained parameter.
MarginPolicy margin_from_rms(const RmsReport& rms);

enum class Source { Measured, Predicted };
std::string_view to_string(Source s);

struct Candidate {
  SwitchCombo combo;
  PerformanceVector perf;
  Source source = Source::Measured;
};

struct Violation {
  Param param = Param::Gain;
  bool upper = false;   // true: value above the upper bound
  double limit = 0.0;   // effective (margin-tightened) bound
  double value = 0.0;

  std::string text() const;  // e.g. "gain>17"
};

struct Verdict {
  bool feasible = true;
  std::vector<Violation> violations;
};

Verdict feasible(const PerformanceVector& perf, const TargetSpec& target, const MarginPolicy& margin, Source source);

struct CandidateVerdict {
  Candidate candidate;
  Verdict verdict;
};

struct CalibrationReport {
  std::optional<ComboIndex> chosen;
  std::vector<CandidateVerdict> candidates;  // ascending combo index
  int measurements = 0;
  std::string protocol;
  bool escalated = false;
  TargetSpec target;
  MarginPolicy margin;

  const CandidateVerdict* find(ComboIndex combo) const;
};

/// Minimum idc_ma among feasible candidates, ties to the lower combo index.
/// Throws DomainError for an empty set and ContractError for repeated combos.
CalibrationReport select(std::span<const Candidate> candidates, const TargetSpec& target,
                         const MarginPolicy& margin = {});

/// Exhaustive search over true performances of all 12 combinations.
std::optional<ComboIndex> brute_force_select(const ComboPerformance& truth, const TargetSpec& target);

/// A physical part that can be measured at one combination at a time.
class Device {
 public:
  virtual ~Device() = default;
  virtual PerformanceVector measure(ComboIndex combo) = 0;
};

/// A behavioral-model device; noisy measurements draw from its own stream.
class SimulatedDevice : public Device {
 public:
  SimulatedDevice(const DeviceModel& model, ProcessSample sample, RngStream rng, bool noisy = true)
      : model_(model), sample_(std::move(sample)), rng_(rng), noisy_(noisy) {}

  PerformanceVector measure(ComboIndex combo) override;
  PerformanceVector truth(ComboIndex combo) const { return evaluate_true(model_, sample_, combo); }
  ComboPerformance all_truth() const;

 private:
  const DeviceModel& model_;
  ProcessSample sample_;
  RngStream rng_;
  bool noisy_;
};

/// Replays previously recorded measurements; asking for anything else is a contract error.
class RecordedDevice : public Device {
 public:
  explicit RecordedDevice(ComboPerformance values) : values_(std::move(values)) {}
  PerformanceVector measure(ComboIndex combo) override;

 private:
  ComboPerformance values_;
};

/// Predicts target-set performances from measurements at the known set.
class ComboPredictor {
 public:
  virtual ~ComboPredictor() = default;
  virtual std::vector<ComboIndex> known_set() const = 0;
  virtual std::vector<ComboIndex> target_set() const = 0;
  virtual ComboPerformance predict(const ComboPerformance& known) const = 0;
};

class ModelPredictor : public ComboPredictor {
 public:
  explicit ModelPredictor(const PredictorModel& model) : model_(model) {}
  std::vector<ComboIndex> known_set() const override { return model_.spec.known_set; }
  std::vector<ComboIndex> target_set() const override { return model_.spec.target_set; }
  ComboPerformance predict(const ComboPerformance& known) const override { return lnatune::predict(model_, known); }

 private:
  const PredictorModel& model_;
};

/// Returns the same predictions whatever is measured (recorded fixtures).
class FixedPredictor : public ComboPredictor {
 public:
  FixedPredictor(std::vector<ComboIndex> known, ComboPerformance predictions)
      : known_(std::move(known)), predictions_(std::move(predictions)) {}
  std::vector<ComboIndex> known_set() const override { return known_; }
  std::vector<ComboIndex> target_set() const override;
  ComboPerformance predict(const ComboPerformance& known) const override;

 private:
  std::vector<ComboIndex> known_;
  ComboPerformance predictions_;
};

struct Protocol {
  std::vector<ComboIndex> known_set;
};

struct CalibrateOptions {
  // Measure the chosen combo when it was only predicted, and re-select until
  // the choice is a measured one (or nothing is feasible).
  bool verify_choice = false;
};

/// Measures the protocol's known combos, predicts the rest, selects.
/// Throws ContractError when the predictor's known set differs from the protocol's.
CalibrationReport calibrate(Device& device, const ComboPredictor& predictor, const TargetSpec& target,
                            const Protocol& protocol, const MarginPolicy& margin = {},
                            const CalibrateOptions& options = {});

/// Runs the one-known protocol and, when the two cheapest feasible candidates'
/// currents differ by less than `idc_rms`, re-runs with the two-known
/// predictor. Measurements already taken are reused.
CalibrationReport calibrate_escalating(Device& device, const ComboPredictor& one_known,
                                       const ComboPredictor& two_known, const TargetSpec& target,
                                       double idc_rms, const MarginPolicy& margin = {});

std::string report_to_text(const CalibrationReport& report);
/// "combo,source,feasible,violations,gain_db,nf_db,p1db_dbm,idc_ma,chosen"
std::string report_to_csv(const CalibrationReport& report);

/// Candidate file: "combo_id,source,gain_db,nf_db,p1db_dbm,idc_ma", source in
/// {measured, predicted}. Lines starting with '#' are comments.
struct CandidateFile {
  ComboPerformance measured;
  ComboPerformance predicted;
};
CandidateFile read_candidates(const std::filesystem::path& path);
CandidateFile candidates_from_text(const std::string& text);

}  // namespace lnatune
