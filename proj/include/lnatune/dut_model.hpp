#pragma once

#include "lnatune/random.hpp"
#include "lnatune/types.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lnatune {

/// Discrete supply level of a regulated rail.
enum class SupplyLevel { Low, Nominal, High };

double supply_scale(SupplyLevel level);  // 0.95, 1.00, 1.05
/// Exact match against the three declared scales; nullopt otherwise.
std::optional<SupplyLevel> supply_level_from_scale(double scale);

struct KnobState {
  std::array<bool, 5> sw{};  // sw[0] is SW1
  SupplyLevel vdd1 = SupplyLevel::Nominal;
  SupplyLevel vdd2 = SupplyLevel::Nominal;

  bool operator==(const KnobState&) const = default;
};

/// Human label in the style "SW1+SW3+SW4", "1.05*VDD1+SW2", "off".
std::string knob_label(const KnobState& knobs);

struct SwitchCombo {
  ComboIndex index = 0;
  std::optional<KnobState> knobs;
  // True when the knob decoding is a published setting, false for placeholders.
  bool anchored = false;
};

/// Latent process factors of one device (standard scores).
struct ProcessSample {
  Vector4<double> z = Vector4<double>::Zero();
  std::optional<std::string> board_id;
};

/// Behavioral model: nominal + sensitivity[combo] * z, with additive measurement noise.
struct DeviceModel {
  std::array<SwitchCombo, kNumCombos> combos;
  std::array<PerformanceVector, kNumCombos> nominal;
  std::array<Matrix4<double>, kNumCombos> sensitivity;
  Vector4<double> noise_sigma = Vector4<double>::Zero();
  double supply_v = 1.2;

  // Source form of `sensitivity`, kept so configuration files round-trip.
  // With explicit_sensitivity == false, sensitivity[c] = base * scale(c) where
  // scale(c) = scale_min + (scale_max - scale_min) * c / 11.
  Matrix4<double> sensitivity_base = Matrix4<double>::Zero();
  double scale_min = 0.8;
  double scale_max = 1.2;
  bool explicit_sensitivity = false;

  /// Recompute `sensitivity` from the base matrix and the linear scale rule.
  void apply_scale_rule();
  /// Replace every per-combo matrix and switch the file form to explicit matrices.
  void set_explicit_sensitivity(const std::array<Matrix4<double>, kNumCombos>& matrices);
};

/// Knob decoding of the shipped 12-entry combination table.
/// Throws DomainError for indices outside [0, 11].
SwitchCombo decode_combo(ComboIndex index);

/// The shipped model configuration.
DeviceModel default_model();

/// Noise-free performance. Throws DomainError for non-finite z or an unknown combo.
PerformanceVector evaluate_true(const DeviceModel& model, const ProcessSample& sample, ComboIndex combo);

/// evaluate_true plus independent Gaussian noise with per-parameter noise_sigma.
PerformanceVector measure(const DeviceModel& model, const ProcessSample& sample, ComboIndex combo,
                          RngStream& rng);

/// Expected tuning ranges across the 12 nominal entries.
struct TuningRange {
  double gain_db = 12.0;
  double nf_db = 1.5;
  double p1db_db = 10.0;
  double power_mw = 18.0;
  double rel_tol = 0.15;
};

struct SpanCheck {
  std::string quantity;  // "gain", "nf", "p1db", "power"
  double observed = 0.0;
  double expected = 0.0;
  double rel_tol = 0.0;
  bool pass = false;
};

struct MonotonicityCheck {
  ComboIndex base = 0;     // knob off
  ComboIndex toggled = 0;  // knob on
  std::string knob;
  std::vector<std::string> failures;
  bool pass() const { return failures.empty(); }
};

struct ValidationReport {
  std::vector<SpanCheck> spans;
  std::vector<MonotonicityCheck> monotonicity;
  std::vector<ComboIndex> excluded_unanchored;

  bool spans_pass() const;
  bool monotonicity_pass() const;
  bool pass() const { return spans_pass() && monotonicity_pass(); }
};

/// Checks the nominal table against the expected tuning ranges and the knob
/// effect directions. Only anchored combinations take part in the direction
/// checks; a pair qualifies when it differs in exactly one knob, where SW4 and
/// SW5 count as one knob (both widen the output stage).
ValidationReport validate_table(const DeviceModel& model, const TuningRange& expected = {});

std::string format_report(const ValidationReport& report);

/// JSON model configuration. Schema is documented in docs/model_config.md.
DeviceModel load_model_config(const std::filesystem::path& path);
void save_model_config(const DeviceModel& model, const std::filesystem::path& path);
DeviceModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const DeviceModel& model);

}  // namespace lnatune
