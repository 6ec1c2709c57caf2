#include "lnatune/calibrator.hpp"

#include "lnatune/dataset.hpp"
#include "lnatune/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace lnatune {

std::string_view to_string(Source s) { return s == Source::Measured ? "measured" : "predicted"; }

std::string Violation::text() const {
  return std::string(short_name(param)) + (upper ? ">" : "<") + format_double(limit);
}

Verdict feasible(const PerformanceVector& perf, const TargetSpec& target, const MarginPolicy& margin, Source source) {
  Verdict verdict;
  for (Param p : kConstrainedParams) {
    const auto& c = target[p];
    const double m = source == Source::Predicted ? margin[p] : 0.0;
    const double v = perf[p];
    if (c.has_lower() && !(v >= c.lo + m)) verdict.violations.push_back({p, false, c.lo + m, v});
    if (c.has_upper() && !(v <= c.hi - m)) verdict.violations.push_back({p, true, c.hi - m, v});
  }
  verdict.feasible = verdict.violations.empty();
  return verdict;
}

const CandidateVerdict* CalibrationReport::find(ComboIndex combo) const {
  for (const auto& cv : candidates)
    if (cv.candidate.combo.index == combo) return &cv;
  return nullptr;
}

CalibrationReport select(std::span<const Candidate> candidates, const TargetSpec& target, const MarginPolicy& margin) {
  if (candidates.empty()) throw DomainError("no candidates to select from");
  margin.validate();
  std::set<ComboIndex> seen;
  for (const auto& c : candidates)
    if (!seen.insert(c.combo.index).second)
      throw ContractError("combo " + std::to_string(c.combo.index) + " appears twice in the candidate set");

  CalibrationReport report;
  report.target = target;
  report.margin = margin;
  for (const auto& c : candidates) {
    report.candidates.push_back({c, feasible(c.perf, target, margin, c.source)});
    if (c.source == Source::Measured) ++report.measurements;
  }
  std::sort(report.candidates.begin(), report.candidates.end(),
            [](const auto& a, const auto& b) { return a.candidate.combo.index < b.candidate.combo.index; });

  const CandidateVerdict* best = nullptr;
  for (const auto& cv : report.candidates) {
    if (!cv.verdict.feasible) continue;
    // Strict comparison keeps the lower index on ties; candidates are ascending.
    if (!best || cv.candidate.perf.idc_ma() < best->candidate.perf.idc_ma()) best = &cv;
  }
  if (best) report.chosen = best->candidate.combo.index;
  return report;
}

std::optional<ComboIndex> brute_force_select(const ComboPerformance& truth, const TargetSpec& target) {
  std::optional<ComboIndex> best;
  double best_idc = 0.0;
  for (ComboIndex c = 0; c < kNumCombos; ++c) {
    auto it = truth.find(c);
    if (it == truth.end()) throw ContractError("brute force selection needs all 12 combos; missing " + std::to_string(c));
    if (!feasible(it->second, target, {}, Source::Measured).feasible) continue;
    if (!best || it->second.idc_ma() < best_idc) {
      best = c;
      best_idc = it->second.idc_ma();
    }
  }
  return best;
}

PerformanceVector SimulatedDevice::measure(ComboIndex combo) {
  return noisy_ ? lnatune::measure(model_, sample_, combo, rng_) : evaluate_true(model_, sample_, combo);
}

ComboPerformance SimulatedDevice::all_truth() const {
  ComboPerformance out;
  for (ComboIndex c = 0; c < kNumCombos; ++c) out[c] = truth(c);
  return out;
}

PerformanceVector RecordedDevice::measure(ComboIndex combo) {
  auto it = values_.find(combo);
  if (it == values_.end()) throw ContractError("no recorded measurement for combo " + std::to_string(combo));
  return it->second;
}

std::vector<ComboIndex> FixedPredictor::target_set() const {
  std::vector<ComboIndex> out;
  for (const auto& [c, perf] : predictions_) out.push_back(c);
  return out;
}

ComboPerformance FixedPredictor::predict(const ComboPerformance& known) const {
  for (auto c : known_)
    if (!known.contains(c)) throw ContractError("missing measurement for known combo " + std::to_string(c));
  return predictions_;
}

namespace {

std::string describe_protocol(std::span<const ComboIndex> known, std::span<const ComboIndex> targets) {
  std::ostringstream os;
  os << "known {";
  for (std::size_t i = 0; i < known.size(); ++i) os << (i ? "," : "") << known[i];
  os << "} predict {";
  for (std::size_t i = 0; i < targets.size(); ++i) os << (i ? "," : "") << targets[i];
  os << "}";
  return os.str();
}

// Remembers measurements so repeated requests for the same combo are free.
class MeasurementLog {
 public:
  explicit MeasurementLog(Device& device) : device_(device) {}

  const PerformanceVector& get(ComboIndex combo) {
    auto it = taken_.find(combo);
    if (it == taken_.end()) it = taken_.emplace(combo, device_.measure(combo)).first;
    return it->second;
  }
  int count() const { return static_cast<int>(taken_.size()); }
  bool has(ComboIndex combo) const { return taken_.contains(combo); }

 private:
  Device& device_;
  ComboPerformance taken_;
};

CalibrationReport run_protocol(MeasurementLog& log, const ComboPredictor& predictor, const TargetSpec& target,
                               const MarginPolicy& margin, bool verify) {
  const auto known = predictor.known_set();
  const auto targets = predictor.target_set();

  ComboPerformance measured;
  for (auto c : known) measured[c] = log.get(c);
  const auto predicted = predictor.predict(measured);

  std::vector<Candidate> candidates;
  for (const auto& [c, perf] : measured) candidates.push_back({decode_combo(c), perf, Source::Measured});
  for (auto c : targets) {
    if (measured.contains(c)) throw ContractError("combo " + std::to_string(c) + " is both known and predicted");
    auto it = predicted.find(c);
    if (it == predicted.end()) throw ContractError("predictor returned no value for combo " + std::to_string(c));
    candidates.push_back({decode_combo(c), it->second, Source::Predicted});
  }

  CalibrationReport report = select(candidates, target, margin);
  while (verify && report.chosen) {
    auto& chosen = *std::find_if(candidates.begin(), candidates.end(),
                                 [&](const Candidate& c) { return c.combo.index == *report.chosen; });
    if (chosen.source == Source::Measured) break;
    chosen.perf = log.get(chosen.combo.index);
    chosen.source = Source::Measured;
    report = select(candidates, target, margin);
  }
  report.measurements = log.count();
  report.protocol = describe_protocol(known, targets);
  return report;
}

void check_protocol(const ComboPredictor& predictor, const Protocol& protocol) {
  auto a = predictor.known_set(), b = protocol.known_set;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw ContractError("predictor known set does not match the calibration protocol");
}

}  // namespace

CalibrationReport calibrate(Device& device, const ComboPredictor& predictor, const TargetSpec& target,
                            const Protocol& protocol, const MarginPolicy& margin, const CalibrateOptions& options) {
  check_protocol(predictor, protocol);
  target.validate();
  MeasurementLog log(device);
  return run_protocol(log, predictor, target, margin, options.verify_choice);
}

CalibrationReport calibrate_escalating(Device& device, const ComboPredictor& one_known,
                                       const ComboPredictor& two_known, const TargetSpec& target, double idc_rms,
                                       const MarginPolicy& margin) {
  target.validate();
  MeasurementLog log(device);
  CalibrationReport first = run_protocol(log, one_known, target, margin, false);

  std::vector<double> feasible_idc;
  for (const auto& cv : first.candidates)
    if (cv.verdict.feasible) feasible_idc.push_back(cv.candidate.perf.idc_ma());
  std::sort(feasible_idc.begin(), feasible_idc.end());
  if (feasible_idc.size() < 2 || feasible_idc[1] - feasible_idc[0] >= idc_rms) return first;

  CalibrationReport second = run_protocol(log, two_known, target, margin, false);
  second.escalated = true;
  return second;
}

std::string report_to_text(const CalibrationReport& report) {
  std::ostringstream os;
  os << "target: " << format_target_spec(report.target) << "\n";
  os << "margin: gain " << report.margin.gain_db << " dB, nf " << report.margin.nf_db << " dB, p1db "
     << report.margin.p1db_db << " dB (predicted candidates only)\n";
  if (!report.protocol.empty()) os << "protocol: " << report.protocol << (report.escalated ? " (escalated)" : "") << "\n";
  os << "measurements: " << report.measurements << "\n\n";
  os << "combo  knobs              source     gain_db  nf_db  p1db_dbm  idc_ma  verdict\n";
  for (const auto& cv : report.candidates) {
    const auto& c = cv.candidate;
    const std::string knobs = c.combo.knobs ? knob_label(*c.combo.knobs) : "?";
    os << std::setw(5) << c.combo.index << "  " << std::left << std::setw(17) << knobs << "  " << std::setw(9)
       << to_string(c.source) << std::right << std::fixed << std::setprecision(2) << std::setw(9) << c.perf.gain_db()
       << std::setw(7) << c.perf.nf_db() << std::setw(10) << c.perf.p1db_dbm() << std::setw(8) << c.perf.idc_ma()
       << "  ";
    os.unsetf(std::ios::floatfield);
    if (cv.verdict.feasible) {
      os << "feasible";
    } else {
      os << "violates";
      for (const auto& v : cv.verdict.violations) os << ' ' << v.text();
    }
    if (c.perf.s11_db) os << "  s11 " << *c.perf.s11_db;
    if (c.perf.s22_db) os << "  s22 " << *c.perf.s22_db;
    if (report.chosen == c.combo.index) os << "  <== chosen";
    os << "\n";
  }
  os << "\nchosen: ";
  if (report.chosen)
    os << "combo " << *report.chosen << "\n";
  else
    os << "none (no candidate meets the target)\n";
  return os.str();
}

std::string report_to_csv(const CalibrationReport& report) {
  std::ostringstream os;
  os << "combo,source,feasible,violations,gain_db,nf_db,p1db_dbm,idc_ma,chosen\n";
  for (const auto& cv : report.candidates) {
    const auto& c = cv.candidate;
    std::string violations;
    for (const auto& v : cv.verdict.violations) violations += (violations.empty() ? "" : ";") + v.text();
    os << c.combo.index << ',' << to_string(c.source) << ',' << (cv.verdict.feasible ? 1 : 0) << ',' << violations;
    for (Param p : kAllParams) os << ',' << format_double(c.perf[p]);
    os << ',' << (report.chosen == c.combo.index ? 1 : 0) << '\n';
  }
  return os.str();
}

CandidateFile candidates_from_text(const std::string& text) {
  CandidateFile file;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "combo_id,source,gain_db,nf_db,p1db_dbm,idc_ma")
        throw ParseError("expected header 'combo_id,source,gain_db,nf_db,p1db_dbm,idc_ma'", line_no);
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (fields.size() != 6) throw ParseError("expected 6 fields", line_no);
    auto number = [&](const std::string& f) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw ParseError("bad number '" + f + "'", line_no);
      return v;
    };
    const double combo_value = number(fields[0]);
    const int combo = static_cast<int>(combo_value);
    if (combo_value != combo || !valid_combo(combo)) throw ParseError("bad combo id '" + fields[0] + "'", line_no);
    PerformanceVector perf(number(fields[2]), number(fields[3]), number(fields[4]), number(fields[5]));
    ComboPerformance* dest = nullptr;
    if (fields[1] == "measured")
      dest = &file.measured;
    else if (fields[1] == "predicted")
      dest = &file.predicted;
    else
      throw ParseError("source must be 'measured' or 'predicted'", line_no);
    if (file.measured.contains(combo) || file.predicted.contains(combo))
      throw ParseError("combo " + std::to_string(combo) + " listed twice", line_no);
    (*dest)[combo] = perf;
  }
  if (!header) throw ParseError("missing header line");
  return file;
}

CandidateFile read_candidates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return candidates_from_text(ss.str());
}

}  // namespace lnatune
