#include "lnatune/dut_model.hpp"
#include "lnatune/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace lnatune {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "lnatune-model";
constexpr int kVersion = 1;

Json matrix_to_json(const Matrix4<double>& m) {
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
  return rows;
}

Matrix4<double> matrix_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("sensitivity matrix must have 4 rows");
  Matrix4<double> m;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4) throw ParseError("sensitivity matrix rows must have 4 entries");
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Json perf_to_json(const PerformanceVector& p) {
  Json j;
  for (Param q : kAllParams) j[std::string(column_name(q))] = p[q];
  if (p.s11_db) j["s11_db"] = *p.s11_db;
  if (p.s22_db) j["s22_db"] = *p.s22_db;
  return j;
}

PerformanceVector perf_from_json(const Json& j) {
  PerformanceVector p;
  for (Param q : kAllParams) p[q] = j.at(std::string(column_name(q))).get<double>();
  if (j.contains("s11_db")) p.s11_db = j["s11_db"].get<double>();
  if (j.contains("s22_db")) p.s22_db = j["s22_db"].get<double>();
  return p;
}

SupplyLevel level_from_json(const Json& j, const char* field) {
  auto level = supply_level_from_scale(j.get<double>());
  if (!level) throw ParseError(std::string(field) + " must be one of 0.95, 1.0, 1.05");
  return *level;
}

}  // namespace

std::string model_to_json_text(const DeviceModel& model) {
  Json root;
  root["format"] = kFormat;
  root["version"] = kVersion;
  root["supply_v"] = model.supply_v;
  Json noise;
  for (Param q : kAllParams) noise[std::string(column_name(q))] = model.noise_sigma[index_of(q)];
  root["noise_sigma"] = noise;

  Json sens;
  sens["base"] = matrix_to_json(model.sensitivity_base);
  if (model.explicit_sensitivity) {
    Json all = Json::array();
    for (const auto& m : model.sensitivity) all.push_back(matrix_to_json(m));
    sens["explicit"] = all;
  } else {
    sens["scale_rule"] = {{"min", model.scale_min}, {"max", model.scale_max}};
  }
  root["sensitivity"] = sens;

  Json combos = Json::array();
  for (int c = 0; c < kNumCombos; ++c) {
    const auto& combo = model.combos[c];
    Json jc;
    jc["index"] = c;
    if (combo.knobs) {
      jc["sw"] = combo.knobs->sw;
      jc["vdd1_scale"] = supply_scale(combo.knobs->vdd1);
      jc["vdd2_scale"] = supply_scale(combo.knobs->vdd2);
    }
    jc["anchored"] = combo.anchored;
    jc["nominal"] = perf_to_json(model.nominal[c]);
    combos.push_back(jc);
  }
  root["combos"] = combos;
  return root.dump(2) + "\n";
}

DeviceModel model_from_json_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("model config is not valid JSON: ") + e.what());
  }
  try {
    if (root.value("format", "") != kFormat) throw ParseError("model config: missing or wrong \"format\"");
    if (root.value("version", 0) != kVersion) throw ParseError("model config: unsupported version");

    DeviceModel m;
    m.supply_v = root.at("supply_v").get<double>();
    if (!(m.supply_v > 0.0)) throw ParseError("model config: supply_v must be positive");
    const auto& noise = root.at("noise_sigma");
    for (Param q : kAllParams) {
      m.noise_sigma[index_of(q)] = noise.at(std::string(column_name(q))).get<double>();
      if (!(m.noise_sigma[index_of(q)] >= 0.0)) throw ParseError("model config: noise_sigma must be non-negative");
    }

    const auto& combos = root.at("combos");
    if (!combos.is_array() || combos.size() != kNumCombos)
      throw ParseError("model config: exactly 12 combos required");
    std::array<bool, kNumCombos> seen{};
    for (const auto& jc : combos) {
      const int c = jc.at("index").get<int>();
      if (!valid_combo(c) || seen[c]) throw ParseError("model config: bad or duplicate combo index");
      seen[c] = true;
      SwitchCombo combo;
      combo.index = c;
      combo.anchored = jc.value("anchored", false);
      if (jc.contains("sw")) {
        KnobState k;
        k.sw = jc["sw"].get<std::array<bool, 5>>();
        k.vdd1 = level_from_json(jc.at("vdd1_scale"), "vdd1_scale");
        k.vdd2 = level_from_json(jc.at("vdd2_scale"), "vdd2_scale");
        combo.knobs = k;
      }
      m.combos[c] = combo;
      m.nominal[c] = perf_from_json(jc.at("nominal"));
      if (!m.nominal[c].is_physical())
        throw ParseError("model config: combo " + std::to_string(c) + " nominal is not physical");
    }
    if (m.combos[0].knobs && !(*m.combos[0].knobs == KnobState{}))
      throw ParseError("model config: combo 0 must be all switches off at nominal supply");

    const auto& sens = root.at("sensitivity");
    m.sensitivity_base = matrix_from_json(sens.at("base"));
    if (sens.contains("explicit")) {
      const auto& all = sens["explicit"];
      if (!all.is_array() || all.size() != kNumCombos) throw ParseError("model config: 12 explicit matrices required");
      std::array<Matrix4<double>, kNumCombos> mats;
      for (int c = 0; c < kNumCombos; ++c) mats[c] = matrix_from_json(all[c]);
      m.set_explicit_sensitivity(mats);
    } else {
      const auto& rule = sens.at("scale_rule");
      m.scale_min = rule.at("min").get<double>();
      m.scale_max = rule.at("max").get<double>();
      m.apply_scale_rule();
    }
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
}

DeviceModel load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open model config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

void save_model_config(const DeviceModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write model config " + path.string());
  out << model_to_json_text(model);
}

}  // namespace lnatune
