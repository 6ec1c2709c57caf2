#include "lnatune/dataset.hpp"
#include "lnatune/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace lnatune {

namespace {

constexpr std::string_view kSampleHeader = "sample_id,combo_id,gain_db,nf_db,p1db_dbm,idc_ma";
constexpr std::string_view kBoardHeader = "board_id,combo_id,gain_db,nf_db,p1db_dbm,idc_ma";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::string_view what, std::size_t line) {
  field = trim(field);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("bad " + std::string(what) + " '" + std::string(field) + "'", line);
  return value;
}

}  // namespace

std::string to_csv_text(const Dataset& data) {
  std::ostringstream os;
  os << "# provenance=" << to_string(data.provenance) << "\n";
  if (data.seed) os << "# seed=" << *data.seed << "\n";
  os << (data.provenance == Provenance::Measured ? kBoardHeader : kSampleHeader) << "\n";
  std::vector<const SampleRecord*> rows;
  for (const auto& s : data.samples) rows.push_back(&s);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });
  for (const auto* s : rows)
    for (int c = 0; c < kNumCombos; ++c) {
      os << s->sample_id << ',' << c;
      for (int p = 0; p < kNumParams; ++p) os << ',' << format_double(s->perf[c].values[p]);
      os << '\n';
    }
  return os.str();
}

Dataset from_csv_text(const std::string& text) {
  Dataset data;
  data.seed.reset();
  std::optional<Provenance> provenance;
  bool have_header = false;

  struct Pending {
    std::size_t first_line = 0;
    std::array<std::optional<PerformanceVector>, kNumCombos> perf;
  };
  std::map<int, Pending> pending;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      auto key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
      if (key == "provenance") {
        provenance = provenance_from_string(value);
        if (!provenance) throw ParseError("unknown provenance '" + std::string(value) + "'", line_no);
      } else if (key == "seed") {
        data.seed = parse_number<std::uint64_t>(value, "seed", line_no);
      }
      continue;
    }
    if (!have_header) {
      if (line == kBoardHeader) {
        if (!provenance) provenance = Provenance::Measured;
      } else if (line != kSampleHeader) {
        throw ParseError("expected header '" + std::string(kSampleHeader) + "'", line_no);
      }
      have_header = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != 6)
      throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), line_no);
    const int id = parse_number<int>(fields[0], "sample id", line_no);
    const int combo = parse_number<int>(fields[1], "combo id", line_no);
    if (id < 0) throw ParseError("negative sample id", line_no);
    if (!valid_combo(combo)) throw ParseError("combo id " + std::to_string(combo) + " out of range", line_no);
    Vector4<double> v;
    for (int p = 0; p < kNumParams; ++p)
      v[p] = parse_number<double>(fields[2 + p], column_name(kAllParams[p]), line_no);
    if (!v.allFinite()) throw ParseError("non-finite value", line_no);

    auto& slot = pending[id];
    if (slot.first_line == 0) slot.first_line = line_no;
    if (slot.perf[combo])
      throw ParseError("duplicate row for sample " + std::to_string(id) + " combo " + std::to_string(combo), line_no);
    slot.perf[combo] = PerformanceVector(v);
  }
  if (!have_header) throw ParseError("missing header line");

  data.provenance = provenance.value_or(Provenance::Simulated);
  for (auto& [id, slot] : pending) {
    SampleRecord rec;
    rec.sample_id = id;
    for (int c = 0; c < kNumCombos; ++c) {
      if (!slot.perf[c])
        throw ParseError("sample " + std::to_string(id) + " is missing combo " + std::to_string(c), slot.first_line);
      rec.perf[c] = *slot.perf[c];
    }
    data.samples.push_back(std::move(rec));
  }
  return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  out << to_csv_text(data);
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_csv_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace lnatune
