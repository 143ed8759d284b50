#include "crowd_al/records.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "crowd_al/error.hpp"

namespace crowd_al {

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

template <typename T, typename Fmt>
std::string or_empty(const std::optional<T>& v, Fmt fmt, const char* missing) {
  return v ? fmt(*v) : std::string(missing);
}

std::string write_csv_row(const RoundRecord& r) {
  auto count = [](std::size_t v) { return std::to_string(v); };
  auto flag = [](bool v) { return std::string(v ? "1" : "0"); };
  std::string line = std::to_string(r.rep) + ',' + std::to_string(r.round) + ',';
  line += or_empty(r.instance, count, "") + ',';
  line += or_empty(r.annotator, count, "") + ',';
  line += or_empty(r.label, real, "") + ',';
  line += or_empty(r.accepted, flag, "") + ',';
  line += real(r.rmse) + ',' + real(r.regret) + ',' + std::to_string(r.discarded) + ',' +
          real(r.payment);
  return line;
}

std::string write_json_row(const RoundRecord& r) {
  auto count = [](std::size_t v) { return std::to_string(v); };
  auto flag = [](bool v) { return std::string(v ? "true" : "false"); };
  std::string line = "{\"rep\":" + std::to_string(r.rep);
  line += ",\"round\":" + std::to_string(r.round);
  line += ",\"instance\":" + or_empty(r.instance, count, "null");
  line += ",\"annotator\":" + or_empty(r.annotator, count, "null");
  line += ",\"label\":" + or_empty(r.label, real, "null");
  line += ",\"accepted\":" + or_empty(r.accepted, flag, "null");
  line += ",\"rmse\":" + real(r.rmse);
  line += ",\"regret\":" + real(r.regret);
  line += ",\"discarded\":" + std::to_string(r.discarded);
  line += ",\"payment\":" + real(r.payment) + "}";
  return line;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

RoundRecord parse_csv_row(const std::string& line, std::size_t line_no) {
  const auto cells = split_csv(line);
  if (cells.size() != 10) {
    throw FormatError("records line " + std::to_string(line_no) + ": expected 10 fields");
  }
  try {
    RoundRecord r;
    r.rep = std::stoull(cells[0]);
    r.round = std::stoull(cells[1]);
    if (!cells[2].empty()) r.instance = std::stoull(cells[2]);
    if (!cells[3].empty()) r.annotator = std::stoull(cells[3]);
    if (!cells[4].empty()) r.label = std::stod(cells[4]);
    if (!cells[5].empty()) r.accepted = cells[5] == "1";
    r.rmse = std::stod(cells[6]);
    r.regret = std::stod(cells[7]);
    r.discarded = std::stoull(cells[8]);
    r.payment = std::stod(cells[9]);
    return r;
  } catch (const std::logic_error&) {
    throw FormatError("records line " + std::to_string(line_no) + ": malformed field");
  }
}

RoundRecord parse_json_row(const std::string& line, std::size_t line_no) {
  try {
    const auto j = nlohmann::json::parse(line);
    RoundRecord r;
    r.rep = j.at("rep").get<std::size_t>();
    r.round = j.at("round").get<std::size_t>();
    if (!j.at("instance").is_null()) r.instance = j["instance"].get<std::size_t>();
    if (!j.at("annotator").is_null()) r.annotator = j["annotator"].get<std::size_t>();
    if (!j.at("label").is_null()) r.label = j["label"].get<double>();
    if (!j.at("accepted").is_null()) r.accepted = j["accepted"].get<bool>();
    r.rmse = j.at("rmse").get<double>();
    r.regret = j.at("regret").get<double>();
    r.discarded = j.at("discarded").get<std::size_t>();
    r.payment = j.at("payment").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("records line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

RecordFormat parse_record_format(std::string_view name) {
  if (name == "csv") return RecordFormat::csv;
  if (name == "jsonl" || name == "json-lines") return RecordFormat::jsonl;
  throw InvalidInput("unknown record format '" + std::string(name) + "'");
}

void write_records(std::span<const RoundRecord> records, std::ostream& out, RecordFormat format) {
  if (format == RecordFormat::csv) out << kRecordHeader << '\n';
  for (const auto& r : records) {
    out << (format == RecordFormat::csv ? write_csv_row(r) : write_json_row(r)) << '\n';
  }
}

void emit_records(std::span<const RoundRecord> records, const std::filesystem::path& path,
                  RecordFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_records(records, out, format);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<RoundRecord> read_records(std::istream& in, RecordFormat format) {
  std::vector<RoundRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (format == RecordFormat::csv) {
      if (line_no == 1 && line == kRecordHeader) continue;
      out.push_back(parse_csv_row(line, line_no));
    } else {
      out.push_back(parse_json_row(line, line_no));
    }
  }
  return out;
}

}  // namespace crowd_al
