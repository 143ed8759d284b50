#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace crowd_al {

enum class RecordFormat { csv, jsonl };

RecordFormat parse_record_format(std::string_view name);

/// One row of an experiment trace. Round 0 is the post-seed-pool baseline
/// and carries no instance, annotator, label or accepted flag.
struct RoundRecord {
  std::size_t rep = 0;
  std::size_t round = 0;
  std::optional<std::size_t> instance;
  std::optional<std::size_t> annotator;
  std::optional<double> label;
  std::optional<bool> accepted;
  double rmse = 0.0;
  double regret = 0.0;
  std::size_t discarded = 0;
  double payment = 0.0;

  bool operator==(const RoundRecord&) const = default;
};

inline constexpr std::string_view kRecordHeader =
    "rep,round,instance,annotator,label,accepted,rmse,regret,discarded,payment";

/// Reals are written with 9 significant digits.
void write_records(std::span<const RoundRecord> records, std::ostream& out, RecordFormat format);
/// Throws IoError naming the path when the file cannot be written.
void emit_records(std::span<const RoundRecord> records, const std::filesystem::path& path,
                  RecordFormat format);

std::vector<RoundRecord> read_records(std::istream& in, RecordFormat format);

}  // namespace crowd_al
