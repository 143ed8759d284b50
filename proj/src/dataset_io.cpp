#include "crowd_al/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

#include "crowd_al/error.hpp"

namespace crowd_al {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

}  // namespace

RawDataset parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::size_t width = 0;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (first) {
      width = cells.size();
      if (width < 2) {
        throw FormatError("row " + std::to_string(line_no) + ": need at least 2 columns");
      }
      // Header only when no cell is numeric; a mixed row is data with a bad cell.
      double probe = 0.0;
      bool any_numeric = false;
      for (auto c : cells) any_numeric = any_numeric || parse_double(c, probe);
      first = false;
      if (!any_numeric) {
        for (auto c : cells) header.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      throw FormatError("row " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (!parse_double(cells[c], row[c])) {
        throw FormatError("row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                          ": cannot parse '" + std::string(cells[c]) + "' as a number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (first) throw FormatError("CSV input is empty");

  RawDataset out;
  out.header = std::move(header);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width - 1);
  out.features.resize(n, d);
  out.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < d; ++c) out.features(i, c) = r[static_cast<std::size_t>(c)];
    out.targets[i] = r.back();
  }
  return out;
}

RawDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

RawDataset make_synthetic_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw InvalidInput("make_synthetic_dataset: n and d must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto dd = static_cast<Eigen::Index>(d);
  Vector a(dd), b(dd);
  for (Eigen::Index c = 0; c < dd; ++c) {
    a[c] = normal(rng) / std::sqrt(static_cast<double>(d));
    b[c] = normal(rng);
  }
  RawDataset out;
  out.features.resize(static_cast<Eigen::Index>(n), dd);
  out.targets.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index c = 0; c < dd; ++c) out.features(i, c) = normal(rng);
    const Vector x = out.features.row(i).transpose();
    out.targets[i] = 20.0 + 5.0 * std::tanh(a.dot(x)) + b.dot(x) + normal(rng);
  }
  return out;
}

}  // namespace crowd_al
