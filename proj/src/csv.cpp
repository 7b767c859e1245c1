#include "pgd/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pgd/error.hpp"

namespace pgd {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  const std::string t = trim(s);
  double value = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty()) {
    throw Error(Errc::invalid_config, "not a number: '" + t + "'");
  }
  return value;
}

long long parse_int(std::string_view s) {
  const std::string t = trim(s);
  long long value = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty()) {
    throw Error(Errc::invalid_config, "not an integer: '" + t + "'");
  }
  return value;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string trajectory_csv(const std::vector<TrialRecord>& rows) {
  std::string out(kTrajectoryHeader);
  out += '\n';
  for (const auto& row : rows) {
    const auto& r = row.record;
    out += std::to_string(row.trial) + ',' + std::to_string(r.epoch) + ',' +
           std::to_string(r.iter) + ',' + format_double(r.inner_aa) + ',' + format_double(r.phi) +
           ',' + format_double(r.loss) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& rows) {
  write_text_file(path, trajectory_csv(rows));
}

std::vector<TrialRecord> read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kTrajectoryHeader) {
    throw Error(Errc::io, path.string() + ": missing trajectory header");
  }
  std::vector<TrialRecord> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) {
      throw Error(Errc::io, path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
    }
    TrialRecord row;
    row.trial = static_cast<int>(parse_int(f[0]));
    row.record.epoch = static_cast<int>(parse_int(f[1]));
    row.record.iter = parse_int(f[2]);
    row.record.inner_aa = parse_double(f[3]);
    row.record.phi = parse_double(f[4]);
    row.record.loss = parse_double(f[5]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pgd
