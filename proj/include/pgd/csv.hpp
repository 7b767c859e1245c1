#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pgd/optimizers.hpp"

namespace pgd {

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

inline constexpr std::string_view kTrajectoryHeader = "trial,epoch,iter,inner_aa,phi,loss";

struct TrialRecord {
  int trial = 0;
  TrajectoryRecord record;
};

std::string trajectory_csv(const std::vector<TrialRecord>& rows);
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& rows);
std::vector<TrialRecord> read_trajectory_csv(const std::filesystem::path& path);

// Writes `contents` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace pgd
