#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scatterkit::app {

/// 12 significant digits, the CSV precision. NaN and absent values print empty.
std::string csv_number(double x);
std::string csv_number(const std::optional<double>& x);

/// Creates the directory (and parents); Error(io) on failure.
void ensure_directory(const std::filesystem::path& dir);

/// Writes the whole file or throws Error(io).
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Least-squares slope of log(y) against log(x) over the positive pairs.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace scatterkit::app
