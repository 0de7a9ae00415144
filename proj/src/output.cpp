#include "scatterkit/app/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "scatterkit/errors.hpp"

namespace scatterkit::app {

std::string csv_number(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string csv_number(const std::optional<double>& x) { return x ? csv_number(*x) : std::string(); }

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::io, "cannot create output directory " + dir.string() +
                                   (ec ? ": " + ec.message() : std::string()));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || den == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / den;
}

}  // namespace scatterkit::app
