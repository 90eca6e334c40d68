#include "heatctl/trajectory.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace heatctl {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec; // 40 chars always suffice for shortest form
  return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,norm_y,norm_low,norm_tail,norm_u,V,V1\n";
  for (const Sample& s : tr.samples) {
    os << format_double(s.t) << ',' << format_double(s.norm_y) << ','
       << format_double(s.norm_low) << ',' << format_double(s.norm_tail) << ','
       << format_double(s.norm_u) << ',' << format_double(s.V) << ','
       << format_double(s.V1) << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
  std::ofstream f(path, std::ios::binary); // fixed newline policy across hosts
  if (!f) throw ConfigError("cannot open trajectory output file: " + path);
  write_trajectory_csv(f, tr);
}

} // namespace heatctl
