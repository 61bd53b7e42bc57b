// Export of real maps: 16-bit big-endian binary PGM with a scale sidecar,
// and RFC-4180 CSV.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ghostturb/grid.hpp"

namespace ghostturb {

/// Linear map used for a 16-bit PGM: value = minimum + (maximum - minimum) * pixel / 65535.
struct PgmScale {
  double minimum = 0.0;
  double maximum = 0.0;
};

/// Writes `path` (P5, maxval 65535, first row = largest y) and
/// `<stem>.scale.txt` next to it. Returns the scale used.
PgmScale write_pgm16(const RealMap& map, const std::filesystem::path& path);

struct Pgm16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;  ///< file order
};
Pgm16 read_pgm16(const std::filesystem::path& path);

std::filesystem::path scale_sidecar_path(const std::filesystem::path& pgm_path);

/// Shortest round-trippable decimal form of a double.
std::string format_number(double value);

/// One RFC-4180 record (CRLF terminated); fields quoted when needed.
std::string csv_record(const std::vector<std::string>& fields);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// "x,y,value" per pixel, row-major from the lowest y.
void write_map_csv(const RealMap& map, const std::filesystem::path& path);

}  // namespace ghostturb
