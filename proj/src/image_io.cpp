#include "ghostturb/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace ghostturb {

std::filesystem::path scale_sidecar_path(const std::filesystem::path& pgm_path) {
  auto p = pgm_path;
  p.replace_extension(".scale.txt");
  return p;
}

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

PgmScale write_pgm16(const RealMap& map, const std::filesystem::path& path) {
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  PgmScale scale{*lo, *hi};
  const double span = scale.maximum - scale.minimum;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("io: cannot write " + path.string());
  const int w = map.grid.nx();
  const int h = map.grid.ny();
  out << "P5\n" << w << " " << h << "\n65535\n";
  std::vector<char> row(static_cast<std::size_t>(w) * 2);
  for (int j = h - 1; j >= 0; --j) {
    for (int i = 0; i < w; ++i) {
      const double v = map.at(i, j);
      const double t = span > 0.0 ? (v - scale.minimum) / span : 0.0;
      const auto px = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
      row[2 * i] = static_cast<char>(px >> 8);
      row[2 * i + 1] = static_cast<char>(px & 0xff);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw ValidationError("io: failed writing " + path.string());

  std::ofstream side(scale_sidecar_path(path));
  side << "# value = minimum + (maximum - minimum) * pixel / 65535; first row is the largest y\n"
       << "minimum " << format_number(scale.minimum) << "\n"
       << "maximum " << format_number(scale.maximum) << "\n"
       << "pitch " << format_number(map.grid.pitch()) << "\n"
       << "center_x " << format_number(map.grid.center().x) << "\n"
       << "center_y " << format_number(map.grid.center().y) << "\n";
  if (!side) throw ValidationError("io: failed writing scale sidecar for " + path.string());
  return scale;
}

Pgm16 read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("io: cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  Pgm16 img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 65535 || img.width < 1 || img.height < 1) {
    throw ValidationError("io: " + path.string() + " is not a 16-bit binary PGM");
  }
  in.get();
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.width) * img.height * 2);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ValidationError("io: truncated PGM " + path.string());
  }
  img.pixels.resize(raw.size() / 2);
  for (std::size_t n = 0; n < img.pixels.size(); ++n) {
    img.pixels[n] = static_cast<std::uint16_t>((raw[2 * n] << 8) | raw[2 * n + 1]);
  }
  return img;
}

std::string csv_record(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t n = 0; n < fields.size(); ++n) {
    if (n) line += ',';
    const auto& f = fields[n];
    if (f.find_first_of(",\"\r\n") != std::string::npos) {
      line += '"';
      for (char c : f) {
        if (c == '"') line += '"';
        line += c;
      }
      line += '"';
    } else {
      line += f;
    }
  }
  line += "\r\n";
  return line;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("io: cannot write " + path.string());
  out << csv_record(header);
  for (const auto& r : rows) out << csv_record(r);
  if (!out) throw ValidationError("io: failed writing " + path.string());
}

void write_map_csv(const RealMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("io: cannot write " + path.string());
  out << csv_record({"x", "y", "value"});
  for (int j = 0; j < map.grid.ny(); ++j) {
    for (int i = 0; i < map.grid.nx(); ++i) {
      out << csv_record({format_number(map.grid.x(i)), format_number(map.grid.y(j)), format_number(map.at(i, j))});
    }
  }
  if (!out) throw ValidationError("io: failed writing " + path.string());
}

}  // namespace ghostturb
