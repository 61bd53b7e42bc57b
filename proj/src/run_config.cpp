#include "ghostturb/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "ghostturb/image_io.hpp"

namespace ghostturb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size() || n < 0) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("config: '" + key + "' expects a comma-separated list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"wavelength", [](RunConfig& c, auto& k, auto& v) { c.wavelength = to_double(k, v); }},
      {"path_length", [](RunConfig& c, auto& k, auto& v) { c.path_length = to_double(k, v); }},
      {"source_diameter", [](RunConfig& c, auto& k, auto& v) { c.source_diameter = to_double(k, v); }},
      {"source_pitch", [](RunConfig& c, auto& k, auto& v) { c.source_pitch = to_double(k, v); }},
      {"mean_power", [](RunConfig& c, auto& k, auto& v) { c.mean_power = to_double(k, v); }},
      {"cn2", [](RunConfig& c, auto& k, auto& v) { c.cn2 = to_double(k, v); }},
      {"profile_file",
       [](RunConfig& c, auto&, auto& v) { c.profile = CnSquaredProfile::load(c.resolve(v)).segments(); }},
      {"rho0", [](RunConfig& c, auto& k, auto& v) { c.rho0_override = to_double(k, v); }},
      {"rho0_mm", [](RunConfig& c, auto& k, auto& v) { c.rho0_override = to_double(k, v) * 1e-3; }},
      {"screen_fraction", [](RunConfig& c, auto& k, auto& v) { c.screen_fraction = to_double(k, v); }},
      {"paths_independent", [](RunConfig& c, auto& k, auto& v) { c.paths_independent = to_bool(k, v); }},
      {"screen_pitch", [](RunConfig& c, auto& k, auto& v) { c.screen_pitch = to_double(k, v); }},
      {"mask", [](RunConfig& c, auto&, auto& v) { c.mask = v; }},
      {"mask_x", [](RunConfig& c, auto& k, auto& v) { c.mask_x = to_double(k, v); }},
      {"mask_y", [](RunConfig& c, auto& k, auto& v) { c.mask_y = to_double(k, v); }},
      {"slit_width", [](RunConfig& c, auto& k, auto& v) { c.slit_width = to_double(k, v); }},
      {"slit_separation", [](RunConfig& c, auto& k, auto& v) { c.slit_separation = to_double(k, v); }},
      {"slit_height", [](RunConfig& c, auto& k, auto& v) { c.slit_height = to_double(k, v); }},
      {"bar_width", [](RunConfig& c, auto& k, auto& v) { c.bar_width = to_double(k, v); }},
      {"object_n", [](RunConfig& c, auto& k, auto& v) { c.object_n = static_cast<int>(to_integer(k, v)); }},
      {"object_pitch", [](RunConfig& c, auto& k, auto& v) { c.object_pitch = to_double(k, v); }},
      {"reference_n", [](RunConfig& c, auto& k, auto& v) { c.reference_n = static_cast<int>(to_integer(k, v)); }},
      {"reference_pitch", [](RunConfig& c, auto& k, auto& v) { c.reference_pitch = to_double(k, v); }},
      {"frames", [](RunConfig& c, auto& k, auto& v) { c.frames = static_cast<std::size_t>(to_integer(k, v)); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_integer(k, v)); }},
      {"workers", [](RunConfig& c, auto& k, auto& v) { c.workers = static_cast<unsigned>(to_integer(k, v)); }},
      {"output", [](RunConfig& c, auto&, auto& v) { c.output = v; }},
      {"compare_rho0_mm", [](RunConfig& c, auto& k, auto& v) { c.compare_rho0_mm = to_list(k, v); }},
      {"compare_tolerance", [](RunConfig& c, auto& k, auto& v) { c.compare_tolerance = to_double(k, v); }},
      {"compare_vacuum_tolerance",
       [](RunConfig& c, auto& k, auto& v) { c.compare_vacuum_tolerance = to_double(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, const std::string& source_name) {
  RunConfig cfg;
  if (auto parent = std::filesystem::path(source_name).parent_path(); !parent.empty()) cfg.base_directory = parent;
  std::string line;
  std::string profile_text;
  bool in_profile = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto stripped = line;
    if (auto hash = stripped.find('#'); hash != std::string::npos) stripped.erase(hash);
    stripped = trim(stripped);
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped == "[profile]") {
        in_profile = true;
        continue;
      }
      throw ConfigError("config: " + source_name + ":" + std::to_string(line_no) + ": unknown section " + stripped);
    }
    if (in_profile && stripped.find('=') == std::string::npos) {
      profile_text += stripped + "\n";
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + source_name + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config: " + source_name + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  if (!profile_text.empty()) {
    std::istringstream ps(profile_text);
    try {
      cfg.profile = CnSquaredProfile::parse(ps, source_name + " [profile]").segments();
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse(in, path.string());
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  auto kv = [&os](const char* key, const std::string& value) { os << key << " = " << value << "\n"; };
  auto num = [](double v) { return format_number(v); };
  kv("wavelength", num(wavelength));
  kv("path_length", num(path_length));
  kv("source_diameter", num(source_diameter));
  kv("source_pitch", num(source_pitch));
  kv("mean_power", num(mean_power));
  kv("cn2", num(cn2));
  if (rho0_override) kv("rho0", num(*rho0_override));
  kv("screen_fraction", num(screen_fraction));
  kv("paths_independent", paths_independent ? "true" : "false");
  kv("screen_pitch", num(screen_pitch));
  kv("mask", mask.rfind("pgm:", 0) == 0 ? "pgm:" + resolve(mask.substr(4)).string() : mask);
  kv("mask_x", num(mask_x));
  kv("mask_y", num(mask_y));
  kv("slit_width", num(slit_width));
  kv("slit_separation", num(slit_separation));
  kv("slit_height", num(slit_height));
  kv("bar_width", num(bar_width));
  kv("object_n", std::to_string(object_n));
  kv("object_pitch", num(object_pitch));
  kv("reference_n", std::to_string(reference_n));
  kv("reference_pitch", num(reference_pitch));
  kv("frames", std::to_string(frames));
  kv("seed", std::to_string(seed));
  kv("workers", std::to_string(workers));
  kv("output", output);
  std::string list;
  for (std::size_t n = 0; n < compare_rho0_mm.size(); ++n) list += (n ? "," : "") + num(compare_rho0_mm[n]);
  kv("compare_rho0_mm", list);
  kv("compare_tolerance", num(compare_tolerance));
  kv("compare_vacuum_tolerance", num(compare_vacuum_tolerance));
  if (!profile.empty()) {
    os << "[profile]\n";
    for (const auto& s : profile) os << num(s.z_start) << " " << num(s.z_end) << " " << num(s.cn2) << "\n";
  }
  return os.str();
}

std::filesystem::path RunConfig::resolve(const std::string& file) const {
  std::filesystem::path p(file);
  if (p.is_absolute()) return p;
  return base_directory / p;
}

void RunConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("config: '") + key + "' must be positive");
  };
  auto non_negative = [](const char* key, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string("config: '") + key + "' must be >= 0");
  };
  positive("wavelength", wavelength);
  positive("path_length", path_length);
  positive("source_diameter", source_diameter);
  non_negative("source_pitch", source_pitch);
  if (source_pitch > source_diameter) {
    throw ConfigError("config: 'source_pitch' " + std::to_string(source_pitch) + " m exceeds 'source_diameter' " +
                      std::to_string(source_diameter) + " m");
  }
  positive("mean_power", mean_power);
  non_negative("cn2", cn2);
  non_negative("screen_pitch", screen_pitch);
  non_negative("object_pitch", object_pitch);
  non_negative("reference_pitch", reference_pitch);
  if (rho0_override && !(*rho0_override > 0.0)) throw ConfigError("config: 'rho0' must be positive or inf");
  if (!(screen_fraction >= 0.0 && screen_fraction <= 1.0)) throw ConfigError("config: 'screen_fraction' must lie in [0, 1]");
  if (object_n < 1 || reference_n < 1) throw ConfigError("config: grid sizes must be >= 1");
  if (frames < 2) throw ConfigError("config: 'frames' must be >= 2 for imaging runs");
  if (!(compare_tolerance > 0.0) || !(compare_vacuum_tolerance > 0.0)) {
    throw ConfigError("config: comparison tolerances must be positive");
  }
  for (double r : compare_rho0_mm) {
    if (!(r > 0.0)) throw ConfigError("config: 'compare_rho0_mm' entries must be positive or inf");
  }
  if (mask.rfind("pgm:", 0) == 0) {
    if (!std::filesystem::exists(resolve(mask.substr(4)))) {
      throw ConfigError("config: mask file " + resolve(mask.substr(4)).string() + " does not exist");
    }
  } else if (mask != "point" && mask != "double_slit" && mask != "three_bar") {
    throw ConfigError("config: unknown mask '" + mask + "' (point, double_slit, three_bar, pgm:<file>)");
  }
  try {
    (void)turbulence_profile();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

CnSquaredProfile RunConfig::turbulence_profile() const {
  if (profile.empty()) return CnSquaredProfile::uniform(path_length, cn2);
  CnSquaredProfile p(profile);
  if (std::abs(p.path_length() - path_length) > 1e-9 * path_length) {
    throw ValidationError("turbulence: profile ends at z = " + format_number(p.path_length()) +
                          " m but path_length is " + format_number(path_length) + " m");
  }
  return p;
}

double RunConfig::rho0() const {
  if (rho0_override) return *rho0_override;
  return coherence_length(turbulence_profile(), wavelength);
}

double RunConfig::resolved_source_pitch() const { return source_pitch > 0.0 ? source_pitch : source_diameter / 16.0; }

double RunConfig::resolved_reference_pitch() const {
  return reference_pitch > 0.0 ? reference_pitch : wavelength * path_length / (5.0 * source_diameter);
}

double RunConfig::resolved_object_pitch() const {
  return object_pitch > 0.0 ? object_pitch : resolved_reference_pitch();
}

unsigned RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

OpticalConfig RunConfig::optics() const { return OpticalConfig(wavelength, path_length); }

SubsourceSet RunConfig::sources() const {
  return make_source_grid(source_diameter, resolved_source_pitch(), mean_power);
}

TurbulenceModel RunConfig::turbulence() const {
  TurbulenceModel m;
  m.rho0 = rho0();
  m.screen_position_fraction = screen_fraction;
  m.paths_independent = paths_independent;
  return m;
}

Grid2D RunConfig::object_grid() const { return Grid2D(object_n, object_n, resolved_object_pitch()); }

Grid2D RunConfig::reference_grid() const { return Grid2D(reference_n, reference_n, resolved_reference_pitch()); }

ObjectMask RunConfig::object_mask() const {
  if (mask == "point") return ObjectMask::point(object_grid(), {mask_x, mask_y});
  if (mask == "double_slit") return ObjectMask::double_slit(object_grid(), slit_width, slit_separation, slit_height);
  if (mask == "three_bar") return ObjectMask::three_bar(object_grid(), bar_width);
  if (mask.rfind("pgm:", 0) == 0) return ObjectMask::from_pgm(resolve(mask.substr(4)), resolved_object_pitch());
  throw ConfigError("config: unknown mask '" + mask + "'");
}

}  // namespace ghostturb
